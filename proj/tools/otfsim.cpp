// otfsim — batch experiment runner for the OTFS ISAC simulation library.
//
// Subcommands: chest-sweep, ber-sweep, sensing-sweep, detect-eval, fnn-train,
// fnn-eval, selftest. Every experiment is a pure function of (config, seed);
// results are written as CSV with schema
//   sweep_name,sweep_value,metric,mean,stderr,trials

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "otfsim/otfsim.hpp"

namespace {

using namespace otfsim;

struct CommonOpts {
  std::string config_path;
  std::string out_path = "out.csv";
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<int> threads;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_path, "INI config file");
  cmd->add_option("--out", o.out_path, "output path");
  cmd->add_option("--seed", o.seed, "master seed override");
  cmd->add_option("--trials", o.trials, "trials-per-point override");
  cmd->add_option("--threads", o.threads, "worker thread count override");
}

SimConfig load(const CommonOpts& o) {
  SimConfig cfg = o.config_path.empty() ? SimConfig{} : load_config(o.config_path);
  if (o.seed) cfg.seed = *o.seed;
  if (o.trials) cfg.trials = *o.trials;
  if (o.threads) cfg.threads = *o.threads;
  cfg.validate();
  return cfg;
}

FnnModel require_model(const SimConfig& cfg) {
  require(!cfg.model_path.empty(),
          "this command needs an FNN model: set [fnn] model_path in the config");
  return load_fnn(cfg.model_path);
}

int run_selftest() {
  int failures = 0;
  auto check = [&](const std::string& name, bool ok) {
    std::cout << (ok ? "PASS " : "FAIL ") << name << '\n';
    if (!ok) ++failures;
  };
  auto rng = make_rng(7);
  for (auto [M, N] : {std::pair{4, 4}, {8, 4}, {16, 8}}) {
    FrameGeometry g(M, N, 15e3, 5e9);
    Vec v = complex_gaussian(rng, g.MN());
    double a = 0.73, l = 1.37, k = -0.8;
    Vec qv = apply_q(g, a, v, QMode::kForward);
    check("Q unitary " + std::to_string(M) + "x" + std::to_string(N),
          std::abs(qv.norm() - v.norm()) < 1e-10 * v.norm());
    Vec back = apply_q(g, a, qv, QMode::kAdjoint);
    check("Q adjoint round-trip", (back - v).norm() < 1e-10 * v.norm());
    Vec tv = apply_t(g, l, k, v);
    check("T unitary", std::abs(tv.norm() - v.norm()) < 1e-10 * v.norm());
    check("T adjoint round-trip", (apply_t(g, l, k, tv, true) - v).norm() < 1e-10 * v.norm());
  }
  {
    FrameGeometry g(8, 4, 15e3, 5e9);
    PathSet ps;
    ps.paths.emplace_back(cxd(0.6, -0.3), 1.3, -0.7);
    ps.paths.emplace_back(cxd(-0.2, 0.5), 3.8, 1.2);
    ps.normalize_gains();
    Mat H = dense_channel_matrix(ps, g, ChannelDomain::kDelayDoppler);
    DdChannelOperator op(g, ps);
    Vec v = complex_gaussian(rng, g.MN());
    check("fast vs dense H_DD", (H * v - op.forward(v)).norm() < 1e-10 * v.norm());
    check("Gram vs dense Frobenius",
          std::abs(std::real(channel_frobenius_inner(g, ps, ps)) - H.squaredNorm()) <
              1e-8 * H.squaredNorm());
  }
  {
    FrameGeometry g(8, 4, 15e3, 5e9);
    DdGrid grid(g, Mat::Random(8, 4));
    Vec x = grid.vec();
    Vec rt = demodulate(g, remove_rcp(add_rcp(modulate(grid), 3), 3));
    check("waveform round-trip", (rt - x).norm() < 1e-12 * x.norm());
  }
  std::cout << (failures == 0 ? "selftest: all checks passed\n"
                              : "selftest: FAILURES present\n");
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"OTFS ISAC simulation laboratory"};
  app.require_subcommand(1);

  CommonOpts chest_o, ber_o, sens_o, det_o, train_o, eval_o, self_o;
  std::string ber_csi = "perfect";
  std::string dataset_out;

  auto* chest = app.add_subcommand("chest-sweep", "channel-estimation NMSE sweep");
  add_common(chest, chest_o);
  auto* berc = app.add_subcommand("ber-sweep", "BER / iteration-count sweep");
  add_common(berc, ber_o);
  berc->add_option("--csi", ber_csi, "channel knowledge: perfect|tm|cmfnn")
      ->check(CLI::IsMember({"perfect", "tm", "cmfnn"}));
  auto* sens = app.add_subcommand("sensing-sweep", "radar range/velocity RMSE sweep");
  add_common(sens, sens_o);
  auto* det = app.add_subcommand("detect-eval", "path-count detection evaluation");
  add_common(det, det_o);
  auto* train = app.add_subcommand("fnn-train", "train the path-count classifier");
  add_common(train, train_o);
  train->add_option("--dataset-out", dataset_out, "also cache the dataset (binary + sidecar)");
  auto* eval = app.add_subcommand("fnn-eval", "evaluate a trained classifier");
  add_common(eval, eval_o);
  auto* self = app.add_subcommand("selftest", "run the built-in oracle/property checks");
  add_common(self, self_o);  // accepted for interface uniformity; checks are deterministic

  CLI11_PARSE(app, argc, argv);

  try {
    if (self->parsed()) return run_selftest();

    if (chest->parsed()) {
      SimConfig cfg = load(chest_o);
      SweepResult r = chest_sweep(cfg);
      write_csv(chest_o.out_path, r.sweep_name, r.rows);
      std::cout << "wrote " << chest_o.out_path << '\n';
    } else if (berc->parsed()) {
      SimConfig cfg = load(ber_o);
      if (cfg.axis != SweepAxis::kEbN0 && cfg.axis != SweepAxis::kEpsilon)
        cfg.axis = SweepAxis::kEbN0;  // Eb/N0 unless the config opts into epsilon
      CsiMode mode = ber_csi == "perfect" ? CsiMode::kPerfect
                     : ber_csi == "tm" ? CsiMode::kThreshold : CsiMode::kCorrFnn;
      std::optional<FnnModel> model;
      if (mode == CsiMode::kCorrFnn) model = require_model(cfg);
      SweepResult r = ber_sweep(cfg, mode, model ? &*model : nullptr);
      write_csv(ber_o.out_path, r.sweep_name, r.rows);
      std::cout << "wrote " << ber_o.out_path << '\n';
    } else if (sens->parsed()) {
      SimConfig cfg = load(sens_o);
      cfg.axis = SweepAxis::kSnrRad;
      SweepResult r = sensing_sweep(cfg);
      write_csv(sens_o.out_path, r.sweep_name, r.rows);
      std::cout << "wrote " << sens_o.out_path << '\n';
    } else if (det->parsed()) {
      SimConfig cfg = load(det_o);
      std::optional<FnnModel> model;
      if (!cfg.model_path.empty()) model = load_fnn(cfg.model_path);
      SweepResult r = detect_eval(cfg, model ? &*model : nullptr);
      write_csv(det_o.out_path, r.sweep_name, r.rows);
      std::cout << "wrote " << det_o.out_path << '\n';
    } else if (train->parsed()) {
      SimConfig cfg = load(train_o);
      if (train_o.seed) cfg.train.seed = *train_o.seed;
      FrameGeometry g = cfg.geometry();
      FnnDataset ds = generate_dataset(cfg.train, g, cfg.estimator.L_max, cfg.N0);
      if (!dataset_out.empty()) {
        save_dataset(ds, dataset_out);
        std::ofstream side(dataset_out + ".txt");
        side << "samples_per_level=" << cfg.train.samples_per_level << '\n'
             << "snr_levels_db=";
        for (std::size_t i = 0; i < cfg.train.snr_levels_db.size(); ++i)
          side << (i ? "," : "") << cfg.train.snr_levels_db[i];
        side << '\n' << "M=" << cfg.M << "\nN=" << cfg.N << "\nL_max=" << cfg.estimator.L_max
             << "\nseed=" << cfg.train.seed << '\n';
      }
      TrainResult tr = fnn_train(ds, cfg.train, g);
      save_fnn(tr.model, train_o.out_path);
      std::cout << "trained " << cfg.train.epochs << " epochs; final loss "
                << tr.epoch_loss.back() << "; validation accuracy "
                << tr.validation_accuracy << "; wrote " << train_o.out_path << '\n';
    } else if (eval->parsed()) {
      SimConfig cfg = load(eval_o);
      FnnModel model = require_model(cfg);
      FrameGeometry g = cfg.geometry();
      TrainConfig ecfg = cfg.train;
      ecfg.seed = splitmix64(cfg.seed ^ 0xe7a1ULL);  // held-out evaluation draw
      FnnDataset ds = generate_dataset(ecfg, g, cfg.estimator.L_max, cfg.N0);
      std::size_t correct = 0;
      double abs_err = 0;
      for (Eigen::Index c = 0; c < ds.features.cols(); ++c) {
        int ph = estimate_P(fnn_forward(model, ds.features.col(c)), model.classes);
        correct += ph == ds.labels[static_cast<std::size_t>(c)];
        abs_err += std::abs(ph - ds.labels[static_cast<std::size_t>(c)]);
      }
      double n = static_cast<double>(ds.features.cols());
      std::vector<MetricRow> rows{
          {0.0, "accuracy", static_cast<double>(correct) / n, 0.0, static_cast<long>(n)},
          {0.0, "mean_abs_p_error", abs_err / n, 0.0, static_cast<long>(n)}};
      write_csv(eval_o.out_path, "fnn_eval", rows);
      std::cout << "wrote " << eval_o.out_path << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
