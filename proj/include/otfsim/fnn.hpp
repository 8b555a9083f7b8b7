#pragma once

/**
 * @file fnn.hpp
 * @brief Feed-forward path-count classifier trained from scratch.
 *
 * Architecture: [MN, MN/4, MN/8, C] with ReLU hidden activations and a
 * softmax output over the class set (contiguous path counts, default
 * {2,3,4,5}). Input features are |y| of a received pilot frame. Training is
 * plain mini-batch gradient descent on the cross-entropy loss, with the
 * learning rate decayed by 0.9 every 50 epochs. Loss and softmax use the
 * log-sum-exp form for numeric stability.
 *
 * Model file format (version 1, little-endian):
 *   magic "OFNN" | u32 version | u32 n_layers | u32 sizes[n_layers]
 *   | u32 n_classes | i32 classes[n_classes]
 *   | per layer: f64 W row-major (out x in), f64 b (out)
 */

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "otfsim/channel.hpp"
#include "otfsim/common.hpp"
#include "otfsim/frame.hpp"
#include "otfsim/rng.hpp"
#include "otfsim/waveform.hpp"

namespace otfsim {

struct FnnModel {
  std::vector<int> sizes;    ///< layer widths, input first
  std::vector<RMat> W;       ///< W[i]: sizes[i+1] x sizes[i]
  std::vector<RVec> b;       ///< b[i]: sizes[i+1]
  std::vector<int> classes;  ///< class values, ascending

  int input_dim() const { return sizes.front(); }
  int class_count() const { return sizes.back(); }

  void validate() const {
    require(sizes.size() >= 2, "FnnModel: need at least input and output layers");
    require(W.size() == sizes.size() - 1 && b.size() == W.size(),
            "FnnModel: weight/bias count must match layer count");
    for (std::size_t i = 0; i < W.size(); ++i)
      require(W[i].rows() == sizes[i + 1] && W[i].cols() == sizes[i] &&
                  b[i].size() == sizes[i + 1],
              "FnnModel: weight dimensions do not chain");
    require(static_cast<int>(classes.size()) == sizes.back(),
            "FnnModel: class set size must equal output width");
  }
};

/// Standard architecture for a given grid size and class set.
inline FnnModel make_fnn(int MN, std::vector<int> classes, std::uint64_t seed) {
  require(MN >= 8, "make_fnn: input dimension too small");
  require(!classes.empty(), "make_fnn: class set must be non-empty");
  FnnModel m;
  m.sizes = {MN, MN / 4, MN / 8, static_cast<int>(classes.size())};
  m.classes = std::move(classes);
  auto rng = make_rng(seed);
  for (std::size_t i = 0; i + 1 < m.sizes.size(); ++i) {
    // Fan-in-scaled Gaussian init (He-style) for the ReLU stack.
    std::normal_distribution<double> nd(0.0, std::sqrt(2.0 / m.sizes[i]));
    RMat w(m.sizes[i + 1], m.sizes[i]);
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = nd(rng);
    m.W.push_back(std::move(w));
    m.b.push_back(RVec::Zero(m.sizes[i + 1]));
  }
  return m;
}

namespace detail {

/// Stable softmax via max subtraction.
inline RVec softmax(const RVec& logits) {
  double mx = logits.maxCoeff();
  RVec e = (logits.array() - mx).exp();
  return e / e.sum();
}

/// Stable cross-entropy -log p[label] = logsumexp(logits) - logits[label].
inline double cross_entropy(const RVec& logits, int label_idx) {
  double mx = logits.maxCoeff();
  double lse = mx + std::log((logits.array() - mx).exp().sum());
  return lse - logits[label_idx];
}

}  // namespace detail

/// Forward pass to output logits (pre-softmax).
inline RVec fnn_logits(const FnnModel& m, const RVec& features) {
  require(features.size() == m.input_dim(), "fnn_forward: feature length mismatch");
  RVec a = features;
  for (std::size_t i = 0; i < m.W.size(); ++i) {
    a = m.W[i] * a + m.b[i];
    if (i + 1 < m.W.size()) a = a.cwiseMax(0.0);  // ReLU on hidden layers
  }
  return a;
}

/// Forward pass to class probabilities (softmax output).
inline RVec fnn_forward(const FnnModel& m, const RVec& features) {
  return detail::softmax(fnn_logits(m, features));
}

/// argmax_c p[c]; ties resolve to the smaller class value (conservative).
inline int estimate_P(const RVec& p, const std::vector<int>& classes) {
  require(p.size() == static_cast<Eigen::Index>(classes.size()),
          "estimate_P: probability/class size mismatch");
  int best = 0;
  for (Eigen::Index i = 1; i < p.size(); ++i)
    if (p[i] > p[best]) best = static_cast<int>(i);
  return classes[static_cast<std::size_t>(best)];
}

struct FnnDataset {
  RMat features;            ///< input_dim x sample_count, elementwise >= 0
  std::vector<int> labels;  ///< true path counts (class values)
};

struct TrainConfig {
  int epochs = 200;
  int batch_size = 32;
  double learning_rate = 0.001;
  double decay_factor = 0.9;
  int decay_period = 50;  ///< epochs between decays
  std::vector<double> snr_levels_db = {5.0, 10.0, 15.0};
  int samples_per_level = 6000;
  std::vector<int> classes = {2, 3, 4, 5};
  double validation_fraction = 0.1;
  std::uint64_t seed = 1;

  void validate() const {
    require(epochs >= 1 && batch_size >= 1 && samples_per_level >= 1,
            "TrainConfig: counts must be positive");
    require(learning_rate > 0, "TrainConfig: learning rate must be positive");
    require(decay_factor > 0 && decay_period >= 1, "TrainConfig: invalid decay schedule");
    require(!classes.empty(), "TrainConfig: class set must be non-empty");
    require(validation_fraction >= 0 && validation_fraction < 1,
            "TrainConfig: validation fraction must be in [0,1)");
  }

  double lr_at_epoch(int epoch) const {
    return learning_rate * std::pow(decay_factor, epoch / decay_period);
  }
};

/// Labeled |y| features: pilot frames through random channels with a uniform
/// PDP, P ~ U over the class set, Jakes Dopplers, at the configured pilot SNR
/// levels. Deterministic in the config seed.
inline FnnDataset generate_dataset(const TrainConfig& cfg, const FrameGeometry& g,
                                   int L_max, double N0 = 1.0) {
  cfg.validate();
  const int MN = g.MN();
  auto rng = make_rng(cfg.seed);
  std::uniform_int_distribution<std::size_t> pick_class(0, cfg.classes.size() - 1);
  std::uniform_real_distribution<double> uni_delay(0.0, static_cast<double>(L_max));
  std::uniform_real_distribution<double> uni_angle(0.0, 2.0 * kPi);
  std::normal_distribution<double> nd(0.0, 1.0 / std::sqrt(2.0));
  double k_max = g.f_c > 0 ? 500.0 / 3.6 * g.f_c / kSpeedOfLight / g.doppler_res()
                           : static_cast<double>(g.N) / 8.0;
  PilotSpec pilot_proto = centered_pilot(g, 1.0);
  std::size_t total = cfg.snr_levels_db.size() * static_cast<std::size_t>(cfg.samples_per_level);
  FnnDataset ds;
  ds.features.resize(MN, static_cast<Eigen::Index>(total));
  ds.labels.resize(total);
  std::size_t idx = 0;
  for (double snr_db : cfg.snr_levels_db) {
    double E_p = pilot_energy_for_snr(g, snr_db, N0);
    PilotSpec pilot(pilot_proto.m_p, pilot_proto.n_p, E_p);
    Vec x_p = make_pilot_frame(pilot, g).vec();
    for (int s = 0; s < cfg.samples_per_level; ++s, ++idx) {
      int P = cfg.classes[pick_class(rng)];
      PathSet paths;
      for (int i = 0; i < P; ++i) {
        cxd gain(nd(rng), nd(rng));  // uniform PDP: equal average powers
        double l = i == 0 ? 0.0 : uni_delay(rng);
        double k = k_max * std::cos(uni_angle(rng));
        paths.paths.emplace_back(gain, l, k);
      }
      paths.normalize_gains();
      Vec y = apply_channel(paths, g, x_p) + complex_gaussian(rng, MN, N0);
      ds.features.col(static_cast<Eigen::Index>(idx)) = y.cwiseAbs();
      ds.labels[idx] = P;
    }
  }
  return ds;
}

struct TrainResult {
  FnnModel model;
  std::vector<double> epoch_loss;  ///< mean training loss per epoch
  double validation_accuracy = 0;
};

namespace detail {

struct FnnGradients {
  std::vector<RMat> dW;
  std::vector<RVec> db;
};

/// Backprop for one sample; returns the loss and accumulates gradients.
inline double fnn_backprop(const FnnModel& m, const RVec& x, int label_idx,
                           FnnGradients& grad) {
  std::vector<RVec> acts;  // post-activation per layer, input first
  acts.push_back(x);
  RVec a = x;
  for (std::size_t i = 0; i < m.W.size(); ++i) {
    a = m.W[i] * a + m.b[i];
    if (i + 1 < m.W.size()) a = a.cwiseMax(0.0);
    acts.push_back(a);
  }
  double loss = cross_entropy(acts.back(), label_idx);
  RVec delta = softmax(acts.back());
  delta[label_idx] -= 1.0;  // d loss / d logits
  for (std::size_t i = m.W.size(); i-- > 0;) {
    grad.dW[i] += delta * acts[i].transpose();
    grad.db[i] += delta;
    if (i > 0) {
      delta = m.W[i].transpose() * delta;
      // ReLU gate: the stored activation is already post-ReLU.
      for (Eigen::Index r = 0; r < delta.size(); ++r)
        if (acts[i][r] <= 0.0) delta[r] = 0.0;
    }
  }
  return loss;
}

}  // namespace detail

/// Mini-batch gradient-descent training with per-epoch shuffling; the last
/// validation_fraction of a shuffled copy of the data is held out.
inline TrainResult fnn_train(const FnnDataset& ds, const TrainConfig& cfg,
                             const FrameGeometry& g) {
  cfg.validate();
  require(ds.features.cols() > 0, "fnn_train: dataset must be non-empty");
  require(ds.features.rows() == g.MN(), "fnn_train: feature dimension mismatch");
  TrainResult res;
  res.model = make_fnn(g.MN(), cfg.classes, splitmix64(cfg.seed));
  FnnModel& m = res.model;
  auto class_index = [&](int label) {
    for (std::size_t i = 0; i < cfg.classes.size(); ++i)
      if (cfg.classes[i] == label) return static_cast<int>(i);
    throw std::invalid_argument("fnn_train: label outside the class set");
  };

  auto rng = make_rng(splitmix64(cfg.seed ^ 0x5eedULL));
  std::vector<Eigen::Index> order(static_cast<std::size_t>(ds.features.cols()));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  auto n_val = static_cast<std::size_t>(cfg.validation_fraction * order.size());
  std::size_t n_train = order.size() - n_val;
  require(n_train >= 1, "fnn_train: no training samples after the validation split");

  detail::FnnGradients grad;
  for (std::size_t i = 0; i < m.W.size(); ++i) {
    grad.dW.emplace_back(RMat::Zero(m.W[i].rows(), m.W[i].cols()));
    grad.db.emplace_back(RVec::Zero(m.b[i].size()));
  }

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double lr = cfg.lr_at_epoch(epoch);
    std::shuffle(order.begin(), order.begin() + static_cast<long>(n_train), rng);
    double epoch_loss = 0;
    for (std::size_t start = 0; start < n_train; start += cfg.batch_size) {
      std::size_t stop = std::min(n_train, start + cfg.batch_size);
      for (auto& gw : grad.dW) gw.setZero();
      for (auto& gb : grad.db) gb.setZero();
      for (std::size_t s = start; s < stop; ++s) {
        Eigen::Index col = order[s];
        epoch_loss += detail::fnn_backprop(
            m, ds.features.col(col), class_index(ds.labels[static_cast<std::size_t>(col)]),
            grad);
      }
      double scale = lr / static_cast<double>(stop - start);
      for (std::size_t i = 0; i < m.W.size(); ++i) {
        m.W[i] -= scale * grad.dW[i];
        m.b[i] -= scale * grad.db[i];
      }
    }
    epoch_loss /= static_cast<double>(n_train);
    if (!std::isfinite(epoch_loss))
      throw std::runtime_error("fnn_train: loss became non-finite at epoch " +
                               std::to_string(epoch) + "; reduce the learning rate");
    res.epoch_loss.push_back(epoch_loss);
  }

  if (n_val > 0) {
    std::size_t correct = 0;
    for (std::size_t s = n_train; s < order.size(); ++s) {
      Eigen::Index col = order[s];
      RVec p = fnn_forward(m, ds.features.col(col));
      if (estimate_P(p, m.classes) == ds.labels[static_cast<std::size_t>(col)]) ++correct;
    }
    res.validation_accuracy = static_cast<double>(correct) / static_cast<double>(n_val);
  }
  return res;
}

// ---------- model persistence ----------

namespace detail {

template <typename T>
void write_pod(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  require(static_cast<bool>(is), "model file: unexpected end of stream");
  return v;
}

}  // namespace detail

inline void save_fnn(const FnnModel& m, const std::string& path) {
  m.validate();
  std::ofstream os(path, std::ios::binary);
  require(static_cast<bool>(os), "save_fnn: cannot open " + path);
  os.write("OFNN", 4);
  detail::write_pod<std::uint32_t>(os, 1);  // format version
  detail::write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(m.sizes.size()));
  for (int s : m.sizes) detail::write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(s));
  detail::write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(m.classes.size()));
  for (int c : m.classes) detail::write_pod<std::int32_t>(os, c);
  for (std::size_t i = 0; i < m.W.size(); ++i) {
    for (Eigen::Index r = 0; r < m.W[i].rows(); ++r)
      for (Eigen::Index c = 0; c < m.W[i].cols(); ++c)
        detail::write_pod<double>(os, m.W[i](r, c));
    for (Eigen::Index r = 0; r < m.b[i].size(); ++r)
      detail::write_pod<double>(os, m.b[i][r]);
  }
  require(static_cast<bool>(os), "save_fnn: write failed for " + path);
}

inline FnnModel load_fnn(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  require(static_cast<bool>(is), "load_fnn: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  require(static_cast<bool>(is) && std::string(magic, 4) == "OFNN",
          "load_fnn: bad magic in " + path);
  auto version = detail::read_pod<std::uint32_t>(is);
  require(version == 1, "load_fnn: unsupported format version");
  FnnModel m;
  auto n_layers = detail::read_pod<std::uint32_t>(is);
  require(n_layers >= 2 && n_layers <= 64, "load_fnn: implausible layer count");
  for (std::uint32_t i = 0; i < n_layers; ++i)
    m.sizes.push_back(static_cast<int>(detail::read_pod<std::uint32_t>(is)));
  auto n_classes = detail::read_pod<std::uint32_t>(is);
  for (std::uint32_t i = 0; i < n_classes; ++i)
    m.classes.push_back(detail::read_pod<std::int32_t>(is));
  for (std::size_t i = 0; i + 1 < m.sizes.size(); ++i) {
    RMat w(m.sizes[i + 1], m.sizes[i]);
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = detail::read_pod<double>(is);
    RVec bb(m.sizes[i + 1]);
    for (Eigen::Index r = 0; r < bb.size(); ++r) bb[r] = detail::read_pod<double>(is);
    m.W.push_back(std::move(w));
    m.b.push_back(std::move(bb));
  }
  m.validate();
  return m;
}

/// Dataset cache (version 1, little-endian):
///   magic "OFDS" | u32 version | u32 feature_dim | u64 sample_count
///   | i32 labels[count] | f64 features column-major (dim x count)
inline void save_dataset(const FnnDataset& ds, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  require(static_cast<bool>(os), "save_dataset: cannot open " + path);
  os.write("OFDS", 4);
  detail::write_pod<std::uint32_t>(os, 1);
  detail::write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(ds.features.rows()));
  detail::write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(ds.features.cols()));
  for (int l : ds.labels) detail::write_pod<std::int32_t>(os, l);
  for (Eigen::Index c = 0; c < ds.features.cols(); ++c)
    for (Eigen::Index r = 0; r < ds.features.rows(); ++r)
      detail::write_pod<double>(os, ds.features(r, c));
  require(static_cast<bool>(os), "save_dataset: write failed for " + path);
}

inline FnnDataset load_dataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  require(static_cast<bool>(is), "load_dataset: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  require(static_cast<bool>(is) && std::string(magic, 4) == "OFDS",
          "load_dataset: bad magic in " + path);
  require(detail::read_pod<std::uint32_t>(is) == 1, "load_dataset: unsupported version");
  auto dim = detail::read_pod<std::uint32_t>(is);
  auto count = detail::read_pod<std::uint64_t>(is);
  FnnDataset ds;
  ds.labels.resize(count);
  for (auto& l : ds.labels) l = detail::read_pod<std::int32_t>(is);
  ds.features.resize(dim, static_cast<Eigen::Index>(count));
  for (Eigen::Index c = 0; c < ds.features.cols(); ++c)
    for (Eigen::Index r = 0; r < ds.features.rows(); ++r)
      ds.features(r, c) = detail::read_pod<double>(is);
  return ds;
}

}  // namespace otfsim
