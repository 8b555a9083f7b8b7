#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Eigenvalues>

#include "otfsim/channel.hpp"
#include "otfsim/equalizer.hpp"
#include "oracles.hpp"

using namespace otfsim;

namespace {

PathSet identity_path() {
  PathSet ps;
  ps.paths.emplace_back(cxd(1, 0), 0.0, 0.0);
  return ps;
}

}  // namespace

TEST_CASE("LMMSE: scalar shrinkage, noiseless limit, errors") {
  FrameGeometry g(4, 4, 15e3);
  auto rng = make_rng(1);
  Vec y = complex_gaussian(rng, 16);

  // H = I: x = y / (1 + 1/SNR).
  Mat I = Mat::Identity(16, 16);
  Vec x = lmmse_equalize(y, I, 4.0);
  CHECK((x - y / (1.0 + 0.25)).norm() < 1e-12 * y.norm());

  // SNR -> infinity with a unitary single-path H: x -> H^H y = truth.
  PathSet ps;
  ps.paths.emplace_back(cxd(1, 0), 1.7, -0.4);
  Mat H = dense_channel_matrix(ps, g, ChannelDomain::kDelayDoppler);
  Vec truth = complex_gaussian(rng, 16);
  Vec xl = lmmse_equalize(H * truth, H, 1e12);
  CHECK((xl - truth).norm() < 1e-5 * truth.norm());

  CHECK_THROWS_AS(lmmse_equalize(y, Mat::Identity(8, 8), 4.0), std::invalid_argument);
  CHECK_THROWS_AS(lmmse_equalize(y, I, 0.0), std::invalid_argument);
}

TEST_CASE("IMFC: exact step on the identity channel") {
  FrameGeometry g(4, 4, 15e3);
  auto rng = make_rng(2);
  Vec y = complex_gaussian(rng, 16);
  DdChannelOperator H(g, identity_path());
  EqualizerConfig cfg;
  cfg.alpha0 = 1.0;
  cfg.beta = 0.0;
  cfg.epsilon = 1e-12;
  // M H = I: a single exact step lands on y.
  DetectionResult r = imfc_equalize(y, H, cfg);
  CHECK(r.iterations == 1);
  CHECK((r.x_hat - y).norm() < 1e-12 * y.norm());
}

TEST_CASE("IMFC: operator-application counter contract") {
  FrameGeometry g(8, 4, 15e3, 5e9);
  auto rng = make_rng(3);
  PathSet ps = draw_channel(default_profile(), g, rng);
  DdChannelOperator H(g, ps);
  Vec x = complex_gaussian(rng, g.MN());
  Vec y = H.forward(x);
  EqualizerConfig cfg;
  cfg.safe_mode = true;
  cfg.n_max = 25;
  cfg.epsilon = 0.0;
  DetectionResult r = imfc_equalize(y, H, cfg);
  // Exactly (iterations + 1) forward and (iterations) adjoint applications.
  CHECK(r.forward_applications == r.iterations + 1);
  CHECK(r.adjoint_applications == r.iterations);
  CHECK(r.iterations == 25);  // epsilon = 0 runs to the cap
}

TEST_CASE("IMFC: noiseless convergence and the divergence guard") {
  FrameGeometry g(16, 8, 15e3, 5e9);
  auto rng = make_rng(4);
  // The safe-mode contraction rate is 1 - 1/cond(H)^2 per iteration, so the
  // finite budget bounds the usable condition number; screen the draws.
  auto guarded_draw = [&]() {
    for (;;) {
      PathSet ps = draw_channel(default_profile(), g, rng);
      Mat Hd = operator_matrix(DdChannelOperator(g, ps));
      Eigen::JacobiSVD<Mat> svd(Hd);
      if (svd.singularValues()(0) / svd.singularValues().tail(1)(0) <= 6.0) return ps;
    }
  };
  for (int t = 0; t < 5; ++t) {
    PathSet ps = guarded_draw();
    DdChannelOperator H(g, ps);
    Vec x = complex_gaussian(rng, g.MN());
    Vec y = H.forward(x);
    EqualizerConfig cfg;
    cfg.safe_mode = true;
    cfg.n_max = 2000;
    cfg.epsilon = 1e-9 * y.norm();
    DetectionResult r = imfc_equalize(y, H, cfg);
    CHECK((r.x_hat - x).norm() < 1e-6 * x.norm());
  }

  // Absurd step size triggers the residual-divergence guard.
  PathSet ps = draw_channel(default_profile(), g, rng);
  DdChannelOperator H(g, ps);
  Vec x = complex_gaussian(rng, g.MN());
  Vec y = H.forward(x);
  EqualizerConfig bad;
  bad.alpha0 = 1e4;
  bad.beta = 0.0;
  bad.n_max = 50;
  CHECK_THROWS_AS(imfc_equalize(y, H, bad), std::runtime_error);

  EqualizerConfig invalid;
  invalid.alpha0 = 0.0;
  CHECK_THROWS_AS(imfc_equalize(y, H, invalid), std::invalid_argument);
}

TEST_CASE("spectral radius: identity, scaled path, dense eigen oracle") {
  FrameGeometry g(16, 8, 15e3, 5e9);
  DdChannelOperator I(g, identity_path());
  CHECK(spectral_radius(I, 50) == Catch::Approx(1.0).margin(1e-9));

  PathSet scaled;
  scaled.paths.emplace_back(cxd(0.0, 0.8), 2.3, -1.1);  // |g|^2 = 0.64
  DdChannelOperator S(g, scaled);
  CHECK(spectral_radius(S, 50) == Catch::Approx(0.64).margin(1e-9));

  auto rng = make_rng(5);
  PathSet ps = draw_channel(default_profile(), g, rng);
  DdChannelOperator H(g, ps);
  Mat Hd = dense_channel_matrix(ps, g, ChannelDomain::kDelayDoppler);
  Eigen::SelfAdjointEigenSolver<Mat> es(Hd.adjoint() * Hd);
  double rho_ref = es.eigenvalues().maxCoeff();
  CHECK(spectral_radius(H, 200) == Catch::Approx(rho_ref).margin(1e-6));

  CHECK_THROWS_AS(spectral_radius(H, 0), std::invalid_argument);
}

TEST_CASE("Proposition-1 contraction with a fixed safe step") {
  FrameGeometry g(16, 8, 15e3, 5e9);
  auto rng = make_rng(6);
  PathSet ps = draw_channel(default_profile(), g, rng);
  DdChannelOperator H(g, ps);
  double rho = spectral_radius(H, 200);
  Vec x = complex_gaussian(rng, g.MN());
  Vec y = H.forward(x);
  // Fixed alpha < 2/rho: the error norm contracts across checkpoints.
  EqualizerConfig cfg;
  cfg.alpha0 = 1.0 / rho;
  cfg.beta = 0.0;
  cfg.epsilon = 0.0;
  double prev = x.norm();
  for (int n : {50, 200, 800}) {
    cfg.n_max = n;
    DetectionResult r = imfc_equalize(y, H, cfg);
    double err = (r.x_hat - x).norm();
    CHECK(err < prev);
    prev = err;
  }
}

TEST_CASE("ML detection and BER") {
  Constellation q4(4);
  // Exactly on a constellation point.
  auto hd = ml_detect((Vec(1) << q4.point(2)).finished(), q4);
  CHECK(hd.symbols[0] == q4.point(2));

  // x = 0 is equidistant from all 4-QAM points: the tie rule picks label 00.
  auto tie = ml_detect(Vec::Zero(1), q4);
  CHECK(tie.bits == std::vector<std::uint8_t>{0, 0});
  CHECK(std::abs(tie.symbols[0] - cxd(1, 1) / std::sqrt(2.0)) < 1e-12);

  // Noiseless frame: zero bit errors.
  auto rng = make_rng(7);
  std::uniform_int_distribution<int> bit(0, 1);
  std::vector<std::uint8_t> bits(256);
  for (auto& b : bits) b = static_cast<std::uint8_t>(bit(rng));
  auto det = ml_detect(q4.map(bits), q4);
  CHECK(ber(bits, det.bits) == 0.0);

  std::vector<std::uint8_t> flip(bits);
  for (auto& b : flip) b ^= 1;
  CHECK(ber(bits, flip) == 1.0);
  CHECK_THROWS_AS(ber(bits, std::vector<std::uint8_t>(8)), std::invalid_argument);
}

TEST_CASE("default epsilon operating point") {
  CHECK(default_epsilon(1024, 0.25) == Catch::Approx(std::sqrt(1024.0 * 0.25) / 2.0));
}
