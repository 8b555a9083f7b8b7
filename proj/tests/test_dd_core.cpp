#include <catch2/catch_amalgamated.hpp>

#include "otfsim/dd_operator.hpp"
#include "otfsim/frame.hpp"
#include "oracles.hpp"

using namespace otfsim;

namespace {
const FrameGeometry kGeoms[] = {FrameGeometry(4, 4, 15e3), FrameGeometry(8, 4, 15e3),
                                FrameGeometry(16, 8, 15e3)};
}

TEST_CASE("frame geometry invariants and validation") {
  FrameGeometry g(64, 16, 15e3, 5e9);
  CHECK(g.T() == Catch::Approx(1.0 / 15e3));
  // Resolution consistency: dtau * dnu * M * N = 1.
  CHECK(g.delay_res() * g.doppler_res() * g.M * g.N == Catch::Approx(1.0).margin(1e-12));
  CHECK_THROWS_AS(FrameGeometry(0, 4, 15e3), std::invalid_argument);
  CHECK_THROWS_AS(FrameGeometry(4, 0, 15e3), std::invalid_argument);
  CHECK_THROWS_AS(FrameGeometry(4, 4, 0.0), std::invalid_argument);
}

TEST_CASE("path parameter decomposition") {
  PathParams p(cxd(1, 0), 2.3, -1.4);
  CHECK(p.L() == 2);
  CHECK(p.K() == -1);
  CHECK(p.l_frac() == Catch::Approx(0.3));
  CHECK(p.k_frac() == Catch::Approx(-0.4));
  CHECK_THROWS_AS(PathParams(cxd(1, 0), -0.1, 0.0), std::invalid_argument);
  // Rounding half away from zero (inputs exactly at .5 are avoided elsewhere).
  CHECK(PathParams(cxd(1, 0), 2.5, 0.0).L() == 3);
  CHECK(PathParams(cxd(1, 0), 0.0, -2.5).K() == -3);
}

TEST_CASE("apply_q trivial cases") {
  FrameGeometry g1(1, 1, 15e3);
  Vec v(1);
  v[0] = cxd(0.3, -0.8);
  for (auto mode : {QMode::kForward, QMode::kAdjoint, QMode::kConjugate, QMode::kTranspose}) {
    Vec r = apply_q(g1, 1.7, v, mode);
    CHECK(std::abs(r[0] - v[0]) < 1e-14);  // all factor matrices are scalar 1
  }
}

TEST_CASE("apply_q norm preservation") {
  auto rng = std::mt19937_64(1);
  for (const auto& g : kGeoms) {
    Vec v = oracle::random_complex(rng, g.MN());
    Vec r = apply_q(g, 0.37, v, QMode::kForward);
    CHECK(std::abs(r.norm() - v.norm()) < 1e-10 * v.norm());
  }
}

TEST_CASE("apply_q matches the dense construction, all modes") {
  auto rng = std::mt19937_64(2);
  FrameGeometry g(2, 2, 15e3);
  // Basis-vector example, a = 1: first column of the dense 4x4 product.
  Vec e1 = Vec::Zero(4);
  e1[0] = 1.0;
  Mat Qd = oracle::dense_q(g, 1.0);
  CHECK((apply_q(g, 1.0, e1, QMode::kForward) - Qd.col(0)).norm() < 1e-10);

  for (const auto& geo : kGeoms) {
    Vec v = oracle::random_complex(rng, geo.MN());
    for (double a : {0.0, 1.0, -2.0, 0.73, -3.41}) {
      Mat Q = oracle::dense_q(geo, a);
      CHECK((apply_q(geo, a, v, QMode::kForward) - Q * v).norm() < 1e-10 * v.norm());
      CHECK((apply_q(geo, a, v, QMode::kAdjoint) - Q.adjoint() * v).norm() < 1e-10 * v.norm());
      CHECK((apply_q(geo, a, v, QMode::kConjugate) - Q.conjugate() * v).norm() <
            1e-10 * v.norm());
      CHECK((apply_q(geo, a, v, QMode::kTranspose) - Q.transpose() * v).norm() <
            1e-10 * v.norm());
    }
  }
}

TEST_CASE("apply_q error paths") {
  FrameGeometry g(4, 4, 15e3);
  Vec bad(7);
  bad.setZero();
  CHECK_THROWS_AS(apply_q(g, 1.0, bad, QMode::kForward), std::invalid_argument);
  Vec ok = Vec::Zero(16);
  CHECK_THROWS_AS(apply_q(g, std::nan(""), ok, QMode::kForward), std::invalid_argument);
  CHECK_THROWS_AS(apply_q(g, std::numeric_limits<double>::infinity(), ok, QMode::kForward),
                  std::invalid_argument);
}

TEST_CASE("apply_t identity, unitarity, adjoint round-trip") {
  auto rng = std::mt19937_64(3);
  for (const auto& g : kGeoms) {
    Vec v = oracle::random_complex(rng, g.MN());
    // l = k = 0: T is the identity (G^2 = I and F symmetric unitary).
    CHECK((apply_t(g, 0.0, 0.0, v) - v).norm() < 1e-10 * v.norm());
    Vec tv = apply_t(g, 1.37, -0.8, v);
    CHECK(std::abs(tv.norm() - v.norm()) < 1e-10 * v.norm());
    CHECK((apply_t(g, 1.37, -0.8, tv, true) - v).norm() < 1e-10 * v.norm());
  }
}

TEST_CASE("apply_t matches dense composition and Corollary-1 form") {
  auto rng = std::mt19937_64(4);
  FrameGeometry g(8, 4, 15e3);
  Vec v = oracle::random_complex(rng, g.MN());
  Mat Td = oracle::dense_t(g, 1.37, -0.8);
  CHECK((apply_t(g, 1.37, -0.8, v) - Td * v).norm() < 1e-10 * v.norm());
  CHECK((apply_t(g, 1.37, -0.8, v, true) - Td.adjoint() * v).norm() < 1e-10 * v.norm());

  // Integer (L, K): T v equals (F_N (x) I) D^K Pi^L (F_N^H (x) I) v.
  Mat A = oracle::kron(oracle::dft_matrix(g.N), Mat::Identity(g.M, g.M));
  for (int L : {0, 1, 3}) {
    for (int K : {-2, 0, 2}) {
      Mat ref = A * oracle::phase_diag(g.MN(), K) * oracle::cyclic_shift(g.MN(), L) *
                A.adjoint();
      CHECK((apply_t(g, double(L), double(K), v) - ref * v).norm() < 1e-10 * v.norm());
    }
  }
}

TEST_CASE("apply_t dimension check") {
  FrameGeometry g(4, 4, 15e3);
  Vec bad = Vec::Zero(5);
  CHECK_THROWS_AS(apply_t(g, 1.0, 1.0, bad), std::invalid_argument);
}

TEST_CASE("channel operator: identity path, dense match, linearity") {
  auto rng = std::mt19937_64(5);
  FrameGeometry g(8, 4, 15e3);
  Vec x = oracle::random_complex(rng, g.MN());

  PathSet ident;
  ident.paths.emplace_back(cxd(1, 0), 0.0, 0.0);
  CHECK((DdChannelOperator(g, ident).forward(x) - x).norm() < 1e-10 * x.norm());

  PathSet two;
  two.paths.emplace_back(cxd(0.8, 0.1), 1.0, 2.0);
  two.paths.emplace_back(cxd(-0.3, 0.4), 3.0, -1.0);
  DdChannelOperator op(g, two);
  Mat H = dense_channel_matrix(two, g, ChannelDomain::kDelayDoppler);
  CHECK((op.forward(x) - H * x).norm() < 1e-10 * x.norm());
  CHECK((op.adjoint(x) - H.adjoint() * x).norm() < 1e-10 * x.norm());

  Vec y = oracle::random_complex(rng, g.MN());
  cxd alpha(0.3, -0.2), beta(1.1, 0.7);
  Vec lhs = op.forward(alpha * x + beta * y);
  Vec rhs = alpha * op.forward(x) + beta * op.forward(y);
  CHECK((lhs - rhs).norm() < 1e-12 * (lhs.norm() + 1));

  CHECK_THROWS_AS(DdChannelOperator(g, PathSet{}), std::invalid_argument);
}

TEST_CASE("dense channel matrix: identity, permutation, column norms, guard") {
  FrameGeometry g(8, 4, 15e3);
  PathSet ident;
  ident.paths.emplace_back(cxd(1, 0), 0.0, 0.0);
  Mat I = dense_channel_matrix(ident, g, ChannelDomain::kDelayDoppler);
  CHECK((I - Mat::Identity(g.MN(), g.MN())).norm() < 1e-10);

  // One integer path (L = 1, K = 0) in the delay-time domain is g * Pi^1.
  PathSet shift;
  shift.paths.emplace_back(cxd(0.5, -0.2), 1.0, 0.0);
  Mat Hdt = dense_channel_matrix(shift, g, ChannelDomain::kDelayTime);
  Mat ref = cxd(0.5, -0.2) * oracle::cyclic_shift(g.MN(), 1);
  CHECK((Hdt - ref).norm() < 1e-12 * ref.norm());

  // Fractional single path: every column has norm |g| (unitary T scaled by g).
  PathSet frac;
  frac.paths.emplace_back(cxd(0.3, 0.4), 2.6, -1.2);
  Mat Hf = dense_channel_matrix(frac, g, ChannelDomain::kDelayDoppler);
  for (Eigen::Index c = 0; c < Hf.cols(); ++c)
    CHECK(Hf.col(c).norm() == Catch::Approx(0.5).margin(1e-10));

  FrameGeometry big(128, 128, 15e3);
  CHECK_THROWS_AS(dense_channel_matrix(frac, big, ChannelDomain::kDelayDoppler),
                  std::invalid_argument);
  CHECK_THROWS_AS(dense_channel_matrix(PathSet{}, g, ChannelDomain::kDelayDoppler),
                  std::invalid_argument);
}

TEST_CASE("unitarity over 100 random parameters") {
  auto rng = std::mt19937_64(6);
  std::uniform_real_distribution<double> uni(-4.0, 4.0);
  for (const auto& g : kGeoms) {
    for (int i = 0; i < 100; ++i) {
      Vec v = oracle::random_complex(rng, g.MN());
      double a = uni(rng);
      CHECK(std::abs(apply_q(g, a, v, QMode::kForward).norm() - v.norm()) < 1e-10 * v.norm());
      double l = std::abs(uni(rng)), k = uni(rng);
      CHECK(std::abs(apply_t(g, l, k, v).norm() - v.norm()) < 1e-10 * v.norm());
    }
  }
}

TEST_CASE("separability: T equals the dense two-parameter matrix") {
  auto rng = std::mt19937_64(7);
  FrameGeometry g(8, 4, 15e3);
  std::uniform_real_distribution<double> uni(-3.0, 3.0);
  for (int i = 0; i < 20; ++i) {
    double l = std::abs(uni(rng)), k = uni(rng);
    Vec v = oracle::random_complex(rng, g.MN());
    Mat Td = oracle::dense_t(g, l, k);
    CHECK((apply_t(g, l, k, v) - Td * v).norm() < 1e-10 * v.norm());
  }
}

TEST_CASE("Corollary-1 equivalence for all integer shifts") {
  FrameGeometry g(8, 4, 15e3);
  const int MN = g.MN();
  for (int L = 0; L < g.M; ++L) {
    for (int K = -g.N; K <= g.N; ++K) {
      PathSet ps;
      ps.paths.emplace_back(cxd(1, 0), double(L), double(K));
      Mat Hdt = dense_channel_matrix(ps, g, ChannelDomain::kDelayTime);
      Mat ref = oracle::phase_diag(MN, K) * oracle::cyclic_shift(MN, L);
      CHECK((Hdt - ref).norm() < 1e-12 * std::sqrt(double(MN)));
    }
  }
}

TEST_CASE("Appendix-A Hadamard formulation of the delay-time channel") {
  auto rng = std::mt19937_64(8);
  FrameGeometry g(16, 8, 15e3);
  std::uniform_real_distribution<double> uni(0.0, 3.0);
  for (int i = 0; i < 10; ++i) {
    cxd gain(uni(rng) - 1.5, uni(rng) - 1.5);
    double l = uni(rng), k = uni(rng) - 1.5;
    Vec s = oracle::random_complex(rng, g.MN());
    PathSet ps;
    ps.paths.emplace_back(gain, l, k);
    Mat Hdt = dense_channel_matrix(ps, g, ChannelDomain::kDelayTime);
    Vec r_ref = oracle::hadamard_single_path(g, gain, l, k, s);
    CHECK((Hdt * s - r_ref).norm() < 1e-10 * r_ref.norm());
  }
}

TEST_CASE("adjoint correctness over 100 random pairs") {
  auto rng = std::mt19937_64(9);
  FrameGeometry g(8, 4, 15e3);
  std::uniform_real_distribution<double> uni(-3.0, 3.0);
  for (int i = 0; i < 100; ++i) {
    Vec v = oracle::random_complex(rng, g.MN());
    Vec w = oracle::random_complex(rng, g.MN());
    double l = std::abs(uni(rng)), k = uni(rng);
    // <T v, w> = <v, T^H w>
    cxd lhs = apply_t(g, l, k, v).dot(w);
    cxd rhs = v.dot(apply_t(g, l, k, w, true));
    CHECK(std::abs(lhs - rhs) < 1e-10 * (std::abs(lhs) + 1.0));
  }
}

TEST_CASE("Frobenius inner product matches the dense computation") {
  auto rng = std::mt19937_64(10);
  FrameGeometry g(8, 4, 15e3);
  std::uniform_real_distribution<double> uni(-2.0, 2.0);
  PathSet a, b;
  for (int i = 0; i < 3; ++i) {
    a.paths.emplace_back(cxd(uni(rng), uni(rng)), std::abs(uni(rng)) + 0.2, uni(rng));
    b.paths.emplace_back(cxd(uni(rng), uni(rng)), std::abs(uni(rng)) + 0.2, uni(rng));
  }
  Mat Ha = dense_channel_matrix(a, g, ChannelDomain::kDelayDoppler);
  Mat Hb = dense_channel_matrix(b, g, ChannelDomain::kDelayDoppler);
  cxd dense = (Hb.adjoint() * Ha).trace();
  cxd fast = channel_frobenius_inner(g, a, b);
  CHECK(std::abs(dense - fast) < 1e-8 * (std::abs(dense) + 1.0));
}

TEST_CASE("path set normalization") {
  PathSet ps;
  ps.paths.emplace_back(cxd(3, 0), 0.0, 0.0);
  ps.paths.emplace_back(cxd(0, 4), 1.0, 1.0);
  ps.normalize_gains();
  CHECK(ps.total_gain_energy() == Catch::Approx(1.0).margin(1e-12));
  PathSet zero;
  zero.paths.emplace_back(cxd(0, 0), 0.0, 0.0);
  CHECK_THROWS_AS(zero.normalize_gains(), std::invalid_argument);
}
