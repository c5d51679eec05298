#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "generators.hpp"
#include "spm.hpp"

using namespace spm;

namespace {

struct MatrixDraw {
  double a;
  std::vector<double> gamma;
  std::vector<double> r;
};

MatrixDraw draw_matrix(draw::Generator& gen) {
  const std::size_t n = gen.integer(1, 8);
  return {gen.uniform(1e-3, 10.0), gen.gamma(n), gen.rates(n)};
}

/// Largest real eigenvalue and its eigenvector (sum 1) from a general dense solver.
std::pair<double, std::vector<double>> eigen_oracle(const Matrix& B) {
  const auto n = static_cast<Eigen::Index>(B.rows());
  Eigen::MatrixXd M(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) M(i, j) = B(i, j);
  }
  Eigen::EigenSolver<Eigen::MatrixXd> es(M);
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < n; ++k) {
    if (es.eigenvalues()(k).real() > es.eigenvalues()(best).real()) best = k;
  }
  Eigen::VectorXd v = es.eigenvectors().col(best).real();
  v /= v.sum();
  return {es.eigenvalues()(best).real(), std::vector<double>(v.data(), v.data() + n)};
}

}  // namespace

TEST(BuildB, ScalarCase) {
  const auto d = build_B(1.0, std::vector<double>{0.3}, std::vector<double>{0.5});
  EXPECT_DOUBLE_EQ(d.B(0, 0), 1.2);
}

TEST(BuildB, TwoStages) {
  const auto d = build_B(2.0, std::vector<double>{0.6, 0.9}, std::vector<double>{0.0, 0.5});
  EXPECT_DOUBLE_EQ(d.B(0, 0), 0.4);
  EXPECT_DOUBLE_EQ(d.B(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(d.B(1, 0), 0.6);
  EXPECT_DOUBLE_EQ(d.B(1, 1), 0.1);
  EXPECT_EQ(d.T(0, 1), 0.0);
  EXPECT_EQ(d.F(1, 0), 0.0);
  EXPECT_EQ(d.F(1, 1), 0.0);
}

TEST(BuildB, Fig2LeftAtFullPopulation) {
  const StageParams p({0.6, 0.7, 0.3}, 1.0);
  const std::vector<double> r{0.2, 0.2, 0.1};
  const auto d = build_B(1.0, p, r);
  const double expected[3][3] = {{0.4 + 0.2, 0.2, 0.1}, {0.6, 0.3, 0.0}, {0.0, 0.7, 0.7}};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(d.B(i, j), expected[i][j], 1e-16) << i << "," << j;
  }
  EXPECT_DOUBLE_EQ(d.transition_radius(), 0.7);
}

TEST(BuildB, RejectsInvalidInput) {
  const std::vector<double> g{0.5, 0.5};
  EXPECT_THROW(build_B(0.0, g, std::vector<double>{0.1, 0.1}), std::invalid_argument);
  EXPECT_THROW(build_B(-1.0, g, std::vector<double>{0.1, 0.1}), std::invalid_argument);
  EXPECT_THROW(build_B(1.0, g, std::vector<double>{0.1, 0.0}), std::invalid_argument);
  EXPECT_THROW(build_B(1.0, g, std::vector<double>{-0.1, 0.1}), std::invalid_argument);
  EXPECT_THROW(build_B(1.0, g, std::vector<double>{0.1}), std::invalid_argument);
}

TEST(Nrv, ScalarCase) {
  EXPECT_NEAR(nrv(build_B(1.0, std::vector<double>{0.3}, std::vector<double>{0.5})), 5.0 / 3.0, 1e-14);
}

TEST(Nrv, ThresholdCaseIsOne) {
  const std::vector<double> g{0.4, 0.7, 0.2};
  const std::vector<double> r{0.1, 0.0, 0.3};
  const double delta = 0.1 / 0.4 + 0.3 / 0.2;
  EXPECT_NEAR(nrv(build_B(1.0 / delta, g, r)), 1.0, 1e-12);
}

TEST(Nrv, Fig2Left) {
  const auto d = build_B(1.0, std::vector<double>{0.6, 0.7, 0.3}, std::vector<double>{0.2, 0.2, 0.1});
  EXPECT_NEAR(nrv(d), 0.2 / 0.6 + 0.2 / 0.7 + 0.1 / 0.3, 1e-14);
  EXPECT_NEAR(nrv(d), 0.952381, 5e-7);
}

TEST(Nrv, ClosedFormOverRandomDraws) {
  draw::Generator gen(31);
  for (int k = 0; k < 1000; ++k) {
    const auto m = draw_matrix(gen);
    const auto d = build_B(m.a, m.gamma, m.r);
    const double closed = m.a * d.delta();
    ASSERT_LE(std::abs(nrv(d) - closed), 1e-10 * closed) << "draw " << k;
  }
}

TEST(R0, FigureScenarios) {
  const auto fig2 = IncidenceModel::exponential({0.2, 0.2, 0.1}, 1.0);
  EXPECT_NEAR(r0(StageParams({0.6, 0.7, 0.3}, 1.0), fig2), 20.0 / 21.0, 1e-15);
  const auto fig3 = IncidenceModel::exponential({0.8, 0.1, 0.1}, 1.0);
  EXPECT_NEAR(r0(StageParams({0.6, 0.9, 0.9}, 1.0), fig3), 14.0 / 9.0, 1e-15);
  EXPECT_NEAR(14.0 / 9.0, 1.555556, 5e-7);
}

TEST(R0, ThresholdIdentity) {
  EXPECT_DOUBLE_EQ(r0(StageParams({0.35}, 1.0), IncidenceModel::exponential({0.35}, 1.0)), 1.0);
}

TEST(R0, ScalesWithPopulation) {
  const auto inc = IncidenceModel::split_exponential({0.5, 0.5}, {0.02, 0.04}, 10.0);
  EXPECT_NEAR(r0(StageParams({0.5, 0.25}, 10.0), inc), 10.0 * (0.01 / 0.5 + 0.02 / 0.25), 1e-14);
}

TEST(Perron, ScalarCase) {
  const auto d = build_B(2.0, std::vector<double>{0.3}, std::vector<double>{0.5});
  const auto p = perron(d);
  EXPECT_EQ(p.v, std::vector<double>{1.0});
  EXPECT_NEAR(p.rho, 1.0 - 0.3 + 2.0 * 0.5, 1e-15);
}

TEST(Perron, TwoByTwoCharacteristicRoot) {
  const auto d = build_B(2.0, std::vector<double>{0.6, 0.9}, std::vector<double>{0.0, 0.5});
  // roots of x^2 - tr x + det with tr = 0.5, det = 0.04 - 0.6 = -0.56
  const double tr = 0.5, det = 0.4 * 0.1 - 1.0 * 0.6;
  const double root = (tr + std::sqrt(tr * tr - 4 * det)) / 2;
  const auto p = perron(d);
  EXPECT_NEAR(p.rho, root, 1e-12);
  EXPECT_NEAR(root, 1.03898669, 1e-8);
  // (B - rho) v = 0 gives v_2 / v_1 = 0.6 / (rho - 0.1)
  const double ratio = 0.6 / (root - 0.1);
  EXPECT_NEAR(p.v[0], 1.0 / (1.0 + ratio), 1e-12);
  EXPECT_NEAR(p.v[1], ratio / (1.0 + ratio), 1e-12);
}

TEST(Perron, AgreesWithDenseEigensolver) {
  draw::Generator gen(32);
  for (int k = 0; k < 300; ++k) {
    const auto m = draw_matrix(gen);
    const auto d = build_B(m.a, m.gamma, m.r);
    const auto p = perron(d);
    const auto [rho, v] = eigen_oracle(d.B);
    ASSERT_NEAR(p.rho, rho, 1e-9 * rho) << "draw " << k;
    for (std::size_t j = 0; j < v.size(); ++j) ASSERT_NEAR(p.v[j], v[j], 1e-8) << "draw " << k;
  }
}

TEST(Perron, ResidualPositivityAndNormalisation) {
  draw::Generator gen(33);
  for (int k = 0; k < 1000; ++k) {
    const auto m = draw_matrix(gen);
    const auto d = build_B(m.a, m.gamma, m.r);
    const auto p = perron(d);
    ASSERT_LE(eigen_residual(d, p), 1e-10 * p.rho);
    double total = 0.0;
    for (double x : p.v) {
      ASSERT_GT(x, 0.0);
      total += x;
    }
    ASSERT_NEAR(total, 1.0, 1e-14);
  }
}

TEST(Perron, ThresholdSignMatchesClosedForm) {
  draw::Generator gen(34);
  for (int k = 0; k < 1000; ++k) {
    auto m = draw_matrix(gen);
    const auto d = build_B(m.a, m.gamma, m.r);
    const auto p = perron(d);
    const double ad = m.a * d.delta();
    if (ad > 1.0 + 1e-9) { ASSERT_GT(p.rho, 1.0); }
    if (ad < 1.0 - 1e-9) { ASSERT_LT(p.rho, 1.0); }
  }
}

TEST(SignIdentities, ThresholdIsZero) {
  const std::vector<double> g{0.3, 0.8, 0.5};
  const std::vector<double> r{0.2, 0.1, 0.4};
  const double delta = 0.2 / 0.3 + 0.1 / 0.8 + 0.4 / 0.5;
  const auto d = build_B(1.0 / delta, g, r);
  const auto p = perron(d);
  const auto rep = sign_identities_check(d, p);
  EXPECT_TRUE(rep.ok());
  EXPECT_EQ(rep.threshold_sign, 0);
  EXPECT_EQ(rep.first_row_sign, 0);
  EXPECT_EQ(rep.pairs_checked, 3u);
}

TEST(SignIdentities, AboveAndBelowThreshold) {
  draw::Generator gen(35);
  for (int k = 0; k < 200; ++k) {
    const std::size_t n = gen.integer(2, 8);
    const auto g = gen.gamma(n);
    const auto r = gen.rates(n);
    double delta = 0.0;
    for (std::size_t j = 0; j < n; ++j) delta += r[j] / g[j];
    for (double target : {1.5, 0.5}) {
      const auto d = build_B(target / delta, g, r);
      const auto rep = sign_identities_check(d, perron(d));
      ASSERT_TRUE(rep.ok());
      ASSERT_EQ(rep.threshold_sign, target > 1 ? 1 : -1);
      ASSERT_EQ(rep.first_row_sign, rep.threshold_sign);
    }
  }
}

TEST(SignIdentities, ChainIdentity) {
  draw::Generator gen(36);
  for (int k = 0; k < 1000; ++k) {
    const auto m = draw_matrix(gen);
    const auto d = build_B(m.a, m.gamma, m.r);
    ASSERT_LE(chain_identity_residual(d, perron(d)), 1e-9);
  }
}

TEST(Matrix, ProductsAndSums) {
  Matrix A(2, 2), B(2, 2);
  A(0, 0) = 1, A(0, 1) = 2, A(1, 0) = 3, A(1, 1) = 4;
  B(0, 0) = 0, B(0, 1) = 1, B(1, 0) = 1, B(1, 1) = 0;
  const auto C = A * B;
  EXPECT_EQ(C(0, 0), 2);
  EXPECT_EQ(C(1, 1), 3);
  const auto y = A * std::vector<double>{1, 1};
  EXPECT_EQ(y, (std::vector<double>{3, 7}));
  EXPECT_EQ((A + B)(0, 1), 3);
}

TEST(BidiagonalSolve, InvertsIdentityMinusT) {
  const std::vector<double> g{0.3, 0.6, 0.9};
  const std::vector<double> b{1.0, -2.0, 0.5};
  const auto x = solve_identity_minus_transitions(g, b);
  // (I - T) x: diagonal g_j, subdiagonal -g_{j-1}
  EXPECT_NEAR(g[0] * x[0], b[0], 1e-15);
  EXPECT_NEAR(g[1] * x[1] - g[0] * x[0], b[1], 1e-14);
  EXPECT_NEAR(g[2] * x[2] - g[1] * x[1], b[2], 1e-14);
}
