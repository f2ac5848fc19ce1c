#include <gtest/gtest.h>

#include <random>

#include "tomo/simplex_qp.hpp"

using namespace tomo;

namespace {

QuadraticSubproblem random_instance(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd m(n + 2, n);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  QuadraticSubproblem s;
  s.D = m.transpose() * m / static_cast<double>(n);
  s.d = Eigen::VectorXd(n);
  for (int i = 0; i < n; ++i) s.d(i) = g(rng);
  return s;
}

// Projected gradient with exact simplex projection; an independent slow solver.
Eigen::VectorXd projected_gradient(const QuadraticSubproblem& s, int iters = 200000) {
  const Eigen::Index n = s.d.size();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s.D);
  const double step = 1.0 / (2.0 * std::max(eig.eigenvalues().maxCoeff(), 1e-12));
  Eigen::VectorXd x = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  auto project = [](Eigen::VectorXd v) {
    std::vector<double> u(v.data(), v.data() + v.size());
    std::sort(u.rbegin(), u.rend());
    double cum = 0.0, tau = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
      cum += u[k];
      const double cand = (cum - 1.0) / static_cast<double>(k + 1);
      if (u[k] - cand > 0.0) tau = cand;
    }
    return Eigen::VectorXd((v.array() - tau).cwiseMax(0.0));
  };
  for (int i = 0; i < iters; ++i) x = project(x - step * 2.0 * (s.D * x - s.d));
  return x;
}

}  // namespace

TEST(SimplexQp, InteriorSolution) {
  QuadraticSubproblem s;
  s.D = Eigen::MatrixXd::Identity(3, 3);
  s.d = Eigen::Vector3d(0.2, 0.3, 0.5);
  const QpSolution sol = solve_simplex_qp(s);
  EXPECT_LT((sol.theta - s.d).norm(), 1e-9);
  EXPECT_LT(sol.kkt_residual, 1e-9);
}

TEST(SimplexQp, VertexSolution) {
  QuadraticSubproblem s;
  s.D = Eigen::MatrixXd::Identity(3, 3);
  s.d = Eigen::Vector3d(5.0, 0.0, 0.0);
  const QpSolution sol = solve_simplex_qp(s);
  EXPECT_NEAR(sol.theta(0), 1.0, 1e-12);
  EXPECT_NEAR(sol.theta.sum(), 1.0, 1e-15);
}

TEST(SimplexQp, SingleVariable) {
  QuadraticSubproblem s;
  s.D = Eigen::MatrixXd::Constant(1, 1, 2.0);
  s.d = Eigen::VectorXd::Constant(1, -3.0);
  EXPECT_DOUBLE_EQ(solve_simplex_qp(s).theta(0), 1.0);
}

TEST(SimplexQp, SingularMatrixHandled) {
  QuadraticSubproblem s;
  s.D = Eigen::MatrixXd::Ones(4, 4);
  s.d = Eigen::Vector4d(1.0, 1.0, 1.0, 2.0);
  const QpSolution sol = solve_simplex_qp(s);
  EXPECT_NEAR(sol.theta(3), 1.0, 1e-9);
  EXPECT_TRUE(sol.theta.minCoeff() >= 0.0);
}

TEST(SimplexQp, MatchesProjectedGradient) {
  std::mt19937_64 rng(21);
  for (int k = 0; k < 30; ++k) {
    const int n = 2 + k % 10;
    const QuadraticSubproblem s = random_instance(rng, n);
    const QpSolution sol = solve_simplex_qp(s);
    const Eigen::VectorXd ref = projected_gradient(s, 20000);
    EXPECT_LE(sol.objective, s.value(ref) + 1e-9) << "instance " << k;
    EXPECT_NEAR(sol.theta.sum(), 1.0, 1e-12);
    EXPECT_GE(sol.theta.minCoeff(), 0.0);
    EXPECT_LT(sol.kkt_residual, 1e-8);
  }
}

TEST(SimplexQp, RejectsIndefinite) {
  QuadraticSubproblem s;
  s.D = Eigen::Vector2d(1.0, -1.0).asDiagonal();
  s.d = Eigen::Vector2d(0.0, 0.0);
  EXPECT_THROW(solve_simplex_qp(s), NumericalError);
}

TEST(SimplexQp, RejectsBadDimensions) {
  QuadraticSubproblem s;
  s.D = Eigen::MatrixXd::Identity(2, 2);
  s.d = Eigen::Vector3d(0.0, 0.0, 0.0);
  EXPECT_THROW(solve_simplex_qp(s), ConfigError);
}
