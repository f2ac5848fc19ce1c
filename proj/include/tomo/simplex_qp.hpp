#ifndef TOMO_SIMPLEX_QP_HPP
#define TOMO_SIMPLEX_QP_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <vector>

#include "tomo/error.hpp"

namespace tomo {

/// C(theta) = theta' D theta - 2 theta' d over the probability simplex.
struct QuadraticSubproblem {
  Eigen::MatrixXd D;
  Eigen::VectorXd d;

  double value(const Eigen::VectorXd& theta) const { return theta.dot(D * theta) - 2.0 * theta.dot(d); }
};

struct QpSolution {
  Eigen::VectorXd theta;
  double objective = 0.0;
  double kkt_residual = 0.0;
  std::size_t iterations = 0;
  double ridge = 0.0;
};

/// Primal active-set method over {theta >= 0, sum theta = 1}.
///
/// Starts at the barycenter. Each iteration solves the equality-constrained QP on
/// the free coordinates, steps until a bound blocks, and releases the bound with
/// the most negative multiplier once the free-face optimum is reached.
inline QpSolution solve_simplex_qp(const QuadraticSubproblem& sub, double tolerance = 1e-10) {
  const Eigen::Index n = sub.d.size();
  if (n < 1 || sub.D.rows() != n || sub.D.cols() != n) throw ConfigError("QP dimensions are inconsistent");
  if (!sub.D.allFinite() || !sub.d.allFinite()) throw NumericalError("QP data contain non-finite values");

  Eigen::MatrixXd D = 0.5 * (sub.D + sub.D.transpose());
  const double mean_diag = std::max(D.trace() / static_cast<double>(n), 0.0);
  const double scale = std::max({D.cwiseAbs().maxCoeff(), sub.d.cwiseAbs().maxCoeff(), 1e-300});

  // PSD repair: a relative ridge, plus whatever absorbs round-off negativity.
  double ridge = 1e-10 * mean_diag;
  if (n > 1) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(D, Eigen::EigenvaluesOnly);
    const double lmin = eig.eigenvalues()(0);
    if (lmin < -1e-8 * scale) {
      std::ostringstream msg;
      msg << "QP matrix is not positive semidefinite (min eigenvalue " << lmin << ", scale " << scale << ")";
      throw NumericalError(msg.str());
    }
    if (lmin < 0.0) ridge += -lmin;
  }
  if (ridge == 0.0) ridge = 1e-14 * scale;
  D.diagonal().array() += ridge;

  QpSolution sol;
  sol.ridge = ridge;
  Eigen::VectorXd theta = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  std::vector<bool> active(static_cast<std::size_t>(n), false);
  const double tol = tolerance * scale;
  const std::size_t max_iter = 50 * static_cast<std::size_t>(n) + 100;

  for (sol.iterations = 0; sol.iterations < max_iter; ++sol.iterations) {
    std::vector<Eigen::Index> free;
    for (Eigen::Index i = 0; i < n; ++i)
      if (!active[static_cast<std::size_t>(i)]) free.push_back(i);
    const auto m = static_cast<Eigen::Index>(free.size());

    const Eigen::VectorXd g = D * theta - sub.d;
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(m + 1, m + 1);
    Eigen::VectorXd rhs(m + 1);
    for (Eigen::Index a = 0; a < m; ++a) {
      for (Eigen::Index b = 0; b < m; ++b) kkt(a, b) = D(free[a], free[b]);
      kkt(a, m) = kkt(m, a) = 1.0;
      rhs(a) = -g(free[a]);
    }
    rhs(m) = 0.0;
    const Eigen::VectorXd sol_kkt = kkt.colPivHouseholderQr().solve(rhs);
    const double nu = sol_kkt(m);

    Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
    for (Eigen::Index a = 0; a < m; ++a) p(free[a]) = sol_kkt(a);

    if (p.cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, theta.cwiseAbs().maxCoeff())) {
      // Free-face optimum. Multiplier of bound i: g_i + nu.
      Eigen::Index release = -1;
      double most_negative = -tol;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!active[static_cast<std::size_t>(i)]) continue;
        const double mu = g(i) + nu;
        if (mu < most_negative) {
          most_negative = mu;
          release = i;
        }
      }
      if (release < 0) break;
      active[static_cast<std::size_t>(release)] = false;
      continue;
    }

    double alpha = 1.0;
    Eigen::Index blocking = -1;
    for (Eigen::Index a = 0; a < m; ++a) {
      const Eigen::Index i = free[a];
      if (p(i) < 0.0) {
        const double step = -theta(i) / p(i);
        if (step < alpha) {
          alpha = step;
          blocking = i;
        }
      }
    }
    theta += alpha * p;
    if (blocking >= 0) {
      theta(blocking) = 0.0;
      active[static_cast<std::size_t>(blocking)] = true;
    }
  }

  theta = theta.cwiseMax(0.0);
  theta /= theta.sum();

  // KKT residual on the original (unridged) problem, scaled to the data.
  const Eigen::VectorXd g = sub.D * theta - sub.d;
  double nu = 0.0;
  std::size_t positive = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    if (theta(i) > 0.0) {
      nu -= g(i);
      ++positive;
    }
  nu /= static_cast<double>(std::max<std::size_t>(positive, 1));
  double resid = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mu = g(i) + nu;
    resid = std::max(resid, theta(i) > 0.0 ? std::abs(mu) : std::max(0.0, -mu));
  }
  sol.kkt_residual = resid / scale;
  sol.theta = std::move(theta);
  sol.objective = sub.value(sol.theta);
  return sol;
}

}  // namespace tomo

#endif  // TOMO_SIMPLEX_QP_HPP
