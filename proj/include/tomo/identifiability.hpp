#ifndef TOMO_IDENTIFIABILITY_HPP
#define TOMO_IDENTIFIABILITY_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "tomo/detail/quadrature.hpp"
#include "tomo/error.hpp"
#include "tomo/topology.hpp"

namespace tomo {

/// Real, even characteristic function satisfying Polya's conditions:
///   e^{-lambda |t|}                                   for |t| <= a
///   lambda e^{-lambda a} (a + 1/lambda - |t|)        for a < |t| <= a + 1/lambda
///   0                                                 beyond.
struct PolyaCF {
  double a = 0.0;
  double lambda = 1.0;

  PolyaCF(double a_, double lambda_) : a(a_), lambda(lambda_) {
    if (!(a >= 0.0) || !(lambda > 0.0)) throw DomainError("Polya CF needs a >= 0 and lambda > 0");
  }

  double operator()(double t) const {
    const double u = std::abs(t);
    if (u <= a) return std::exp(-lambda * u);
    if (u <= a + 1.0 / lambda) return lambda * std::exp(-lambda * a) * (a + 1.0 / lambda - u);
    return 0.0;
  }

  double support() const { return a + 1.0 / lambda; }

  /// Density by Fourier inversion, f(x) = (1/pi) int_0^T c(t) cos(t x) dt. The
  /// integrand is smooth on [0, a] and [a, T], so each piece gets its own rule.
  double density(double x) const {
    auto f = [&](double t) { return (*this)(t) * std::cos(t * x); };
    const auto panels = static_cast<std::size_t>(std::clamp(std::abs(x) * support(), 8.0, 4000.0));
    double s = detail::composite_gauss(f, a, support(), panels);
    if (a > 0.0) s += detail::composite_gauss(f, 0.0, a, panels);
    return s / std::numbers::pi;
  }
};

inline double polya_cf(double a, double lambda, double t) { return PolyaCF(a, lambda)(t); }

struct CounterexampleGap {
  double joint_gap = 0.0;     // max |phi_Y - phi_Y'| over the grid
  double marginal_gap = 0.0;  // max |c(t;2,1) - c(t;3,1)| over the grid axis
  double marginal_argmax = 0.0;
  std::size_t points = 0;     // per axis
};

/// Two-leaf counterexample: X1 ~ c(.;2,1) vs X1' ~ c(.;3,1) with X2, X3 ~ c(.;0,1).
/// The joint CF of (Y1, Y2) is c1(t+s) c0(t) c0(s) in both cases.
inline CounterexampleGap counterexample_joint_cf_gap(double half_width = 3.0, std::size_t points = 601) {
  if (points < 2) throw ConfigError("grid needs at least two points per axis");
  if (half_width < 3.0) throw ConfigError("grid must cover at least [-3, 3]^2");
  const PolyaCF x1(2.0, 1.0), x1p(3.0, 1.0), leaf(0.0, 1.0);
  CounterexampleGap out;
  out.points = points;
  std::vector<double> axis(points);
  for (std::size_t i = 0; i < points; ++i)
    axis[i] = -half_width + 2.0 * half_width * static_cast<double>(i) / static_cast<double>(points - 1);
  for (double t : axis) {
    const double mg = std::abs(x1(t) - x1p(t));
    if (mg > out.marginal_gap) {
      out.marginal_gap = mg;
      out.marginal_argmax = t;
    }
    for (double s : axis) {
      const double common = leaf(t) * leaf(s);
      out.joint_gap = std::max(out.joint_gap, std::abs(x1(t + s) * common - x1p(t + s) * common));
    }
  }
  return out;
}

struct IdentifiabilityReport {
  bool identifiable_up_to_shift = false;
  std::size_t rank = 0;
  std::size_t links = 0;
};

/// Full column rank of the product matrix implies identifiability up to shift.
inline IdentifiabilityReport identifiability_check(const RoutingMatrix& a) {
  const std::size_t rank = column_rank(product_matrix(a));
  return {rank == a.cols(), rank, a.cols()};
}

}  // namespace tomo

#endif  // TOMO_IDENTIFIABILITY_HPP
