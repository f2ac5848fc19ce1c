#ifndef TOMO_METRICS_HPP
#define TOMO_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "tomo/binning.hpp"
#include "tomo/delay_models.hpp"
#include "tomo/error.hpp"

namespace tomo {

/// sum_x |p(x) - q(x)| on a shared grid; twice the total variation distance.
inline double l1_density_distance(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw ConfigError("L1 distance needs distributions on the same grid");
  double s = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) s += std::abs(p[k] - q[k]);
  return s;
}

/// Grid probabilities of a discrete model or a lattice mixture.
inline std::vector<double> grid_probabilities(const ParametricModel& m) {
  if (const auto* g = std::get_if<DiscreteGrid>(&m.value())) return g->probs;
  throw ConfigError("model is not discrete on a grid");
}

inline std::vector<double> grid_probabilities(const Mixture& m) {
  if (!m.spec().is_lattice()) throw ConfigError("mixture is not a lattice");
  return m.weights().values();
}

inline double l1_density_distance(const ParametricModel& truth, const Mixture& fitted) {
  const auto* g = std::get_if<DiscreteGrid>(&truth.value());
  if (g == nullptr || !fitted.spec().is_lattice() || g->spacing != fitted.spec().spacing())
    throw ConfigError("L1 distance needs both distributions on the same grid");
  return l1_density_distance(g->probs, fitted.weights().values());
}

/// Mallows (Wasserstein-1) distance: integral over p in (0,1) of |F^{-1}(p) - G^{-1}(p)|,
/// midpoint rule with `points` nodes.
template <QuantileFunction F, QuantileFunction G>
double mallows(const F& f, const G& g, std::size_t points = 2000) {
  if (points < 1) throw ConfigError("Mallows quadrature needs at least one point");
  double s = 0.0;
  for (std::size_t i = 0; i < points; ++i) {
    const double p = (static_cast<double>(i) + 0.5) / static_cast<double>(points);
    s += std::abs(f.quantile(p) - g.quantile(p));
  }
  return s / static_cast<double>(points);
}

/// Quantiles at the midpoint nodes used by `mallows`.
template <QuantileFunction F>
std::vector<double> midpoint_quantiles(const F& f, std::size_t points = 2000) {
  std::vector<double> q(points);
  for (std::size_t i = 0; i < points; ++i)
    q[i] = f.quantile((static_cast<double>(i) + 0.5) / static_cast<double>(points));
  return q;
}

/// Mallows distance against a reference given by its midpoint quantiles.
template <QuantileFunction G>
double mallows(const std::vector<double>& reference, const G& g) {
  if (reference.empty()) throw ConfigError("Mallows quadrature needs at least one point");
  const auto points = static_cast<double>(reference.size());
  double s = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i)
    s += std::abs(reference[i] - g.quantile((static_cast<double>(i) + 0.5) / points));
  return s / points;
}

/// Mallows distance divided by the standard deviation of the reference distribution.
template <QuantileFunction F, QuantileFunction G>
double normalized_mallows(const F& truth, const G& fitted, std::size_t points = 2000) {
  const double sigma = truth.sd();
  if (!(sigma > 0.0)) throw DomainError("normalized Mallows distance needs a reference with positive sd");
  return mallows(truth, fitted, points) / sigma;
}

/// Empirical quantile with linear interpolation between order statistics
/// (position (n - 1) p in the sorted sample).
inline double empirical_quantile(std::vector<double> v, double p) {
  if (v.empty()) throw ConfigError("quantile of an empty sample");
  std::sort(v.begin(), v.end());
  const double pos = p * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

struct LinkQuartiles {
  double q25 = 0.0;
  double q50 = 0.0;
  double q75 = 0.0;
  std::size_t n_reps = 0;
};

struct ErrorSummary {
  std::string metric;
  std::string convention = "linear interpolation at (n-1)p";
  std::vector<LinkQuartiles> links;

  std::vector<double> medians() const {
    std::vector<double> out;
    for (const auto& l : links) out.push_back(l.q50);
    return out;
  }
};

/// values[r][j]: metric of link j in replication r.
inline ErrorSummary summarize(const std::vector<std::vector<double>>& values, std::string metric) {
  if (values.empty()) throw ConfigError("summary needs at least one replication");
  const std::size_t J = values.front().size();
  ErrorSummary s;
  s.metric = std::move(metric);
  for (std::size_t j = 0; j < J; ++j) {
    std::vector<double> col;
    for (const auto& row : values) {
      if (row.size() != J) throw ConfigError("replications report different link counts");
      col.push_back(row[j]);
    }
    s.links.push_back({empirical_quantile(col, 0.25), empirical_quantile(col, 0.5), empirical_quantile(col, 0.75),
                       col.size()});
  }
  return s;
}

}  // namespace tomo

#endif  // TOMO_METRICS_HPP
