#ifndef TOMO_BINNING_HPP
#define TOMO_BINNING_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <string>
#include <vector>

#include "tomo/cf_engine.hpp"
#include "tomo/delay_models.hpp"
#include "tomo/error.hpp"
#include "tomo/estimators.hpp"
#include "tomo/topology.hpp"

namespace tomo {

struct MomentEstimates {
  Eigen::VectorXd variance;  // clamped at 0
  Eigen::VectorXd mean;      // minimum-norm solution of E[Y] = A E[X]
  std::vector<bool> clamped;

  double sd(std::size_t j) const { return std::sqrt(variance(static_cast<Eigen::Index>(j))); }
};

/// Link variances and means from end-to-end first and second moments.
///
/// Independent links make Cov(Y_i, Y_k) the sum of Var(X_j) over the links shared
/// by paths i and k, i.e. the product-matrix row for (i, k). The system is solved
/// in least squares; means come from the minimum-norm solution of E[Y] = A E[X].
inline MomentEstimates link_moments_from_covariance(const Eigen::MatrixXd& cov, const Eigen::VectorXd& mean_y,
                                                    const RoutingMatrix& a) {
  const std::size_t I = a.rows();
  if (static_cast<std::size_t>(cov.rows()) != I || static_cast<std::size_t>(cov.cols()) != I ||
      static_cast<std::size_t>(mean_y.size()) != I)
    throw ConfigError("covariance dimensions do not match the routing matrix");
  const ProductMatrix b = product_matrix(a);
  const auto pairs = product_row_pairs(I);
  Eigen::VectorXd c(static_cast<Eigen::Index>(pairs.size()));
  for (std::size_t r = 0; r < pairs.size(); ++r)
    c(static_cast<Eigen::Index>(r)) = cov(static_cast<Eigen::Index>(pairs[r].first), static_cast<Eigen::Index>(pairs[r].second));

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(b.entries, Eigen::ComputeThinU | Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double cutoff = 1e-9 * (s.size() > 0 ? s(0) : 0.0);
  const Eigen::Index J = b.entries.cols();
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > cutoff) ++rank;
  if (rank < J) {
    std::vector<bool> flagged(static_cast<std::size_t>(J), false);
    for (Eigen::Index v = rank; v < J; ++v)
      for (Eigen::Index j = 0; j < J; ++j)
        if (std::abs(svd.matrixV()(j, v)) > 1e-6) flagged[static_cast<std::size_t>(j)] = true;
    std::string names;
    for (Eigen::Index j = 0; j < J; ++j)
      if (flagged[static_cast<std::size_t>(j)]) names += (names.empty() ? "" : ", ") + a.edge_order()[static_cast<std::size_t>(j)];
    throw ConfigError("link variances are underdetermined; unidentifiable links: " + names);
  }
  svd.setThreshold(1e-9);

  MomentEstimates out;
  out.variance = svd.solve(c);
  out.clamped.assign(static_cast<std::size_t>(J), false);
  for (Eigen::Index j = 0; j < J; ++j)
    if (out.variance(j) < 0.0) {
      out.variance(j) = 0.0;
      out.clamped[static_cast<std::size_t>(j)] = true;
    }
  out.mean = a.entries().completeOrthogonalDecomposition().solve(mean_y);
  return out;
}

inline MomentEstimates estimate_link_moments(const MeasurementSet& m, const RoutingMatrix& a) {
  if (m.size() < 2) throw ConfigError("moment estimates need N >= 2");
  if (m.receivers() != a.rows()) throw ConfigError("measurement columns do not match routing rows");
  const Eigen::VectorXd mean = m.values().colwise().mean().transpose();
  const Eigen::MatrixXd centered = m.values().rowwise() - mean.transpose();
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(m.size() - 1);
  return link_moments_from_covariance(cov, mean, a);
}

/// Crude exponential-tail scale: the link's standard deviation, floored at 1e-6.
inline double crude_tail_scale(const MomentEstimates& m, std::size_t link) { return std::max(m.sd(link), 1e-6); }

/// Equal-width bins over [0, max(mean + 3 sd, sd)].
inline MixtureSpec equal_bins(const MomentEstimates& m, std::size_t link, std::size_t n_bins, bool zero_atom = false,
                              std::vector<std::string>* warnings = nullptr) {
  if (n_bins < 1) throw ConfigError("need at least one bin");
  const double sd = m.sd(link);
  const double tail = crude_tail_scale(m, link);
  if (sd <= 0.0) {
    if (warnings) warnings->push_back("link " + std::to_string(link + 1) + " has zero variance; using a single bin");
    return MixtureSpec::binned(link, zero_atom, {0.0, std::max(m.mean(static_cast<Eigen::Index>(link)), 1e-6)}, tail);
  }
  const double span = std::max(m.mean(static_cast<Eigen::Index>(link)) + 3.0 * sd, sd);
  std::vector<double> endpoints(n_bins + 1);
  for (std::size_t i = 0; i <= n_bins; ++i) endpoints[i] = span * static_cast<double>(i) / static_cast<double>(n_bins);
  return MixtureSpec::binned(link, zero_atom, std::move(endpoints), tail);
}

template <class Q>
concept QuantileFunction = requires(const Q& q, double p) {
  { q.quantile(p) } -> std::convertible_to<double>;
};

/// Bins with endpoints at quantiles i / (n_bins + 1) of `dist`, first endpoint 0.
/// Ties are pushed apart by a minimum gap of 1e-9 of the span.
template <QuantileFunction Q>
MixtureSpec quantile_bins(const Q& dist, std::size_t link, std::size_t n_bins, bool zero_atom, double tail_scale) {
  if (n_bins < 1) throw ConfigError("need at least one bin");
  std::vector<double> q(n_bins);
  for (std::size_t i = 0; i < n_bins; ++i)
    q[i] = std::max(0.0, dist.quantile(static_cast<double>(i + 1) / static_cast<double>(n_bins + 1)));
  const double span = std::max(q.back(), 1e-12);
  const double gap = 1e-9 * span;
  std::vector<double> endpoints{0.0};
  for (double v : q) endpoints.push_back(std::max(v, endpoints.back() + gap));
  return MixtureSpec::binned(link, zero_atom, std::move(endpoints), tail_scale);
}

namespace detail {

// Distribution of a mixture conditioned on X > 0 (drops the zero atom).
struct PositivePart {
  const Mixture& mix;
  double atom;
  double quantile(double p) const { return mix.quantile(std::min(atom + p * (1.0 - atom), 1.0 - 1e-15)); }
};

}  // namespace detail

/// Quantile-placed bins from a fitted mixture. With a zero atom, the quantiles are
/// taken of the positive part so bins are not wasted on the atom.
inline MixtureSpec varying_bins(const Mixture& fitted, std::size_t n_bins) {
  const MixtureSpec& s = fitted.spec();
  if (s.is_lattice()) throw ConfigError("varying bins need a binned pilot, not a lattice");
  const std::size_t link = s.link();
  if (!s.has_zero_atom()) return quantile_bins(fitted, link, n_bins, false, s.tail_scale());
  const double atom = fitted.weights()[0];
  if (atom >= 1.0 - 1e-9) return s;
  return quantile_bins(detail::PositivePart{fitted, atom}, link, n_bins, true, s.tail_scale());
}

struct RefineConfig {
  std::size_t n_bins = 12;
  std::size_t rounds = 2;
  bool zero_atom = false;
  EstimatorConfig estimator;
};

struct RefineResult {
  std::vector<MixtureSpec> specs;
  EstimationResult fit;                  // last CF fit
  std::vector<EstimationResult> history;  // equal-bin fit first
  MomentEstimates moments;
  std::vector<std::string> warnings;
};

/// Equal bins from moment estimates, CF fit, then `rounds` passes of quantile
/// re-binning from the current fit followed by a refit.
template <class Rng>
RefineResult refine(const MeasurementSet& m, const RoutingMatrix& a, const RefineConfig& config, Rng& rng) {
  RefineResult out;
  out.moments = estimate_link_moments(m, a);
  for (std::size_t j = 0; j < a.cols(); ++j)
    out.specs.push_back(equal_bins(out.moments, j, config.n_bins, config.zero_atom, &out.warnings));
  out.history.push_back(fit(m, a, out.specs, config.estimator, rng));
  for (std::size_t r = 0; r < config.rounds; ++r) {
    std::vector<MixtureSpec> next;
    for (const auto& link : out.history.back().links) next.push_back(varying_bins(link, config.n_bins));
    out.specs = std::move(next);
    out.history.push_back(fit(m, a, out.specs, config.estimator, rng));
  }
  out.fit = out.history.back();
  return out;
}

}  // namespace tomo

#endif  // TOMO_BINNING_HPP
