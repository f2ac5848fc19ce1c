#ifndef TOMO_ESTIMATORS_HPP
#define TOMO_ESTIMATORS_HPP

#include <Eigen/Dense>

#include <chrono>
#include <limits>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "tomo/cf_engine.hpp"
#include "tomo/delay_models.hpp"
#include "tomo/error.hpp"
#include "tomo/simplex_qp.hpp"
#include "tomo/topology.hpp"

namespace tomo {

enum class Estimator { cf, wcf, mle };

inline std::string to_string(Estimator e) {
  switch (e) {
    case Estimator::cf: return "cf";
    case Estimator::wcf: return "wcf";
    case Estimator::mle: return "mle";
  }
  return "cf";
}

inline Estimator estimator_from_string(const std::string& s) {
  if (s == "cf" || s == "CF") return Estimator::cf;
  if (s == "wcf" || s == "WCF") return Estimator::wcf;
  if (s == "mle" || s == "MLE") return Estimator::mle;
  throw ConfigError("unknown estimator '" + s + "'");
}

struct EstimatorConfig {
  Estimator variant = Estimator::cf;
  std::size_t max_outer_iterations = 50;
  double relative_tolerance = 1e-6;  // stop once the relative objective decrease falls below this
  std::optional<double> ridge;       // delta_N for WCF; N^{-1/2} when unset
  double qp_tolerance = 1e-10;
  std::size_t starts = 1;            // extra starts draw random simplex points
  std::size_t frequencies = 3000;    // K
  std::optional<std::size_t> wcf_frequencies;
  double t_scale = 5.0;
  std::size_t em_max_iterations = 500;
  double em_tolerance = 1e-8;

  void validate() const {
    if (!(relative_tolerance > 0.0) || !(qp_tolerance > 0.0) || !(em_tolerance > 0.0))
      throw ConfigError("tolerances must be positive");
    if (ridge && !(*ridge >= 0.0)) throw ConfigError("ridge must be nonnegative");
    if (frequencies < 1 || (wcf_frequencies && *wcf_frequencies < 1)) throw ConfigError("K must be >= 1");
    if (max_outer_iterations < 1 || starts < 1) throw ConfigError("iteration and start counts must be >= 1");
    if (!(t_scale > 0.0)) throw ConfigError("t scale must be positive");
  }
};

struct EstimationResult {
  Estimator estimator = Estimator::cf;
  std::vector<Mixture> links;
  std::vector<double> objective;       // one entry per outer iteration, starting with the initial value
  std::vector<double> log_likelihood;  // EM only
  std::size_t iterations = 0;
  bool converged = false;
  double wall_seconds = 0.0;
  std::size_t frequencies = 0;
  double ridge = 0.0;
  std::vector<std::string> warnings;
};

/// Whitening by the Cholesky factor of (W + delta I), so that
/// ||L^{-1} r||^2 = r^H (W + delta I)^{-1} r.
class ResidualWhitener {
 public:
  ResidualWhitener(const Eigen::MatrixXcd& w, double ridge, std::vector<std::string>* warnings = nullptr) {
    const Eigen::Index k = w.rows();
    double delta = ridge;
    for (int attempt = 0; attempt < 12; ++attempt) {
      Eigen::MatrixXcd m = w;
      m.diagonal().array() += delta;
      llt_.compute(m);
      if (llt_.info() == Eigen::Success && llt_.matrixLLT().diagonal().real().minCoeff() > 1e-12 * std::sqrt(delta + 1e-300)) {
        ridge_ = delta;
        return;
      }
      if (warnings) {
        std::ostringstream msg;
        msg << "W + delta I numerically singular at delta=" << delta << "; retrying with delta x10";
        warnings->push_back(msg.str());
      }
      delta = delta > 0.0 ? delta * 10.0 : 1e-12 * std::max(1.0, w.cwiseAbs().maxCoeff()) * static_cast<double>(k);
    }
    throw NumericalError("could not factor the WCF weight matrix");
  }

  double ridge() const { return ridge_; }

  template <class Derived>
  Eigen::Matrix<Complex, Eigen::Dynamic, Derived::ColsAtCompileTime> apply(const Eigen::MatrixBase<Derived>& x) const {
    return llt_.matrixL().solve(x);
  }

 private:
  Eigen::LLT<Eigen::MatrixXcd> llt_;
  double ridge_ = 0.0;
};

/// D = Re(M^H M), d = Re(M^H u) for the affine residual u - M theta.
inline QuadraticSubproblem assemble_subproblem(const Eigen::MatrixXcd& design, const Eigen::VectorXcd& target) {
  QuadraticSubproblem sub;
  sub.D = (design.adjoint() * design).real();
  sub.D = 0.5 * (sub.D + sub.D.transpose());
  sub.d = (design.adjoint() * target).real();
  return sub;
}

/// Subproblem for link j with every other link fixed at its cached weights.
/// With a whitener, the weighted (WCF) form is produced.
inline QuadraticSubproblem assemble_subproblem(const CfCache& cache, std::size_t j, const Eigen::VectorXcd& empirical,
                                               const ResidualWhitener* whitener = nullptr) {
  if (whitener == nullptr) return assemble_subproblem(cache.design(j), empirical);
  const Eigen::MatrixXcd m = whitener->apply(cache.design(j));
  const Eigen::VectorXcd u = whitener->apply(empirical);
  return assemble_subproblem(m, u);
}

namespace detail {

inline Eigen::VectorXd to_vector(const MixtureWeights& w) {
  return Eigen::Map<const Eigen::VectorXd>(w.values().data(), static_cast<Eigen::Index>(w.size()));
}

inline MixtureWeights to_weights(const Eigen::VectorXd& v) {
  return MixtureWeights(std::vector<double>(v.data(), v.data() + v.size()));
}

struct DescentOutcome {
  std::vector<MixtureWeights> weights;
  std::vector<double> objective;
  std::size_t iterations = 0;
  bool converged = false;
};

// Block coordinate descent over links. `whitened_target` and `whiten` define the
// objective N ||whitened_target - whiten(phi_model)||^2.
template <class Whiten>
DescentOutcome coordinate_descent(CfCache& cache, const Eigen::VectorXcd& whitened_target, double n_samples,
                                  const EstimatorConfig& config, const std::vector<MixtureWeights>& start,
                                  Whiten&& whiten) {
  const std::size_t J = cache.links();
  for (std::size_t j = 0; j < J; ++j) cache.set_weights(j, start[j]);
  auto objective = [&] {
    const Eigen::VectorXcd model = whiten(cache.model_cf());
    return n_samples * (whitened_target - model).squaredNorm();
  };

  DescentOutcome out;
  double previous = objective();
  out.objective.push_back(previous);
  for (out.iterations = 1; out.iterations <= config.max_outer_iterations; ++out.iterations) {
    std::vector<MixtureWeights> saved;
    for (std::size_t j = 0; j < J; ++j) saved.push_back(cache.weights(j));

    for (std::size_t j = 0; j < J; ++j) {
      const Eigen::MatrixXcd m = whiten(cache.design(j));
      const QuadraticSubproblem sub = assemble_subproblem(m, whitened_target);
      const QpSolution qp = solve_simplex_qp(sub, config.qp_tolerance);
      if (sub.value(qp.theta) < sub.value(to_vector(cache.weights(j)))) cache.set_weights(j, to_weights(qp.theta));
    }

    const double current = objective();
    if (current > previous) {
      // Round-off only: block minimization cannot increase the objective.
      for (std::size_t j = 0; j < J; ++j) cache.set_weights(j, saved[j]);
      out.converged = true;
      break;
    }
    out.objective.push_back(current);
    if (previous - current <= config.relative_tolerance * previous) {
      out.converged = true;
      break;
    }
    previous = current;
  }
  out.iterations = std::min(out.iterations, config.max_outer_iterations);
  for (std::size_t j = 0; j < J; ++j) out.weights.push_back(cache.weights(j));
  return out;
}

template <class Rng>
std::vector<MixtureWeights> random_start(const std::vector<MixtureSpec>& specs, Rng& rng) {
  std::exponential_distribution<double> e(1.0);
  std::vector<MixtureWeights> out;
  for (const auto& s : specs) {
    std::vector<double> p(s.size());
    for (double& v : p) v = e(rng);
    out.emplace_back(std::move(p));
  }
  return out;
}

inline std::vector<MixtureWeights> uniform_start(const std::vector<MixtureSpec>& specs) {
  std::vector<MixtureWeights> out;
  for (const auto& s : specs) out.push_back(MixtureWeights::uniform(s.size()));
  return out;
}

template <class Whiten, class Rng>
EstimationResult multi_start_descent(CfCache& cache, const Eigen::VectorXcd& target, double n_samples,
                                     const EstimatorConfig& config, std::vector<MixtureWeights> first, Rng& rng,
                                     Whiten&& whiten) {
  EstimationResult best;
  double best_value = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < config.starts; ++s) {
    auto start = s == 0 ? first : random_start(cache.specs(), rng);
    DescentOutcome o = coordinate_descent(cache, target, n_samples, config, start, whiten);
    if (o.objective.back() < best_value) {
      best_value = o.objective.back();
      best.objective = std::move(o.objective);
      best.iterations = o.iterations;
      best.converged = o.converged;
      best.links.clear();
      for (std::size_t j = 0; j < cache.links(); ++j) best.links.emplace_back(cache.spec(j), o.weights[j]);
    }
  }
  return best;
}

inline void check_dimensions(const MeasurementSet& m, const RoutingMatrix& a, std::size_t links) {
  if (m.receivers() != a.rows())
    throw ConfigError("measurement columns (" + std::to_string(m.receivers()) + ") do not match routing rows (" +
                      std::to_string(a.rows()) + ")");
  if (links != a.cols())
    throw ConfigError("link model count (" + std::to_string(links) + ") does not match routing columns (" +
                      std::to_string(a.cols()) + ")");
}

}  // namespace detail

/// CF estimator: iterative quadratic programming from uniform weights.
template <class Rng>
EstimationResult fit(const MeasurementSet& m, const RoutingMatrix& a, std::vector<MixtureSpec> specs,
                     const EstimatorConfig& config, Rng& rng) {
  const auto t0 = std::chrono::steady_clock::now();
  config.validate();
  detail::check_dimensions(m, a, specs.size());
  const FrequencySet freqs = sample_frequencies(m.receivers(), config.frequencies, config.t_scale, m.sd(), rng);
  const Eigen::VectorXcd target = empirical_cf(m, freqs);
  CfCache cache(a, specs, freqs);
  auto identity = [](const Eigen::MatrixXcd& x) -> Eigen::MatrixXcd { return x; };
  EstimationResult r = detail::multi_start_descent(cache, target, static_cast<double>(m.size()), config,
                                                   detail::uniform_start(specs), rng, identity);
  r.estimator = Estimator::cf;
  r.frequencies = freqs.size();
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

/// WCF estimator. W is computed once from `initial` (normally the CF fit), which also
/// supplies the bins and the starting weights.
template <class Rng>
EstimationResult fit_wcf(const MeasurementSet& m, const RoutingMatrix& a, const EstimatorConfig& config,
                         const EstimationResult& initial, Rng& rng) {
  const auto t0 = std::chrono::steady_clock::now();
  config.validate();
  detail::check_dimensions(m, a, initial.links.size());
  std::vector<MixtureSpec> specs;
  std::vector<MixtureWeights> start;
  for (const auto& l : initial.links) {
    specs.push_back(l.spec());
    start.push_back(l.weights());
  }
  const std::size_t K = config.wcf_frequencies.value_or(config.frequencies);
  const FrequencySet freqs = sample_frequencies(m.receivers(), K, config.t_scale, m.sd(), rng);
  const Eigen::VectorXcd target = empirical_cf(m, freqs);

  EstimationResult r;
  const Eigen::MatrixXcd w = weight_matrix(a, initial.links, freqs);
  const double delta = config.ridge.value_or(1.0 / std::sqrt(static_cast<double>(m.size())));
  const ResidualWhitener whitener(w, delta, &r.warnings);
  const Eigen::VectorXcd whitened_target = whitener.apply(target);

  CfCache cache(a, specs, freqs);
  auto whiten = [&whitener](const auto& x) -> Eigen::MatrixXcd { return whitener.apply(x); };
  EstimationResult best = detail::multi_start_descent(cache, whitened_target, static_cast<double>(m.size()), config,
                                                      start, rng, whiten);
  best.estimator = Estimator::wcf;
  best.frequencies = K;
  best.ridge = whitener.ridge();
  best.warnings = std::move(r.warnings);
  best.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return best;
}

/// Weighted objective r^H (W + delta I)^{-1} r evaluated densely; exposed for checks.
inline double weighted_objective(const Eigen::VectorXcd& residual, const Eigen::MatrixXcd& w, double delta) {
  Eigen::MatrixXcd m = w;
  m.diagonal().array() += delta;
  const Eigen::VectorXcd x = m.partialPivLu().solve(residual);
  return residual.dot(x).real();
}

/// Maximum likelihood on a common integer grid {0, ..., points-1} via EM.
///
/// Each observation's posterior is enumerated over the joint link-delay vectors
/// consistent with it. For tree routing every receiver owns a private leaf link,
/// so only the shared links are enumerated and the leaf links are solved for.
inline EstimationResult fit_mle_discrete(const MeasurementSet& m, const RoutingMatrix& a, std::size_t points,
                                         const EstimatorConfig& config) {
  const auto t0 = std::chrono::steady_clock::now();
  config.validate();
  const std::size_t J = a.cols();
  const std::size_t I = a.rows();
  detail::check_dimensions(m, a, J);
  if (points < 1) throw ConfigError("grid needs at least one point");
  if (std::pow(static_cast<double>(points), static_cast<double>(J)) > 1e7)
    throw ConfigError("EM joint support " + std::to_string(points) + "^" + std::to_string(J) +
                      " exceeds the 1e7 enumeration budget");

  // Private column per row: a 1 in this row only.
  std::vector<int> owner(J, -1);
  std::vector<std::size_t> private_col(I, J);
  for (std::size_t i = 0; i < I; ++i)
    for (std::size_t j = 0; j < J; ++j)
      if (a(i, j) == 1.0 && a.entries().col(static_cast<Eigen::Index>(j)).sum() == 1.0 && private_col[i] == J) {
        private_col[i] = j;
        owner[j] = static_cast<int>(i);
      }
  std::vector<std::size_t> enumerated;
  for (std::size_t j = 0; j < J; ++j)
    if (owner[j] < 0) enumerated.push_back(j);

  // Distinct observations with multiplicities.
  std::map<std::vector<int>, double> distinct;
  for (Eigen::Index n = 0; n < m.values().rows(); ++n) {
    std::vector<int> y(I);
    for (std::size_t i = 0; i < I; ++i) {
      const double v = m.values()(n, static_cast<Eigen::Index>(i));
      if (std::abs(v - std::round(v)) > 1e-9) throw ConfigError("discrete MLE needs integer-valued delays");
      y[i] = static_cast<int>(std::lround(v));
    }
    distinct[y] += 1.0;
  }

  struct Observation {
    double count;
    std::vector<std::uint8_t> configs;  // row-major: configs x J
  };
  std::vector<Observation> obs;
  const int top = static_cast<int>(points) - 1;
  for (const auto& [y, count] : distinct) {
    Observation o{count, {}};
    std::vector<int> x(J, 0);
    std::vector<int> odo(enumerated.size(), 0);
    while (true) {
      for (std::size_t e = 0; e < enumerated.size(); ++e) x[enumerated[e]] = odo[e];
      bool ok = true;
      for (std::size_t i = 0; i < I && ok; ++i) {
        int rest = y[i];
        for (std::size_t e : enumerated)
          if (a(i, e) == 1.0) rest -= x[e];
        if (private_col[i] < J) {
          if (rest < 0 || rest > top) ok = false;
          else x[private_col[i]] = rest;
        } else if (rest != 0) {
          ok = false;
        }
      }
      if (ok)
        for (std::size_t j = 0; j < J; ++j) o.configs.push_back(static_cast<std::uint8_t>(x[j]));
      std::size_t pos = 0;
      while (pos < odo.size() && ++odo[pos] > top) odo[pos++] = 0;
      if (pos == odo.size()) break;
    }
    if (o.configs.empty()) throw ConfigError("an observation is inconsistent with the delay grid");
    obs.push_back(std::move(o));
  }

  std::vector<std::vector<double>> p(J, std::vector<double>(points, 1.0 / static_cast<double>(points)));
  EstimationResult r;
  r.estimator = Estimator::mle;
  const double n_total = static_cast<double>(m.size());
  double previous = -std::numeric_limits<double>::infinity();
  std::vector<double> w;
  for (r.iterations = 1; r.iterations <= config.em_max_iterations; ++r.iterations) {
    std::vector<std::vector<double>> counts(J, std::vector<double>(points, 0.0));
    double ll = 0.0;
    for (const auto& o : obs) {
      const std::size_t S = o.configs.size() / J;
      w.assign(S, 1.0);
      double total = 0.0;
      for (std::size_t s = 0; s < S; ++s) {
        for (std::size_t j = 0; j < J; ++j) w[s] *= p[j][o.configs[s * J + j]];
        total += w[s];
      }
      ll += o.count * std::log(total);
      for (std::size_t s = 0; s < S; ++s) {
        const double post = o.count * w[s] / total;
        for (std::size_t j = 0; j < J; ++j) counts[j][o.configs[s * J + j]] += post;
      }
    }
    r.log_likelihood.push_back(ll);
    r.objective.push_back(-ll);
    for (std::size_t j = 0; j < J; ++j)
      for (std::size_t k = 0; k < points; ++k) p[j][k] = counts[j][k] / n_total;
    if (std::isfinite(previous) && std::abs(ll - previous) <= config.em_tolerance * std::abs(previous)) {
      r.converged = true;
      break;
    }
    previous = ll;
  }
  r.iterations = std::min(r.iterations, config.em_max_iterations);
  for (std::size_t j = 0; j < J; ++j) r.links.emplace_back(MixtureSpec::lattice(j, points), MixtureWeights(p[j]));
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

}  // namespace tomo

#endif  // TOMO_ESTIMATORS_HPP
