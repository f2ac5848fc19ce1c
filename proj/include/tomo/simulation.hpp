#ifndef TOMO_SIMULATION_HPP
#define TOMO_SIMULATION_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "tomo/binning.hpp"
#include "tomo/cf_engine.hpp"
#include "tomo/delay_models.hpp"
#include "tomo/error.hpp"
#include "tomo/estimators.hpp"
#include "tomo/metrics.hpp"
#include "tomo/topology.hpp"

namespace tomo {

enum class Binning { equal, varying };

inline std::string to_string(Binning b) { return b == Binning::equal ? "equal" : "varying"; }

inline Binning binning_from_string(const std::string& s) {
  if (s == "equal") return Binning::equal;
  if (s == "varying") return Binning::varying;
  throw ConfigError("unknown binning '" + s + "' (expected equal or varying)");
}

struct EstimatorRun {
  Estimator estimator = Estimator::cf;
  Binning bins = Binning::equal;

  std::string label() const { return to_string(estimator) + "-" + to_string(bins); }
  bool operator==(const EstimatorRun&) const = default;
};

struct Scenario {
  std::string name;
  TreeTopology topology = two_leaf_tree();
  std::vector<ParametricModel> links;  // ignored when grid_points > 0
  std::size_t grid_points = 0;         // > 0: per-replication uniform simplex draw on {0, ..., grid_points - 1}
  std::size_t samples = 1000;
  std::vector<EstimatorRun> runs;
  std::size_t n_bins = 12;
  bool zero_atom = false;
  std::size_t refine_rounds = 2;
  EstimatorConfig estimator;
  std::size_t replications = 20;
  std::uint64_t base_seed = 1;
  bool synthetic = false;
  std::string note;

  bool discrete() const { return grid_points > 0; }
  std::string metric() const { return discrete() ? "l1" : "normalized_mallows"; }

  void validate() const {
    if (samples < 1) throw ConfigError("scenario needs N >= 1");
    if (replications < 1) throw ConfigError("scenario needs R >= 1");
    if (runs.empty()) throw ConfigError("scenario lists no estimators");
    if (!discrete() && links.size() != topology.edge_count())
      throw ConfigError("scenario has " + std::to_string(links.size()) + " link models for " +
                        std::to_string(topology.edge_count()) + " links");
    if (n_bins < 1) throw ConfigError("need at least one bin");
    for (const auto& r : runs)
      if (r.estimator == Estimator::mle && !discrete())
        throw ConfigError("the MLE baseline is only available for discrete-grid scenarios");
    estimator.validate();
  }
};

/// Exponential and Gamma(2) in equal proportion, both with the given mean.
inline ParametricModel exp_gamma_mixture(double mean) {
  return FiniteMixture{{0.5, 0.5}, {Exponential{mean}, Gamma{2.0, mean / 2.0}}};
}

/// Zero atom of mass `atom` plus a Weibull body; the overall mean is `mean`.
inline ParametricModel atom_weibull(double atom, double shape, double mean) {
  const double body_mean = mean / (1.0 - atom);
  const double scale = body_mean / std::tgamma(1.0 + 1.0 / shape);
  return FiniteMixture{{atom, 1.0 - atom}, {DiscreteGrid{{1.0}, 1.0}, Weibull{shape, scale}}};
}

inline std::vector<std::string> builtin_scenario_names() { return {"discrete4", "exp4", "expgamma4", "weibull8"}; }

inline Scenario builtin_scenario(const std::string& name) {
  Scenario s;
  s.name = name;
  s.estimator.max_outer_iterations = 200;
  s.estimator.relative_tolerance = 1e-8;
  const std::vector<double> means{3, 1, 5, 10, 6, 4, 20};
  if (name == "discrete4") {
    s.topology = four_leaf_tree();
    s.grid_points = 6;
    s.samples = 500;
    s.runs = {{Estimator::mle, Binning::equal}, {Estimator::cf, Binning::equal}, {Estimator::wcf, Binning::equal}};
    s.estimator.frequencies = 3000;
    s.estimator.wcf_frequencies = 1000;
    s.estimator.t_scale = 5.0;
  } else if (name == "exp4" || name == "expgamma4") {
    s.topology = four_leaf_tree();
    for (double m : means) s.links.push_back(name == "exp4" ? ParametricModel(Exponential{m}) : exp_gamma_mixture(m));
    s.samples = 2000;
    s.runs = {{Estimator::cf, Binning::equal},
              {Estimator::cf, Binning::varying},
              {Estimator::wcf, Binning::equal},
              {Estimator::wcf, Binning::varying}};
    s.estimator.frequencies = 3000;
    s.estimator.wcf_frequencies = 1000;
    s.estimator.t_scale = 5.0;
  } else if (name == "weibull8") {
    s.topology = binary_tree(3);
    // Shared core links are fast, the root link and the leaves slow: means span 0.5 to 20.
    const std::vector<double> link_means{8, 0.5, 1, 2, 1.5, 0.75, 1.25, 20, 4, 12, 6, 16, 3, 10, 5};
    const std::vector<double> atoms{0.3, 0.5, 0.4, 0.6, 0.2, 0.35, 0.45, 0.25, 0.55, 0.3, 0.4, 0.2, 0.6, 0.5, 0.35};
    for (std::size_t j = 0; j < link_means.size(); ++j) s.links.push_back(atom_weibull(atoms[j], 0.9, link_means[j]));
    s.samples = 1800;
    s.zero_atom = true;
    s.n_bins = 6;
    s.replications = 5;
    s.runs = {{Estimator::cf, Binning::varying}};
    s.estimator.frequencies = 3000;
    s.estimator.t_scale = 20.0;
    s.synthetic = true;
    s.note = "synthetic stand-in for trace-driven delays: zero atoms and a Weibull(0.9) body";
  } else {
    throw ConfigError("unknown scenario '" + name + "' (expected discrete4, exp4, expgamma4 or weibull8)");
  }
  return s;
}

/// Uniform draw from the probability simplex via normalized exponentials.
template <class Rng>
std::vector<double> uniform_simplex(std::size_t n, Rng& rng) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> p(n);
  double s = 0.0;
  for (auto& v : p) s += (v = e(rng));
  for (auto& v : p) v /= s;
  return p;
}

struct Replicate {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  std::vector<ParametricModel> truth;
  Eigen::MatrixXd x;  // N x J link delays
  MeasurementSet measurements;
};

/// One replication's data, seeded with base_seed + index.
inline Replicate generate(const Scenario& s, std::size_t index) {
  s.validate();
  const std::uint64_t seed = s.base_seed + index;
  std::mt19937_64 rng(seed);
  const RoutingMatrix a = routing_matrix(s.topology);
  const std::size_t J = a.cols();

  std::vector<ParametricModel> truth;
  if (s.discrete()) {
    for (std::size_t j = 0; j < J; ++j) truth.emplace_back(DiscreteGrid{uniform_simplex(s.grid_points, rng), 1.0});
  } else {
    truth = s.links;
  }

  Eigen::MatrixXd x(static_cast<Eigen::Index>(s.samples), static_cast<Eigen::Index>(J));
  for (Eigen::Index n = 0; n < x.rows(); ++n)
    for (std::size_t j = 0; j < J; ++j) x(n, static_cast<Eigen::Index>(j)) = truth[j].sample(rng);
  Eigen::MatrixXd y = x * a.entries().transpose();
  return Replicate{index, seed, std::move(truth), std::move(x), MeasurementSet(std::move(y), s.topology.leaves())};
}

struct EstimatorOutcome {
  EstimatorRun run;
  bool ok = false;
  std::string error;
  std::vector<Mixture> fitted;
  std::vector<double> metric;  // per link
  std::vector<double> objective;
  std::vector<std::vector<double>> pilot_objectives;  // earlier fits of the bin refinement
  std::vector<double> log_likelihood;
  std::vector<std::string> warnings;
  double seconds = 0.0;
};

struct ReplicationRecord {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  std::vector<EstimatorOutcome> outcomes;  // same order as Scenario::runs
};

struct RunResult {
  std::string scenario;
  std::string metric;
  std::vector<EstimatorRun> runs;
  std::vector<ErrorSummary> summaries;  // same order as runs
  std::vector<std::size_t> failures;
  std::vector<ReplicationRecord> records;
};

namespace detail {

inline std::mt19937_64 fit_rng(std::uint64_t seed, std::uint64_t tag) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tag)};
  return std::mt19937_64(seq);
}

inline std::vector<double> score(const Scenario& s, const std::vector<ParametricModel>& truth,
                                 const std::vector<std::vector<double>>& reference_quantiles,
                                 const std::vector<Mixture>& fitted) {
  std::vector<double> out;
  for (std::size_t j = 0; j < fitted.size(); ++j) {
    if (s.discrete()) {
      out.push_back(l1_density_distance(truth[j], fitted[j]));
    } else {
      const double sigma = truth[j].sd();
      if (!(sigma > 0.0)) throw DomainError("normalized Mallows distance needs a reference with positive sd");
      out.push_back(mallows(reference_quantiles[j], fitted[j]) / sigma);
    }
  }
  return out;
}

}  // namespace detail

/// Fits every configured estimator on one replicate. Failures are recorded per estimator.
inline ReplicationRecord fit_replicate(const Scenario& s, const Replicate& rep,
                                       const std::vector<std::vector<double>>& reference_quantiles) {
  const RoutingMatrix a = routing_matrix(s.topology);
  ReplicationRecord rec{rep.index, rep.seed, {}};
  std::map<Binning, EstimationResult> base;
  std::map<Binning, std::vector<std::vector<double>>> pilots;
  std::map<Binning, std::string> base_error;

  auto base_fit = [&](Binning b) -> const EstimationResult& {
    if (auto it = base.find(b); it != base.end()) return it->second;
    if (auto it = base_error.find(b); it != base_error.end()) throw NumericalError(it->second);
    auto rng = detail::fit_rng(rep.seed, 1 + static_cast<std::uint64_t>(b));
    EstimatorConfig cfg = s.estimator;
    cfg.variant = Estimator::cf;
    try {
      if (s.discrete()) {
        std::vector<MixtureSpec> specs;
        for (std::size_t j = 0; j < a.cols(); ++j) specs.push_back(MixtureSpec::lattice(j, s.grid_points, 1.0));
        return base.emplace(b, fit(rep.measurements, a, specs, cfg, rng)).first->second;
      }
      RefineConfig rc{s.n_bins, b == Binning::equal ? 0 : s.refine_rounds, s.zero_atom, cfg};
      RefineResult rr = refine(rep.measurements, a, rc, rng);
      for (std::size_t h = 0; h + 1 < rr.history.size(); ++h) pilots[b].push_back(rr.history[h].objective);
      rr.fit.warnings.insert(rr.fit.warnings.end(), rr.warnings.begin(), rr.warnings.end());
      return base.emplace(b, std::move(rr.fit)).first->second;
    } catch (const std::exception& e) {
      base_error.emplace(b, e.what());
      throw;
    }
  };

  for (const auto& run : s.runs) {
    EstimatorOutcome o;
    o.run = run;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      EstimationResult r;
      if (run.estimator == Estimator::mle) {
        r = fit_mle_discrete(rep.measurements, a, s.grid_points, s.estimator);
      } else if (run.estimator == Estimator::cf) {
        r = base_fit(run.bins);
        o.pilot_objectives = pilots[run.bins];
      } else {
        const EstimationResult& init = base_fit(run.bins);
        auto rng = detail::fit_rng(rep.seed, 100 + static_cast<std::uint64_t>(run.bins));
        EstimatorConfig cfg = s.estimator;
        cfg.variant = Estimator::wcf;
        r = fit_wcf(rep.measurements, a, cfg, init, rng);
      }
      o.metric = detail::score(s, rep.truth, reference_quantiles, r.links);
      o.fitted = std::move(r.links);
      o.objective = std::move(r.objective);
      o.log_likelihood = std::move(r.log_likelihood);
      o.warnings = std::move(r.warnings);
      o.ok = true;
    } catch (const std::exception& e) {
      o.error = e.what();
    }
    o.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rec.outcomes.push_back(std::move(o));
  }
  return rec;
}

/// Midpoint quantiles of each true link model (continuous scenarios only).
inline std::vector<std::vector<double>> reference_quantiles(const Scenario& s) {
  std::vector<std::vector<double>> q;
  if (!s.discrete())
    for (const auto& m : s.links) q.push_back(midpoint_quantiles(m));
  return q;
}

/// Runs all replications on up to `jobs` threads and aggregates per estimator.
/// Records are stored by replication index, so the result does not depend on `jobs`.
inline RunResult run(const Scenario& s, std::size_t jobs = 0) {
  s.validate();
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min(jobs, s.replications);
  const auto refq = reference_quantiles(s);

  RunResult out;
  out.scenario = s.name;
  out.metric = s.metric();
  out.runs = s.runs;
  out.records.resize(s.replications);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t r = next++; r < s.replications; r = next++) {
      const Replicate rep = generate(s, r);
      out.records[r] = fit_replicate(s, rep, refq);
    }
  };
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < jobs; ++k) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (std::size_t k = 0; k < s.runs.size(); ++k) {
    std::vector<std::vector<double>> values;
    std::size_t failed = 0;
    for (const auto& rec : out.records) {
      if (rec.outcomes[k].ok) values.push_back(rec.outcomes[k].metric);
      else ++failed;
    }
    out.failures.push_back(failed);
    if (values.empty()) {
      ErrorSummary empty;
      empty.metric = out.metric;
      out.summaries.push_back(std::move(empty));
    } else {
      out.summaries.push_back(summarize(values, out.metric));
    }
  }
  return out;
}

}  // namespace tomo

#endif  // TOMO_SIMULATION_HPP
