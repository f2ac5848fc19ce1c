#include <CLI11.hpp>

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "tomo/binning.hpp"
#include "tomo/estimators.hpp"
#include "tomo/identifiability.hpp"
#include "tomo/io.hpp"
#include "tomo/metrics.hpp"
#include "tomo/simulation.hpp"
#include "tomo/topology.hpp"

namespace fs = std::filesystem;
using tomo::io::Json;

namespace {

enum Exit { ok = 0, config = 2, numerical = 3, io_failure = 4 };

struct Options {
  std::string scenario;
  std::string topology;
  std::string measurements;
  std::string estimator = "cf";
  std::string bins = "varying";
  std::optional<std::size_t> n_bins;
  std::optional<std::size_t> k_frequencies;
  std::optional<double> t_scale;
  std::optional<std::size_t> reps;
  std::uint64_t seed = 1;
  std::size_t jobs = 0;
  std::string out = "out";
  std::string figure;
  std::size_t grid_points = 0;
  bool zero_atom = false;
  bool quiet = false;
};

std::uint64_t effective_seed(const Options& o) {
  if (const char* env = std::getenv("TOMO_SEED"); env != nullptr && *env != '\0') {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw tomo::ConfigError(std::string("TOMO_SEED is not an unsigned integer: ") + env);
    }
  }
  return o.seed;
}

tomo::Scenario load_scenario(const std::string& name_or_file) {
  if (name_or_file.empty()) throw tomo::ConfigError("--scenario is required");
  const auto names = tomo::builtin_scenario_names();
  if (std::find(names.begin(), names.end(), name_or_file) != names.end()) return tomo::builtin_scenario(name_or_file);
  if (fs::exists(name_or_file)) return tomo::io::scenario_from_json(tomo::io::read_json(name_or_file));
  return tomo::builtin_scenario(name_or_file);
}

void apply_overrides(tomo::Scenario& s, const Options& o) {
  if (o.k_frequencies) s.estimator.frequencies = *o.k_frequencies;
  if (o.t_scale) s.estimator.t_scale = *o.t_scale;
  if (o.n_bins) s.n_bins = *o.n_bins;
  if (o.reps) s.replications = *o.reps;
  s.base_seed = effective_seed(o);
  s.validate();
}

/// Grid of `points` x values on [0, upper].
std::vector<double> cdf_grid(double upper, std::size_t points = 201) {
  std::vector<double> x(points);
  for (std::size_t k = 0; k < points; ++k) x[k] = upper * static_cast<double>(k) / static_cast<double>(points - 1);
  return x;
}

std::string fitted_cdf_csv(const std::vector<tomo::Mixture>& links) {
  std::string out = "link,x,estimate\n";
  for (std::size_t j = 0; j < links.size(); ++j) {
    const double upper = std::max(links[j].quantile(0.999), 1e-9);
    for (double x : cdf_grid(upper))
      out += std::to_string(j + 1) + "," + tomo::io::format_double(x) + "," +
             tomo::io::format_double(links[j].cdf(x)) + "\n";
  }
  return out;
}

/// CDF overlay of the truth and every successful fit in one replication.
std::string overlay_csv(const tomo::Scenario& s, const tomo::Replicate& rep, const tomo::ReplicationRecord& rec) {
  std::string out = "link,x,truth";
  for (const auto& o : rec.outcomes) out += "," + o.run.label();
  out += "\n";
  for (std::size_t j = 0; j < rep.truth.size(); ++j) {
    const double upper = std::max(rep.truth[j].quantile(0.999), 1e-9);
    for (double x : cdf_grid(upper)) {
      out += std::to_string(j + 1) + "," + tomo::io::format_double(x) + "," + tomo::io::format_double(rep.truth[j].cdf(x));
      for (const auto& o : rec.outcomes)
        out += "," + (o.ok ? tomo::io::format_double(o.fitted[j].cdf(x)) : std::string("nan"));
      out += "\n";
    }
  }
  (void)s;
  return out;
}

void log(const Options& o, const std::string& msg) {
  if (!o.quiet) std::cerr << msg << "\n";
}

int cmd_simulate(const Options& o) {
  tomo::Scenario s = load_scenario(o.scenario);
  if (!o.reps) s.replications = 1;
  apply_overrides(s, o);
  const fs::path out(o.out);
  tomo::io::write_json(out / "topology.json", tomo::io::to_json(s.topology));
  tomo::io::write_json(out / "scenario.json", tomo::io::to_json(s));
  for (std::size_t r = 0; r < s.replications; ++r) {
    const tomo::Replicate rep = tomo::generate(s, r);
    const std::string suffix = s.replications == 1 ? "" : "_" + std::to_string(r);
    tomo::io::write_text(out / ("measurements" + suffix + ".csv"), tomo::io::measurements_to_csv(rep.measurements));
    Json truth = Json::array();
    for (const auto& m : rep.truth) truth.push_back(tomo::io::to_json(m));
    tomo::io::write_json(out / ("truth" + suffix + ".json"),
                         Json{{"scenario", s.name}, {"seed", rep.seed}, {"synthetic", s.synthetic}, {"links", truth}});
  }
  log(o, "wrote " + std::to_string(s.replications) + " replication(s) of " + s.name + " to " + out.string());
  return ok;
}

int cmd_estimate(const Options& o) {
  if (o.topology.empty() || o.measurements.empty())
    throw tomo::ConfigError("estimate needs --topology and --measurements");
  const tomo::TreeTopology topo = tomo::io::topology_from_json(tomo::io::read_json(o.topology));
  const tomo::RoutingMatrix a = tomo::routing_matrix(topo);
  const tomo::MeasurementSet m = tomo::io::align_to_leaves(
      tomo::io::measurements_from_csv(tomo::io::read_text(o.measurements), o.measurements), topo.leaves());

  tomo::EstimatorConfig cfg;
  cfg.variant = tomo::estimator_from_string(o.estimator);
  if (o.k_frequencies) cfg.frequencies = *o.k_frequencies;
  if (o.t_scale) cfg.t_scale = *o.t_scale;
  cfg.max_outer_iterations = 200;
  cfg.relative_tolerance = 1e-8;
  cfg.validate();
  const tomo::Binning bins = tomo::binning_from_string(o.bins);
  std::mt19937_64 rng(effective_seed(o));

  std::vector<std::string> warnings;
  const auto report = tomo::identifiability_check(a);
  if (!report.identifiable_up_to_shift)
    warnings.push_back("product matrix rank " + std::to_string(report.rank) + " < " + std::to_string(report.links) +
                       " links: distributions are not identifiable from these paths");

  tomo::EstimationResult result;
  if (cfg.variant == tomo::Estimator::mle) {
    if (o.grid_points == 0) throw tomo::ConfigError("--estimator mle needs --grid-points");
    result = tomo::fit_mle_discrete(m, a, o.grid_points, cfg);
  } else {
    tomo::EstimationResult pilot;
    if (o.grid_points > 0) {
      std::vector<tomo::MixtureSpec> specs;
      for (std::size_t j = 0; j < a.cols(); ++j) specs.push_back(tomo::MixtureSpec::lattice(j, o.grid_points, 1.0));
      pilot = tomo::fit(m, a, specs, cfg, rng);
    } else {
      const tomo::RefineConfig rc{o.n_bins.value_or(12), bins == tomo::Binning::equal ? 0u : 2u, o.zero_atom, cfg};
      tomo::RefineResult rr = tomo::refine(m, a, rc, rng);
      warnings.insert(warnings.end(), rr.warnings.begin(), rr.warnings.end());
      pilot = std::move(rr.fit);
    }
    // WCF starts from the CF fit and reuses its bins.
    result = cfg.variant == tomo::Estimator::wcf ? tomo::fit_wcf(m, a, cfg, pilot, rng) : std::move(pilot);
  }
  result.warnings.insert(result.warnings.begin(), warnings.begin(), warnings.end());

  const fs::path out(o.out);
  Json j = tomo::io::to_json(result);
  j["config"] = tomo::io::to_json(cfg);
  j["bins"] = o.grid_points > 0 ? "lattice" : o.bins;
  j["seed"] = effective_seed(o);
  tomo::io::write_json(out / "result.json", j);
  tomo::io::write_text(out / "cdf.csv", fitted_cdf_csv(result.links));
  for (const auto& w : result.warnings) log(o, "warning: " + w);
  log(o, "wrote " + (out / "result.json").string());
  return ok;
}

int write_counterexample(const fs::path& out) {
  const auto gap = tomo::counterexample_joint_cf_gap();
  const tomo::PolyaCF c21(2.0, 1.0), c31(3.0, 1.0), c01(0.0, 1.0);
  std::string cf = "t,c_2_1,c_3_1,c_0_1\n";
  for (int k = -600; k <= 600; ++k) {
    const double t = 0.01 * k;
    cf += tomo::io::format_double(t) + "," + tomo::io::format_double(c21(t)) + "," + tomo::io::format_double(c31(t)) +
          "," + tomo::io::format_double(c01(t)) + "\n";
  }
  std::string dens = "x,f_2_1,f_3_1\n";
  for (int k = -200; k <= 200; ++k) {
    const double x = 0.05 * k;
    dens += tomo::io::format_double(x) + "," + tomo::io::format_double(c21.density(x)) + "," +
            tomo::io::format_double(c31.density(x)) + "\n";
  }
  tomo::io::write_text(out / "counterexample_cf.csv", cf);
  tomo::io::write_text(out / "counterexample_density.csv", dens);
  tomo::io::write_json(out / "counterexample_gap.json", Json{{"joint_gap", gap.joint_gap},
                                                             {"marginal_gap", gap.marginal_gap},
                                                             {"marginal_argmax", gap.marginal_argmax},
                                                             {"grid_points_per_axis", gap.points}});
  std::cout << "joint_gap " << tomo::io::format_double(gap.joint_gap) << "\nmarginal_gap "
            << tomo::io::format_double(gap.marginal_gap) << "\n";
  return ok;
}

int cmd_reproduce(const Options& o) {
  const fs::path out(o.out);
  if (o.figure == "fig10") return write_counterexample(out);

  std::string name;
  std::vector<tomo::EstimatorRun> runs;
  bool overlay = false;
  if (o.figure == "fig4") {
    name = "discrete4";
  } else if (o.figure == "fig6" || o.figure == "fig8") {
    name = "expgamma4";
    overlay = o.figure == "fig6";
  } else if (o.figure == "fig7") {
    name = "exp4";
  } else if (o.figure == "fig9") {
    name = "weibull8";
    overlay = true;
  } else {
    throw tomo::ConfigError("unknown figure '" + o.figure + "' (expected fig4, fig6, fig7, fig8, fig9 or fig10)");
  }
  tomo::Scenario s = tomo::builtin_scenario(name);
  if (!o.reps) s.replications = name == "weibull8" ? 5 : 20;
  apply_overrides(s, o);

  log(o, "running " + s.name + ": " + std::to_string(s.replications) + " replications");
  const tomo::RunResult r = tomo::run(s, o.jobs);
  tomo::io::write_json(out / "scenario.json", tomo::io::to_json(s));
  for (std::size_t k = 0; k < r.runs.size(); ++k) {
    tomo::io::write_text(out / ("summary_" + r.runs[k].label() + ".csv"), tomo::io::summary_to_csv(r.summaries[k]));
    if (r.failures[k] > 0)
      log(o, r.runs[k].label() + ": " + std::to_string(r.failures[k]) + " failed replication(s)");
  }
  for (const auto& rec : r.records)
    tomo::io::write_json(out / "replications" / ("rep_" + std::to_string(rec.index) + ".json"), tomo::io::to_json(rec));
  if (overlay) {
    const tomo::Replicate rep = tomo::generate(s, 0);
    tomo::io::write_text(out / "cdf_overlay.csv", overlay_csv(s, rep, r.records.front()));
  }

  for (std::size_t k = 0; k < r.runs.size(); ++k) {
    std::cout << r.runs[k].label() << " median " << r.metric << ":";
    for (double v : r.summaries[k].medians()) std::cout << " " << tomo::io::format_double(v);
    std::cout << "\n";
  }
  return ok;
}

int cmd_check(const Options& o) {
  if (o.topology.empty()) throw tomo::ConfigError("check needs --topology");
  const tomo::RoutingMatrix a = tomo::io::routing_from_json(tomo::io::read_json(o.topology));
  const auto r = tomo::identifiability_check(a);
  const Json j{{"identifiable_up_to_shift", r.identifiable_up_to_shift},
               {"product_matrix_rank", r.rank},
               {"links", r.links},
               {"receivers", a.rows()}};
  std::cout << j.dump(2) << "\n";
  if (!o.out.empty() && o.out != "-") tomo::io::write_json(fs::path(o.out) / "check.json", j);
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Link delay distribution inference from end-to-end multicast measurements"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* c) {
    c->add_option("--seed", o.seed, "Base random seed (TOMO_SEED overrides)");
    c->add_option("--out", o.out, "Output directory");
    c->add_flag("--quiet", o.quiet, "Suppress progress messages");
  };
  auto fitting = [&](CLI::App* c) {
    c->add_option("--n-bins", o.n_bins, "Bins per link");
    c->add_option("--k-frequencies", o.k_frequencies, "Number of frequency points K");
    c->add_option("--t-scale", o.t_scale, "Frequency scale after per-receiver normalization");
  };

  auto* sim = app.add_subcommand("simulate", "Generate measurements from a scenario");
  sim->add_option("--scenario", o.scenario, "Built-in scenario name or scenario JSON file")->required();
  sim->add_option("--reps", o.reps, "Number of replications to write");
  common(sim);

  auto* est = app.add_subcommand("estimate", "Estimate link delay distributions from measurements");
  est->add_option("--measurements", o.measurements, "Measurement CSV")->required();
  est->add_option("--topology", o.topology, "Topology JSON")->required();
  est->add_option("--estimator", o.estimator, "cf, wcf or mle")->check(CLI::IsMember({"cf", "wcf", "mle"}));
  est->add_option("--bins", o.bins, "equal or varying")->check(CLI::IsMember({"equal", "varying"}));
  est->add_option("--grid-points", o.grid_points, "Fit on the integer grid {0..n-1} instead of bins");
  est->add_flag("--zero-atom", o.zero_atom, "Include a point mass at zero delay");
  fitting(est);
  common(est);

  auto* rep = app.add_subcommand("reproduce", "Run a figure's experiment and write summaries and plot data");
  rep->add_option("figure", o.figure, "fig4, fig6, fig7, fig8, fig9 or fig10")->required();
  rep->add_option("--reps", o.reps, "Replications (default 20; 5 for fig9)");
  rep->add_option("--jobs", o.jobs, "Worker threads (default: all cores)");
  fitting(rep);
  common(rep);

  auto* chk = app.add_subcommand("check", "Identifiability check of a topology");
  chk->add_option("--topology", o.topology, "Topology JSON (tree or routing_matrix)")->required();
  chk->add_option("--out", o.out, "Directory for check.json ('-' to skip)")->default_val("-");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? ok : config;
  }

  try {
    if (*sim) return cmd_simulate(o);
    if (*est) return cmd_estimate(o);
    if (*rep) return cmd_reproduce(o);
    return cmd_check(o);
  } catch (const tomo::IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return io_failure;
  } catch (const tomo::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return numerical;
  } catch (const tomo::Error& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return config;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return numerical;
  }
}
