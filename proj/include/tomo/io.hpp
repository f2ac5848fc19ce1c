#ifndef TOMO_IO_HPP
#define TOMO_IO_HPP

#include <Eigen/Dense>

#include <charconv>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <variant>
#include <vector>

#include "json.hpp"
#include "tomo/delay_models.hpp"
#include "tomo/error.hpp"
#include "tomo/estimators.hpp"
#include "tomo/metrics.hpp"
#include "tomo/simulation.hpp"
#include "tomo/topology.hpp"

namespace tomo::io {

using Json = nlohmann::ordered_json;

// ---- files

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("write to " + path.string() + " failed");
}

inline Json parse_json(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(what + " is not valid JSON: " + e.what());
  }
}

inline Json read_json(const std::filesystem::path& path) { return parse_json(read_text(path), path.string()); }

inline void write_json(const std::filesystem::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

/// Shortest decimal form that parses back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline double parse_double(std::string_view s, const std::string& where) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw ConfigError("cannot parse number '" + std::string(s) + "' in " + where);
  return v;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    const auto first = cell.find_first_not_of(" \t\r");
    out.push_back(first == std::string::npos ? std::string() : cell.substr(first, cell.find_last_not_of(" \t\r") - first + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

template <class T>
T get_field(const Json& j, const char* key, const std::string& what) {
  if (!j.contains(key)) throw ConfigError(what + " is missing '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError(what + " field '" + key + "' has the wrong type: " + e.what());
  }
}

template <class T>
T get_or(const Json& j, const char* key, T fallback, const std::string& what) {
  return j.contains(key) ? get_field<T>(j, key, what) : fallback;
}

// ---- topology

inline Json to_json(const TreeTopology& t) {
  Json edges = Json::array();
  for (const auto& [p, c] : t.edges()) edges.push_back({p, c});
  return Json{{"root", t.root()}, {"edges", edges}, {"leaves", t.leaves()}};
}

inline TreeTopology topology_from_json(const Json& j) {
  const std::string what = "topology";
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (const auto& e : get_field<Json>(j, "edges", what)) {
    if (!e.is_array() || e.size() != 2) throw ConfigError("topology edges must be [parent, child] pairs");
    edges.emplace_back(e[0].get<std::string>(), e[1].get<std::string>());
  }
  return TreeTopology(get_field<std::string>(j, "root", what), std::move(edges),
                      get_field<std::vector<std::string>>(j, "leaves", what));
}

/// Routing matrix from either a tree description or an explicit "routing_matrix" array.
inline RoutingMatrix routing_from_json(const Json& j) {
  if (!j.contains("routing_matrix")) return routing_matrix(topology_from_json(j));
  const auto rows = get_field<std::vector<std::vector<double>>>(j, "routing_matrix", "topology");
  if (rows.empty() || rows.front().empty()) throw ConfigError("routing matrix is empty");
  Eigen::MatrixXd a(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.front().size()) throw ConfigError("routing matrix rows differ in length");
    for (std::size_t k = 0; k < rows[i].size(); ++k)
      a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
  }
  std::vector<std::string> names;
  for (Eigen::Index k = 0; k < a.cols(); ++k) names.push_back(std::to_string(k + 1));
  return RoutingMatrix(a, names);
}

// ---- mixtures

inline Json to_json(const MixtureSpec& s) {
  Json j{{"link", s.link()}};
  if (s.is_lattice()) {
    j["lattice_points"] = s.lattice_points();
    j["spacing"] = s.spacing();
  } else {
    j["zero_atom"] = s.has_zero_atom();
    j["bins"] = s.endpoints();
    j["tail_scale"] = s.tail_scale();
  }
  return j;
}

inline MixtureSpec spec_from_json(const Json& j) {
  const std::string what = "mixture spec";
  const auto link = get_field<std::size_t>(j, "link", what);
  if (j.contains("lattice_points"))
    return MixtureSpec::lattice(link, get_field<std::size_t>(j, "lattice_points", what), get_or(j, "spacing", 1.0, what));
  return MixtureSpec::binned(link, get_or(j, "zero_atom", false, what), get_field<std::vector<double>>(j, "bins", what),
                             get_field<double>(j, "tail_scale", what));
}

inline Json to_json(const Mixture& m) {
  Json j = to_json(m.spec());
  j["weights"] = m.weights().values();
  return j;
}

inline Mixture mixture_from_json(const Json& j) {
  return Mixture(spec_from_json(j), MixtureWeights(get_field<std::vector<double>>(j, "weights", "mixture")));
}

// ---- parametric models

inline Json to_json(const ParametricModel& m) {
  return std::visit(
      [](const auto& v) -> Json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, DiscreteGrid>) {
          return Json{{"kind", "discrete"}, {"probs", v.probs}, {"spacing", v.spacing}};
        } else if constexpr (std::is_same_v<T, Exponential>) {
          return Json{{"kind", "exponential"}, {"mean", v.mean}};
        } else if constexpr (std::is_same_v<T, Gamma>) {
          return Json{{"kind", "gamma"}, {"shape", v.shape}, {"scale", v.scale}};
        } else if constexpr (std::is_same_v<T, Weibull>) {
          return Json{{"kind", "weibull"}, {"shape", v.shape}, {"scale", v.scale}};
        } else {
          Json comps = Json::array();
          for (const auto& c : v.components) comps.push_back(to_json(c));
          return Json{{"kind", "mixture"}, {"weights", v.weights}, {"components", comps}};
        }
      },
      m.value());
}

inline ParametricModel model_from_json(const Json& j) {
  const std::string what = "delay model";
  const auto kind = get_field<std::string>(j, "kind", what);
  if (kind == "discrete")
    return DiscreteGrid{get_field<std::vector<double>>(j, "probs", what), get_or(j, "spacing", 1.0, what)};
  if (kind == "exponential") return Exponential{get_field<double>(j, "mean", what)};
  if (kind == "gamma") return Gamma{get_field<double>(j, "shape", what), get_field<double>(j, "scale", what)};
  if (kind == "weibull") return Weibull{get_field<double>(j, "shape", what), get_field<double>(j, "scale", what)};
  if (kind == "mixture") {
    FiniteMixture fm;
    fm.weights = get_field<std::vector<double>>(j, "weights", what);
    for (const auto& c : get_field<Json>(j, "components", what)) fm.components.push_back(model_from_json(c));
    return fm;
  }
  throw ConfigError("unknown delay model kind '" + kind + "'");
}

// ---- estimator configuration and results

inline Json to_json(const EstimatorConfig& c) {
  Json j{{"variant", to_string(c.variant)},
         {"max_outer_iterations", c.max_outer_iterations},
         {"relative_tolerance", c.relative_tolerance},
         {"qp_tolerance", c.qp_tolerance},
         {"starts", c.starts},
         {"frequencies", c.frequencies},
         {"t_scale", c.t_scale},
         {"em_max_iterations", c.em_max_iterations},
         {"em_tolerance", c.em_tolerance}};
  if (c.ridge) j["ridge"] = *c.ridge;
  if (c.wcf_frequencies) j["wcf_frequencies"] = *c.wcf_frequencies;
  return j;
}

inline EstimatorConfig config_from_json(const Json& j, EstimatorConfig c = {}) {
  const std::string what = "estimator config";
  if (j.contains("variant")) c.variant = estimator_from_string(get_field<std::string>(j, "variant", what));
  c.max_outer_iterations = get_or(j, "max_outer_iterations", c.max_outer_iterations, what);
  c.relative_tolerance = get_or(j, "relative_tolerance", c.relative_tolerance, what);
  c.qp_tolerance = get_or(j, "qp_tolerance", c.qp_tolerance, what);
  c.starts = get_or(j, "starts", c.starts, what);
  c.frequencies = get_or(j, "frequencies", c.frequencies, what);
  c.t_scale = get_or(j, "t_scale", c.t_scale, what);
  c.em_max_iterations = get_or(j, "em_max_iterations", c.em_max_iterations, what);
  c.em_tolerance = get_or(j, "em_tolerance", c.em_tolerance, what);
  if (j.contains("ridge")) c.ridge = get_field<double>(j, "ridge", what);
  if (j.contains("wcf_frequencies")) c.wcf_frequencies = get_field<std::size_t>(j, "wcf_frequencies", what);
  c.validate();
  return c;
}

inline Json to_json(const EstimationResult& r) {
  Json links = Json::array();
  for (const auto& l : r.links) links.push_back(to_json(l));
  return Json{{"estimator", to_string(r.estimator)},
              {"links", links},
              {"objective", r.objective},
              {"log_likelihood", r.log_likelihood},
              {"iterations", r.iterations},
              {"converged", r.converged},
              {"wall_seconds", r.wall_seconds},
              {"frequencies", r.frequencies},
              {"ridge", r.ridge},
              {"warnings", r.warnings}};
}

inline EstimationResult result_from_json(const Json& j) {
  const std::string what = "estimation result";
  EstimationResult r;
  r.estimator = estimator_from_string(get_field<std::string>(j, "estimator", what));
  for (const auto& l : get_field<Json>(j, "links", what)) r.links.push_back(mixture_from_json(l));
  r.objective = get_or(j, "objective", std::vector<double>{}, what);
  r.log_likelihood = get_or(j, "log_likelihood", std::vector<double>{}, what);
  r.iterations = get_or(j, "iterations", std::size_t{0}, what);
  r.converged = get_or(j, "converged", false, what);
  r.wall_seconds = get_or(j, "wall_seconds", 0.0, what);
  r.frequencies = get_or(j, "frequencies", std::size_t{0}, what);
  r.ridge = get_or(j, "ridge", 0.0, what);
  r.warnings = get_or(j, "warnings", std::vector<std::string>{}, what);
  return r;
}

// ---- scenarios

inline Json to_json(const Scenario& s) {
  Json links = Json::array();
  for (const auto& m : s.links) links.push_back(to_json(m));
  Json runs = Json::array();
  for (const auto& r : s.runs) runs.push_back({{"estimator", to_string(r.estimator)}, {"bins", to_string(r.bins)}});
  return Json{{"name", s.name},
              {"topology", to_json(s.topology)},
              {"links", links},
              {"grid_points", s.grid_points},
              {"samples", s.samples},
              {"runs", runs},
              {"n_bins", s.n_bins},
              {"zero_atom", s.zero_atom},
              {"refine_rounds", s.refine_rounds},
              {"estimator", to_json(s.estimator)},
              {"replications", s.replications},
              {"base_seed", s.base_seed},
              {"synthetic", s.synthetic},
              {"note", s.note}};
}

/// Fields absent from the file fall back to the built-in scenario named by "base", if any.
inline Scenario scenario_from_json(const Json& j) {
  const std::string what = "scenario";
  Scenario s = j.contains("base") ? builtin_scenario(get_field<std::string>(j, "base", what)) : Scenario{};
  s.name = get_or(j, "name", s.name, what);
  if (j.contains("topology")) s.topology = topology_from_json(j.at("topology"));
  if (j.contains("links")) {
    s.links.clear();
    for (const auto& m : j.at("links")) s.links.push_back(model_from_json(m));
  }
  s.grid_points = get_or(j, "grid_points", s.grid_points, what);
  s.samples = get_or(j, "samples", s.samples, what);
  if (j.contains("runs")) {
    s.runs.clear();
    for (const auto& r : j.at("runs"))
      s.runs.push_back({estimator_from_string(get_field<std::string>(r, "estimator", "run")),
                        binning_from_string(get_or(r, "bins", std::string("equal"), "run"))});
  }
  s.n_bins = get_or(j, "n_bins", s.n_bins, what);
  s.zero_atom = get_or(j, "zero_atom", s.zero_atom, what);
  s.refine_rounds = get_or(j, "refine_rounds", s.refine_rounds, what);
  if (j.contains("estimator")) s.estimator = config_from_json(j.at("estimator"), s.estimator);
  s.replications = get_or(j, "replications", s.replications, what);
  s.base_seed = get_or(j, "base_seed", s.base_seed, what);
  s.synthetic = get_or(j, "synthetic", s.synthetic, what);
  s.note = get_or(j, "note", s.note, what);
  s.validate();
  return s;
}

inline Json to_json(const ReplicationRecord& r) {
  Json outcomes = Json::array();
  for (const auto& o : r.outcomes) {
    Json fitted = Json::array();
    for (const auto& m : o.fitted) fitted.push_back(to_json(m));
    outcomes.push_back({{"run", o.run.label()},
                        {"ok", o.ok},
                        {"error", o.error},
                        {"metric", o.metric},
                        {"links", fitted},
                        {"objective", o.objective},
                        {"log_likelihood", o.log_likelihood},
                        {"warnings", o.warnings},
                        {"seconds", o.seconds}});
  }
  return Json{{"index", r.index}, {"seed", r.seed}, {"outcomes", outcomes}};
}

// ---- CSV

inline std::string measurements_to_csv(const MeasurementSet& m) {
  std::string out;
  for (std::size_t i = 0; i < m.leaf_ids().size(); ++i) out += (i ? "," : "") + m.leaf_ids()[i];
  out += '\n';
  const auto& v = m.values();
  for (Eigen::Index n = 0; n < v.rows(); ++n) {
    for (Eigen::Index i = 0; i < v.cols(); ++i) out += (i ? "," : "") + format_double(v(n, i));
    out += '\n';
  }
  return out;
}

inline MeasurementSet measurements_from_csv(const std::string& text, const std::string& where = "measurements") {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(where + " is empty");
  const auto header = split_csv_line(line);
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw ConfigError(where + " line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                        " columns, header has " + std::to_string(header.size()));
    std::vector<double> row;
    for (const auto& c : cells) row.push_back(parse_double(c, where + " line " + std::to_string(line_no)));
    rows.push_back(std::move(row));
  }
  Eigen::MatrixXd v(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(header.size()));
  for (std::size_t n = 0; n < rows.size(); ++n)
    for (std::size_t i = 0; i < header.size(); ++i) v(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(i)) = rows[n][i];
  return MeasurementSet(std::move(v), header);
}

/// Reorders measurement columns to the topology's leaf order, matching by header name.
inline MeasurementSet align_to_leaves(const MeasurementSet& m, const std::vector<NodeId>& leaves) {
  if (m.receivers() != leaves.size())
    throw ConfigError("measurements have " + std::to_string(m.receivers()) + " columns but the topology has " +
                      std::to_string(leaves.size()) + " leaves");
  if (m.leaf_ids() == leaves) return m;
  Eigen::MatrixXd v(m.values().rows(), m.values().cols());
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    const auto it = std::find(m.leaf_ids().begin(), m.leaf_ids().end(), leaves[i]);
    if (it == m.leaf_ids().end()) throw ConfigError("measurement header has no column for leaf '" + leaves[i] + "'");
    v.col(static_cast<Eigen::Index>(i)) = m.values().col(it - m.leaf_ids().begin());
  }
  return MeasurementSet(std::move(v), leaves);
}

inline const char* summary_header() { return "link,metric,q25,q50,q75,n_reps"; }

inline std::string summary_to_csv(const ErrorSummary& s) {
  std::string out = std::string(summary_header()) + "\n";
  for (std::size_t j = 0; j < s.links.size(); ++j) {
    const auto& l = s.links[j];
    out += std::to_string(j + 1) + "," + s.metric + "," + format_double(l.q25) + "," + format_double(l.q50) + "," +
           format_double(l.q75) + "," + std::to_string(l.n_reps) + "\n";
  }
  return out;
}

inline ErrorSummary summary_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || split_csv_line(line) != split_csv_line(summary_header()))
    throw ConfigError("summary CSV must start with the header " + std::string(summary_header()));
  ErrorSummary s;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = split_csv_line(line);
    if (c.size() != 6) throw ConfigError("summary CSV row needs 6 columns");
    if (static_cast<std::size_t>(parse_double(c[0], "summary")) != s.links.size() + 1)
      throw ConfigError("summary CSV links must be numbered 1, 2, ... in order");
    s.metric = c[1];
    s.links.push_back({parse_double(c[2], "summary"), parse_double(c[3], "summary"), parse_double(c[4], "summary"),
                       static_cast<std::size_t>(parse_double(c[5], "summary"))});
  }
  return s;
}

}  // namespace tomo::io

#endif  // TOMO_IO_HPP
