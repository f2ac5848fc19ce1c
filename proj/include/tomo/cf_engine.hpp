#ifndef TOMO_CF_ENGINE_HPP
#define TOMO_CF_ENGINE_HPP

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "tomo/delay_models.hpp"
#include "tomo/error.hpp"
#include "tomo/topology.hpp"

namespace tomo {

/// N observed end-to-end delay vectors, one row per probe.
class MeasurementSet {
 public:
  MeasurementSet() = default;
  explicit MeasurementSet(Eigen::MatrixXd values, std::vector<std::string> leaf_ids = {})
      : values_(std::move(values)), leaf_ids_(std::move(leaf_ids)) {
    if (values_.rows() < 1) throw ConfigError("measurement set needs at least one probe");
    if (values_.cols() < 1) throw ConfigError("measurement set needs at least one receiver");
    if (!values_.allFinite() || values_.minCoeff() < 0.0) throw ConfigError("end-to-end delays must be finite and >= 0");
    if (leaf_ids_.empty())
      for (Eigen::Index i = 0; i < values_.cols(); ++i) leaf_ids_.push_back(std::to_string(i + 1));
    if (leaf_ids_.size() != static_cast<std::size_t>(values_.cols()))
      throw ConfigError("leaf id count does not match the measurement columns");
    const Eigen::RowVectorXd mean = values_.colwise().mean();
    sd_.resize(values_.cols());
    for (Eigen::Index i = 0; i < values_.cols(); ++i) {
      const double ss = (values_.col(i).array() - mean(i)).square().sum();
      sd_(i) = values_.rows() > 1 ? std::sqrt(ss / static_cast<double>(values_.rows() - 1)) : 0.0;
    }
  }

  const Eigen::MatrixXd& values() const { return values_; }
  std::size_t size() const { return static_cast<std::size_t>(values_.rows()); }
  std::size_t receivers() const { return static_cast<std::size_t>(values_.cols()); }
  const std::vector<std::string>& leaf_ids() const { return leaf_ids_; }
  const Eigen::VectorXd& sd() const { return sd_; }

 private:
  Eigen::MatrixXd values_;
  std::vector<std::string> leaf_ids_;
  Eigen::VectorXd sd_;
};

/// Frequency points t_k in R^I, each supported on at most `subspace_dim` receivers.
struct FrequencySet {
  Eigen::MatrixXd points;  // K x I
  double scale = 5.0;
  std::size_t subspace_dim = 2;
  std::vector<std::array<std::size_t, 2>> support;  // receiver pair of each row (equal entries for 1-dim)

  std::size_t size() const { return static_cast<std::size_t>(points.rows()); }
};

/// Draws K frequencies on 2-dim receiver subspaces, pairs cycled round-robin in
/// lexicographic order. Coordinates are N(0, scale^2) divided by the receiver's sd.
/// A single receiver falls back to 1-dim sampling.
template <class Rng>
FrequencySet sample_frequencies(std::size_t receivers, std::size_t count, double scale, const Eigen::VectorXd& sd,
                                Rng& rng) {
  if (receivers < 1) throw ConfigError("frequency sampling needs at least one receiver");
  if (count < 1) throw ConfigError("frequency sampling needs K >= 1");
  if (static_cast<std::size_t>(sd.size()) != receivers) throw ConfigError("sd vector length must equal I");
  FrequencySet f;
  f.scale = scale;
  f.subspace_dim = receivers >= 2 ? 2 : 1;
  f.points = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(receivers));
  std::vector<std::array<std::size_t, 2>> pairs;
  if (receivers == 1) {
    pairs.push_back({0, 0});
  } else {
    for (std::size_t i = 0; i < receivers; ++i)
      for (std::size_t k = i + 1; k < receivers; ++k) pairs.push_back({i, k});
  }
  auto norm = [&](std::size_t i) { return sd(static_cast<Eigen::Index>(i)) > 0.0 ? sd(static_cast<Eigen::Index>(i)) : 1.0; };
  std::normal_distribution<double> gauss(0.0, scale);
  for (std::size_t k = 0; k < count; ++k) {
    const auto& pr = pairs[k % pairs.size()];
    const auto row = static_cast<Eigen::Index>(k);
    f.points(row, static_cast<Eigen::Index>(pr[0])) = gauss(rng) / norm(pr[0]);
    if (pr[1] != pr[0]) f.points(row, static_cast<Eigen::Index>(pr[1])) = gauss(rng) / norm(pr[1]);
    f.support.push_back(pr);
  }
  return f;
}

inline Complex empirical_cf(const MeasurementSet& m, const Eigen::VectorXd& t) {
  if (static_cast<std::size_t>(t.size()) != m.receivers()) throw ConfigError("frequency dimension must equal I");
  const Eigen::VectorXd phase = m.values() * t;
  Complex s{0.0, 0.0};
  for (Eigen::Index n = 0; n < phase.size(); ++n) s += std::polar(1.0, phase(n));
  return s / static_cast<double>(m.size());
}

/// Empirical CF at every frequency in the set, exploiting the sparse support.
inline Eigen::VectorXcd empirical_cf(const MeasurementSet& m, const FrequencySet& f) {
  const auto& y = m.values();
  Eigen::VectorXcd out(f.points.rows());
  for (Eigen::Index k = 0; k < f.points.rows(); ++k) {
    if (f.support.empty()) {
      out(k) = empirical_cf(m, f.points.row(k).transpose());
      continue;
    }
    const auto [a, b] = f.support[static_cast<std::size_t>(k)];
    const double ta = f.points(k, static_cast<Eigen::Index>(a));
    const double tb = a == b ? 0.0 : f.points(k, static_cast<Eigen::Index>(b));
    const auto ca = y.col(static_cast<Eigen::Index>(a));
    const auto cb = y.col(static_cast<Eigen::Index>(b));
    Complex s{0.0, 0.0};
    for (Eigen::Index n = 0; n < y.rows(); ++n) s += std::polar(1.0, ta * ca(n) + tb * cb(n));
    out(k) = s / static_cast<double>(y.rows());
  }
  return out;
}

/// phi_Y(t) = prod_j phi_{X_j}(t . A^j).
inline Complex model_cf_y(const RoutingMatrix& a, const std::vector<Mixture>& links, const Eigen::VectorXd& t) {
  if (links.size() != a.cols()) throw ConfigError("need one link model per routing-matrix column");
  if (static_cast<std::size_t>(t.size()) != a.rows()) throw ConfigError("frequency dimension must equal I");
  const Eigen::VectorXd s = a.entries().transpose() * t;
  Complex p{1.0, 0.0};
  for (std::size_t j = 0; j < links.size(); ++j) p *= links[j].cf(s(static_cast<Eigen::Index>(j)));
  return p;
}

inline Eigen::VectorXcd model_cf_y(const RoutingMatrix& a, const std::vector<Mixture>& links, const FrequencySet& f) {
  Eigen::VectorXcd out(f.points.rows());
  for (Eigen::Index k = 0; k < f.points.rows(); ++k) out(k) = model_cf_y(a, links, f.points.row(k).transpose());
  return out;
}

/// eps_k = sqrt(N) (empirical - model) at every frequency.
inline Eigen::VectorXcd residuals(const MeasurementSet& m, const RoutingMatrix& a, const std::vector<Mixture>& links,
                                  const FrequencySet& f) {
  return std::sqrt(static_cast<double>(m.size())) * (empirical_cf(m, f) - model_cf_y(a, links, f));
}

/// Covariance of the residual vector under the model:
/// W_jk = phi(t_j - t_k) - phi(t_j) conj(phi(t_k)).
inline Eigen::MatrixXcd weight_matrix(const RoutingMatrix& a, const std::vector<Mixture>& links, const FrequencySet& f) {
  if (links.size() != a.cols()) throw ConfigError("need one link model per routing-matrix column");
  const Eigen::Index K = f.points.rows();
  const Eigen::MatrixXd proj = f.points * a.entries();  // K x J projected frequencies
  const Eigen::VectorXcd phi = model_cf_y(a, links, f);
  Eigen::MatrixXcd w(K, K);
  for (Eigen::Index j = 0; j < K; ++j) {
    for (Eigen::Index k = j; k < K; ++k) {
      Complex diff{1.0, 0.0};
      for (std::size_t l = 0; l < links.size(); ++l) {
        const auto col = static_cast<Eigen::Index>(l);
        diff *= links[l].cf(proj(j, col) - proj(k, col));
      }
      w(j, k) = diff - phi(j) * std::conj(phi(k));
      w(k, j) = std::conj(w(j, k));
    }
    w(j, j) = Complex(w(j, j).real(), 0.0);
  }
  return w;
}

/// Per-link CF table for the coordinate-descent fit.
///
/// Holds the basis CFs Phi_j(t_k . A^j) (K x n_j per link) and the current link CF
/// values (K x J). Only the column of the link being updated is recomputed.
class CfCache {
 public:
  CfCache(const RoutingMatrix& a, std::vector<MixtureSpec> specs, const FrequencySet& f)
      : specs_(std::move(specs)) {
    if (specs_.size() != a.cols()) throw ConfigError("need one mixture spec per routing-matrix column");
    if (static_cast<std::size_t>(f.points.cols()) != a.rows()) throw ConfigError("frequency dimension must equal I");
    const Eigen::MatrixXd proj = f.points * a.entries();
    const Eigen::Index K = f.points.rows();
    basis_.resize(specs_.size());
    link_cf_ = Eigen::MatrixXcd::Ones(K, static_cast<Eigen::Index>(specs_.size()));
    for (std::size_t j = 0; j < specs_.size(); ++j) {
      const auto n = static_cast<Eigen::Index>(specs_[j].size());
      basis_[j].resize(K, n);
      std::vector<Complex> row(specs_[j].size());
      for (Eigen::Index k = 0; k < K; ++k) {
        basis_cf_all(specs_[j], proj(k, static_cast<Eigen::Index>(j)), row);
        for (Eigen::Index l = 0; l < n; ++l) basis_[j](k, l) = row[static_cast<std::size_t>(l)];
      }
      set_weights(j, MixtureWeights::uniform(specs_[j].size()));
    }
  }

  std::size_t links() const { return specs_.size(); }
  std::size_t frequencies() const { return static_cast<std::size_t>(link_cf_.rows()); }
  const MixtureSpec& spec(std::size_t j) const { return specs_[j]; }
  const std::vector<MixtureSpec>& specs() const { return specs_; }
  const Eigen::MatrixXcd& basis(std::size_t j) const { return basis_[j]; }
  const MixtureWeights& weights(std::size_t j) const { return weights_[j]; }

  void set_weights(std::size_t j, const MixtureWeights& w) {
    if (w.size() != specs_[j].size()) throw ConfigError("weight count does not match the mixture spec");
    if (weights_.size() < specs_.size()) weights_.resize(specs_.size());
    weights_[j] = w;
    const Eigen::Map<const Eigen::VectorXd> p(w.values().data(), static_cast<Eigen::Index>(w.size()));
    link_cf_.col(static_cast<Eigen::Index>(j)) = basis_[j] * p.cast<Complex>();
  }

  /// prod_{l != j} phi_{X_l}(t_k . A^l) for every k.
  Eigen::VectorXcd others(std::size_t j) const {
    Eigen::VectorXcd out = Eigen::VectorXcd::Ones(link_cf_.rows());
    for (std::size_t l = 0; l < specs_.size(); ++l)
      if (l != j) out.array() *= link_cf_.col(static_cast<Eigen::Index>(l)).array();
    return out;
  }

  Eigen::VectorXcd model_cf() const { return link_cf_.rowwise().prod(); }

  /// Rows k of the affine map theta_j -> phi_Y(t_k): M = diag(others) Phi_j.
  Eigen::MatrixXcd design(std::size_t j) const { return others(j).asDiagonal() * basis_[j]; }

  std::vector<Mixture> mixtures() const {
    std::vector<Mixture> out;
    for (std::size_t j = 0; j < specs_.size(); ++j) out.emplace_back(specs_[j], weights_[j]);
    return out;
  }

 private:
  std::vector<MixtureSpec> specs_;
  std::vector<Eigen::MatrixXcd> basis_;
  std::vector<MixtureWeights> weights_;
  Eigen::MatrixXcd link_cf_;
};

}  // namespace tomo

#endif  // TOMO_CF_ENGINE_HPP
