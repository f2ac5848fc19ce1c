#ifndef TOMO_DELAY_MODELS_HPP
#define TOMO_DELAY_MODELS_HPP

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "tomo/detail/quadrature.hpp"
#include "tomo/error.hpp"

namespace tomo {

using Complex = std::complex<double>;
inline constexpr Complex kI{0.0, 1.0};

/// One basis density of a link mixture.
///
/// atom:    point mass at `lo`
/// uniform: uniform on [lo, hi]
/// tail:    lo + Exponential(scale), i.e. an exponential tail starting at lo
struct Kernel {
  enum class Kind { atom, uniform, tail };
  Kind kind;
  double lo = 0.0;
  double hi = 0.0;
  double scale = 0.0;

  double mean() const {
    switch (kind) {
      case Kind::atom: return lo;
      case Kind::uniform: return 0.5 * (lo + hi);
      case Kind::tail: return lo + scale;
    }
    return 0.0;
  }
  double variance() const {
    switch (kind) {
      case Kind::atom: return 0.0;
      case Kind::uniform: return (hi - lo) * (hi - lo) / 12.0;
      case Kind::tail: return scale * scale;
    }
    return 0.0;
  }
};

/// Basis layout of one link: optional zero atom, uniform bins between consecutive
/// endpoints, and a shifted exponential tail past the last endpoint.
///
/// A lattice layout (atoms at 0, h, 2h, ...) covers discrete grid models.
class MixtureSpec {
 public:
  MixtureSpec() = default;

  static MixtureSpec binned(std::size_t link, bool zero_atom, std::vector<double> endpoints, double tail_scale) {
    if (endpoints.empty() || endpoints.front() != 0.0) throw ConfigError("bin endpoints must start at 0");
    for (std::size_t i = 1; i < endpoints.size(); ++i)
      if (!(endpoints[i] > endpoints[i - 1])) throw ConfigError("bin endpoints must be strictly increasing");
    if (!(tail_scale > 0.0) || !std::isfinite(tail_scale)) throw ConfigError("tail scale must be positive");
    MixtureSpec s;
    s.link_ = link;
    s.zero_atom_ = zero_atom;
    s.endpoints_ = std::move(endpoints);
    s.tail_scale_ = tail_scale;
    if (zero_atom) s.kernels_.push_back({Kernel::Kind::atom, 0.0, 0.0, 0.0});
    for (std::size_t i = 1; i < s.endpoints_.size(); ++i)
      s.kernels_.push_back({Kernel::Kind::uniform, s.endpoints_[i - 1], s.endpoints_[i], 0.0});
    s.kernels_.push_back({Kernel::Kind::tail, s.endpoints_.back(), 0.0, tail_scale});
    return s;
  }

  static MixtureSpec lattice(std::size_t link, std::size_t points, double spacing = 1.0) {
    if (points == 0) throw ConfigError("lattice needs at least one point");
    if (!(spacing > 0.0)) throw ConfigError("lattice spacing must be positive");
    MixtureSpec s;
    s.link_ = link;
    s.zero_atom_ = true;
    s.lattice_points_ = points;
    s.spacing_ = spacing;
    for (std::size_t k = 0; k < points; ++k)
      s.kernels_.push_back({Kernel::Kind::atom, spacing * static_cast<double>(k), 0.0, 0.0});
    return s;
  }

  std::size_t link() const { return link_; }
  bool has_zero_atom() const { return zero_atom_; }
  bool is_lattice() const { return lattice_points_ > 0; }
  std::size_t lattice_points() const { return lattice_points_; }
  double spacing() const { return spacing_; }
  const std::vector<double>& endpoints() const { return endpoints_; }
  double tail_scale() const { return tail_scale_; }
  std::size_t size() const { return kernels_.size(); }
  std::size_t bin_count() const { return endpoints_.empty() ? 0 : endpoints_.size() - 1; }
  const Kernel& kernel(std::size_t l) const { return kernels_.at(l); }
  const std::vector<Kernel>& kernels() const { return kernels_; }

  /// Largest finite support point (last endpoint or last lattice atom).
  double span() const {
    return is_lattice() ? spacing_ * static_cast<double>(lattice_points_ - 1) : endpoints_.back();
  }

  friend bool operator==(const MixtureSpec& a, const MixtureSpec& b) {
    return a.link_ == b.link_ && a.zero_atom_ == b.zero_atom_ && a.endpoints_ == b.endpoints_ &&
           a.tail_scale_ == b.tail_scale_ && a.lattice_points_ == b.lattice_points_ && a.spacing_ == b.spacing_;
  }

 private:
  std::size_t link_ = 0;
  bool zero_atom_ = false;
  std::vector<double> endpoints_;
  double tail_scale_ = 0.0;
  std::size_t lattice_points_ = 0;
  double spacing_ = 1.0;
  std::vector<Kernel> kernels_;
};

/// Mixing probabilities; normalized on construction.
class MixtureWeights {
 public:
  MixtureWeights() = default;
  explicit MixtureWeights(std::vector<double> p) : p_(std::move(p)) {
    if (p_.empty()) throw ConfigError("mixture weights are empty");
    double sum = 0.0;
    for (double v : p_) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("mixture weights must be finite and nonnegative");
      sum += v;
    }
    if (!(sum > 0.0)) throw ConfigError("mixture weights sum to zero");
    for (double& v : p_) v /= sum;
  }

  static MixtureWeights uniform(std::size_t n) { return MixtureWeights(std::vector<double>(n, 1.0)); }

  std::size_t size() const { return p_.size(); }
  double operator[](std::size_t l) const { return p_[l]; }
  const std::vector<double>& values() const { return p_; }

 private:
  std::vector<double> p_;
};

namespace detail {

// (e^{ix} - 1) / (ix), Taylor-expanded to 6th order near zero.
inline Complex expm1_over_ix(double x) {
  if (std::abs(x) < 1e-4) {
    Complex term{1.0, 0.0};
    Complex sum = term;
    for (int m = 1; m <= 6; ++m) {
      term *= kI * x / static_cast<double>(m + 1);
      sum += term;
    }
    return sum;
  }
  return (std::polar(1.0, x) - 1.0) / (kI * x);
}

}  // namespace detail

inline Complex kernel_cf(const Kernel& k, double t) {
  switch (k.kind) {
    case Kernel::Kind::atom: return std::polar(1.0, t * k.lo);
    case Kernel::Kind::uniform: return std::polar(1.0, t * k.lo) * detail::expm1_over_ix(t * (k.hi - k.lo));
    case Kernel::Kind::tail: return std::polar(1.0, t * k.lo) / Complex(1.0, -t * k.scale);
  }
  return {1.0, 0.0};
}

/// Characteristic function of basis kernel `l` at frequency t.
inline Complex basis_cf(const MixtureSpec& spec, std::size_t l, double t) { return kernel_cf(spec.kernel(l), t); }

/// All basis CFs at t. Shares one complex exponential per endpoint.
inline void basis_cf_all(const MixtureSpec& spec, double t, std::span<Complex> out) {
  const auto& ks = spec.kernels();
  if (spec.is_lattice()) {
    const Complex z = std::polar(1.0, t * spec.spacing());
    Complex zk{1.0, 0.0};
    for (std::size_t k = 0; k < ks.size(); ++k) {
      out[k] = zk;
      zk *= z;
    }
    return;
  }
  std::size_t l = 0;
  if (spec.has_zero_atom()) out[l++] = {1.0, 0.0};
  const auto& b = spec.endpoints();
  Complex left{1.0, 0.0};  // e^{i t b_0}, b_0 = 0
  for (std::size_t i = 1; i < b.size(); ++i, ++l) {
    const double width = b[i] - b[i - 1];
    const Complex right = std::polar(1.0, t * b[i]);
    out[l] = std::abs(t * width) < 1e-4 ? left * detail::expm1_over_ix(t * width) : (right - left) / (kI * t * width);
    left = right;
  }
  out[l] = left / Complex(1.0, -t * spec.tail_scale());
}

inline Complex mixture_cf(const MixtureSpec& spec, const MixtureWeights& w, double t) {
  if (t == 0.0) return {1.0, 0.0};
  if (spec.is_lattice()) {
    // Horner in z = e^{i t h}.
    const Complex z = std::polar(1.0, t * spec.spacing());
    Complex acc{0.0, 0.0};
    for (std::size_t k = w.size(); k-- > 0;) acc = acc * z + w[k];
    return acc;
  }
  Complex acc{0.0, 0.0};
  std::size_t l = 0;
  if (spec.has_zero_atom()) acc += w[l++];
  const auto& b = spec.endpoints();
  Complex left{1.0, 0.0};
  for (std::size_t i = 1; i < b.size(); ++i, ++l) {
    const double width = b[i] - b[i - 1];
    const Complex right = std::polar(1.0, t * b[i]);
    acc += w[l] * (std::abs(t * width) < 1e-4 ? left * detail::expm1_over_ix(t * width) : (right - left) / (kI * t * width));
    left = right;
  }
  return acc + w[l] * left / Complex(1.0, -t * spec.tail_scale());
}

/// A fitted (or generating) link delay distribution: basis layout plus weights.
class Mixture {
 public:
  Mixture() = default;
  Mixture(MixtureSpec spec, MixtureWeights weights) : spec_(std::move(spec)), weights_(std::move(weights)) {
    if (spec_.size() != weights_.size()) throw ConfigError("weight count does not match the mixture spec");
  }

  const MixtureSpec& spec() const { return spec_; }
  const MixtureWeights& weights() const { return weights_; }

  Complex cf(double t) const { return mixture_cf(spec_, weights_, t); }

  /// Continuous part of the density; atoms are reported by atoms().
  double density(double x) const {
    double f = 0.0;
    for (std::size_t l = 0; l < spec_.size(); ++l) {
      const auto& k = spec_.kernel(l);
      if (k.kind == Kernel::Kind::uniform && x >= k.lo && x <= k.hi) f += weights_[l] / (k.hi - k.lo);
      if (k.kind == Kernel::Kind::tail && x >= k.lo) f += weights_[l] * std::exp(-(x - k.lo) / k.scale) / k.scale;
    }
    return f;
  }

  std::vector<std::pair<double, double>> atoms() const {
    std::vector<std::pair<double, double>> out;
    for (std::size_t l = 0; l < spec_.size(); ++l)
      if (spec_.kernel(l).kind == Kernel::Kind::atom) out.emplace_back(spec_.kernel(l).lo, weights_[l]);
    return out;
  }

  double cdf(double x) const {
    if (x < 0.0) return 0.0;
    double c = 0.0;
    for (std::size_t l = 0; l < spec_.size(); ++l) {
      const auto& k = spec_.kernel(l);
      const double w = weights_[l];
      switch (k.kind) {
        case Kernel::Kind::atom:
          if (x >= k.lo) c += w;
          break;
        case Kernel::Kind::uniform:
          if (x >= k.hi) c += w;
          else if (x > k.lo) c += w * (x - k.lo) / (k.hi - k.lo);
          break;
        case Kernel::Kind::tail:
          if (x > k.lo) c += w * -std::expm1(-(x - k.lo) / k.scale);
          break;
      }
    }
    return std::min(c, 1.0);
  }

  /// Generalized inverse inf{x : F(x) >= p}; kernels are stored in support order.
  double quantile(double p) const {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("quantile probability must lie in (0, 1)");
    double cum = 0.0;
    std::size_t last = 0;
    for (std::size_t l = 0; l < spec_.size(); ++l)
      if (weights_[l] > 0.0) last = l;
    for (std::size_t l = 0; l < spec_.size(); ++l) {
      const double w = weights_[l];
      if (w <= 0.0) continue;
      if (cum + w >= p || l == last) {
        const auto& k = spec_.kernel(l);
        const double frac = std::clamp((p - cum) / w, 0.0, 1.0);
        switch (k.kind) {
          case Kernel::Kind::atom: return k.lo;
          case Kernel::Kind::uniform: return k.lo + frac * (k.hi - k.lo);
          case Kernel::Kind::tail:
            return k.lo - k.scale * std::log1p(-std::min(frac, 1.0 - std::numeric_limits<double>::epsilon()));
        }
      }
      cum += w;
    }
    return spec_.span();
  }

  double mean() const {
    double m = 0.0;
    for (std::size_t l = 0; l < spec_.size(); ++l) m += weights_[l] * spec_.kernel(l).mean();
    return m;
  }

  double variance() const {
    double second = 0.0;
    for (std::size_t l = 0; l < spec_.size(); ++l) {
      const auto& k = spec_.kernel(l);
      second += weights_[l] * (k.variance() + k.mean() * k.mean());
    }
    const double m = mean();
    return std::max(0.0, second - m * m);
  }

  double sd() const { return std::sqrt(variance()); }

  template <class Rng>
  double sample(Rng& rng) const {
    std::discrete_distribution<std::size_t> pick(weights_.values().begin(), weights_.values().end());
    return sample_kernel(spec_.kernel(pick(rng)), rng);
  }

  template <class Rng>
  std::vector<double> sample(Rng& rng, std::size_t count) const {
    std::discrete_distribution<std::size_t> pick(weights_.values().begin(), weights_.values().end());
    std::vector<double> out(count);
    for (auto& x : out) x = sample_kernel(spec_.kernel(pick(rng)), rng);
    return out;
  }

 private:
  template <class Rng>
  static double sample_kernel(const Kernel& k, Rng& rng) {
    switch (k.kind) {
      case Kernel::Kind::atom: return k.lo;
      case Kernel::Kind::uniform: return std::uniform_real_distribution<double>(k.lo, k.hi)(rng);
      case Kernel::Kind::tail: return k.lo + std::exponential_distribution<double>(1.0 / k.scale)(rng);
    }
    return 0.0;
  }

  MixtureSpec spec_;
  MixtureWeights weights_;
};

inline double mixture_density(const MixtureSpec& s, const MixtureWeights& w, double x) { return Mixture(s, w).density(x); }
inline double mixture_cdf(const MixtureSpec& s, const MixtureWeights& w, double x) { return Mixture(s, w).cdf(x); }
inline double mixture_quantile(const MixtureSpec& s, const MixtureWeights& w, double p) {
  return Mixture(s, w).quantile(p);
}

// ---------------------------------------------------------------------------
// Parametric generators used by the simulation scenarios.

class ParametricModel;

/// Probabilities on the grid {0, h, 2h, ...}.
struct DiscreteGrid {
  std::vector<double> probs;
  double spacing = 1.0;
};
struct Exponential {
  double mean = 1.0;
};
/// Gamma with shape k and scale theta (mean k * theta).
struct Gamma {
  double shape = 1.0;
  double scale = 1.0;
};
/// Weibull with shape k and scale lambda: F(x) = 1 - exp(-(x / lambda)^k).
struct Weibull {
  double shape = 1.0;
  double scale = 1.0;
};
struct FiniteMixture {
  std::vector<double> weights;
  std::vector<ParametricModel> components;
};

class ParametricModel {
 public:
  using Variant = std::variant<DiscreteGrid, Exponential, Gamma, Weibull, FiniteMixture>;

  ParametricModel(DiscreteGrid g) : v_(std::move(g)) { validate(); }
  ParametricModel(Exponential e) : v_(e) { validate(); }
  ParametricModel(Gamma g) : v_(g) { validate(); }
  ParametricModel(Weibull w) : v_(w) { validate(); }
  ParametricModel(FiniteMixture m) : v_(std::move(m)) { validate(); }

  const Variant& value() const { return v_; }

  std::string kind() const {
    return std::visit(
        [](const auto& m) -> std::string {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, DiscreteGrid>) return "discrete";
          else if constexpr (std::is_same_v<T, Exponential>) return "exponential";
          else if constexpr (std::is_same_v<T, Gamma>) return "gamma";
          else if constexpr (std::is_same_v<T, Weibull>) return "weibull";
          else return "mixture";
        },
        v_);
  }

  double mean() const {
    return std::visit(
        [](const auto& m) -> double {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, DiscreteGrid>) {
            double s = 0.0;
            for (std::size_t k = 0; k < m.probs.size(); ++k) s += m.probs[k] * m.spacing * static_cast<double>(k);
            return s;
          } else if constexpr (std::is_same_v<T, Exponential>) {
            return m.mean;
          } else if constexpr (std::is_same_v<T, Gamma>) {
            return m.shape * m.scale;
          } else if constexpr (std::is_same_v<T, Weibull>) {
            return m.scale * std::tgamma(1.0 + 1.0 / m.shape);
          } else {
            double s = 0.0;
            for (std::size_t c = 0; c < m.components.size(); ++c) s += m.weights[c] * m.components[c].mean();
            return s;
          }
        },
        v_);
  }

  double second_moment() const {
    return std::visit(
        [](const auto& m) -> double {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, DiscreteGrid>) {
            double s = 0.0;
            for (std::size_t k = 0; k < m.probs.size(); ++k) {
              const double x = m.spacing * static_cast<double>(k);
              s += m.probs[k] * x * x;
            }
            return s;
          } else if constexpr (std::is_same_v<T, Exponential>) {
            return 2.0 * m.mean * m.mean;
          } else if constexpr (std::is_same_v<T, Gamma>) {
            return m.shape * (m.shape + 1.0) * m.scale * m.scale;
          } else if constexpr (std::is_same_v<T, Weibull>) {
            return m.scale * m.scale * std::tgamma(1.0 + 2.0 / m.shape);
          } else {
            double s = 0.0;
            for (std::size_t c = 0; c < m.components.size(); ++c) s += m.weights[c] * m.components[c].second_moment();
            return s;
          }
        },
        v_);
  }

  double variance() const {
    const double m = mean();
    return std::max(0.0, second_moment() - m * m);
  }
  double sd() const { return std::sqrt(variance()); }

  double cdf(double x) const {
    if (x < 0.0) return 0.0;
    return std::visit(
        [x](const auto& m) -> double {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, DiscreteGrid>) {
            double s = 0.0;
            for (std::size_t k = 0; k < m.probs.size() && m.spacing * static_cast<double>(k) <= x; ++k) s += m.probs[k];
            return std::min(s, 1.0);
          } else if constexpr (std::is_same_v<T, Exponential>) {
            return -std::expm1(-x / m.mean);
          } else if constexpr (std::is_same_v<T, Gamma>) {
            return boost::math::gamma_p(m.shape, x / m.scale);
          } else if constexpr (std::is_same_v<T, Weibull>) {
            return -std::expm1(-std::pow(x / m.scale, m.shape));
          } else {
            double s = 0.0;
            for (std::size_t c = 0; c < m.components.size(); ++c) s += m.weights[c] * m.components[c].cdf(x);
            return std::min(s, 1.0);
          }
        },
        v_);
  }

  /// Generalized inverse CDF; closed form except for mixtures (bisection).
  double quantile(double p) const {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("quantile probability must lie in (0, 1)");
    return std::visit(
        [p, this](const auto& m) -> double {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, DiscreteGrid>) {
            double s = 0.0;
            for (std::size_t k = 0; k < m.probs.size(); ++k) {
              s += m.probs[k];
              if (s >= p * (1.0 - 1e-14)) return m.spacing * static_cast<double>(k);
            }
            return m.spacing * static_cast<double>(m.probs.size() - 1);
          } else if constexpr (std::is_same_v<T, Exponential>) {
            return -m.mean * std::log1p(-p);
          } else if constexpr (std::is_same_v<T, Gamma>) {
            return m.scale * boost::math::gamma_p_inv(m.shape, p);
          } else if constexpr (std::is_same_v<T, Weibull>) {
            return m.scale * std::pow(-std::log1p(-p), 1.0 / m.shape);
          } else {
            double lo = std::numeric_limits<double>::infinity();
            double hi = 0.0;
            for (std::size_t c = 0; c < m.components.size(); ++c) {
              if (m.weights[c] <= 0.0) continue;
              const double q = m.components[c].quantile(p);
              lo = std::min(lo, q);
              hi = std::max(hi, q);
            }
            if (cdf(lo) >= p) return lo;
            for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, hi); ++it) {
              const double mid = 0.5 * (lo + hi);
              (cdf(mid) >= p ? hi : lo) = mid;
            }
            return hi;
          }
        },
        v_);
  }

  Complex cf(double t) const {
    return std::visit(
        [t](const auto& m) -> Complex {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, DiscreteGrid>) {
            Complex s{0.0, 0.0};
            for (std::size_t k = 0; k < m.probs.size(); ++k) s += m.probs[k] * std::polar(1.0, t * m.spacing * static_cast<double>(k));
            return s;
          } else if constexpr (std::is_same_v<T, Exponential>) {
            return 1.0 / Complex(1.0, -t * m.mean);
          } else if constexpr (std::is_same_v<T, Gamma>) {
            return std::pow(Complex(1.0, -t * m.scale), -m.shape);
          } else if constexpr (std::is_same_v<T, Weibull>) {
            // X = lambda * E^{1/k}, E ~ Exp(1): integrate e^{-e} e^{i t lambda e^{1/k}} over e in [0, 60].
            const double inv_k = 1.0 / m.shape;
            const double reach = std::abs(t) * m.scale * std::pow(60.0, inv_k);
            const auto panels = static_cast<std::size_t>(std::clamp(reach, 200.0, 200000.0));
            return detail::composite_gauss(
                [&](double e) { return std::exp(-e) * std::polar(1.0, t * m.scale * std::pow(e, inv_k)); }, 0.0, 60.0,
                panels);
          } else {
            Complex s{0.0, 0.0};
            for (std::size_t c = 0; c < m.components.size(); ++c) s += m.weights[c] * m.components[c].cf(t);
            return s;
          }
        },
        v_);
  }

  template <class Rng>
  double sample(Rng& rng) const {
    return std::visit(
        [&rng](const auto& m) -> double {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, DiscreteGrid>) {
            std::discrete_distribution<std::size_t> d(m.probs.begin(), m.probs.end());
            return m.spacing * static_cast<double>(d(rng));
          } else if constexpr (std::is_same_v<T, Exponential>) {
            return std::exponential_distribution<double>(1.0 / m.mean)(rng);
          } else if constexpr (std::is_same_v<T, Gamma>) {
            return std::gamma_distribution<double>(m.shape, m.scale)(rng);
          } else if constexpr (std::is_same_v<T, Weibull>) {
            return std::weibull_distribution<double>(m.shape, m.scale)(rng);
          } else {
            std::discrete_distribution<std::size_t> d(m.weights.begin(), m.weights.end());
            return m.components[d(rng)].sample(rng);
          }
        },
        v_);
  }

  template <class Rng>
  std::vector<double> sample(Rng& rng, std::size_t count) const {
    std::vector<double> out(count);
    for (auto& x : out) x = sample(rng);
    return out;
  }

 private:
  void validate() {
    std::visit(
        [](auto& m) {
          using T = std::decay_t<decltype(m)>;
          auto positive = [](double v, const char* what) {
            if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(what) + " must be positive");
          };
          auto simplex = [](std::vector<double>& p, const char* what) {
            if (p.empty()) throw ConfigError(std::string(what) + " is empty");
            double s = 0.0;
            for (double v : p) {
              if (!(v >= 0.0)) throw ConfigError(std::string(what) + " has a negative entry");
              s += v;
            }
            if (std::abs(s - 1.0) > 1e-9) throw ConfigError(std::string(what) + " does not sum to 1");
            for (double& v : p) v /= s;
          };
          if constexpr (std::is_same_v<T, DiscreteGrid>) {
            simplex(m.probs, "grid probabilities");
            positive(m.spacing, "grid spacing");
          } else if constexpr (std::is_same_v<T, Exponential>) {
            positive(m.mean, "exponential mean");
          } else if constexpr (std::is_same_v<T, Gamma> || std::is_same_v<T, Weibull>) {
            positive(m.shape, "shape");
            positive(m.scale, "scale");
          } else {
            if (m.weights.size() != m.components.size()) throw ConfigError("mixture weight/component count mismatch");
            simplex(m.weights, "mixture weights");
          }
        },
        v_);
  }

  Variant v_;
};

inline Complex parametric_cf(const ParametricModel& model, double t) { return model.cf(t); }

}  // namespace tomo

#endif  // TOMO_DELAY_MODELS_HPP
