#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "tomo/delay_models.hpp"
#include "tomo/detail/quadrature.hpp"

using namespace tomo;

namespace {

Complex quad_uniform(double a, double b, double t) {
  const auto panels = static_cast<std::size_t>(std::max(8.0, std::abs(t) * (b - a)));
  return detail::composite_gauss([&](double x) { return std::polar(1.0, t * x) / (b - a); }, a, b, panels);
}

Complex quad_tail(double c, double alpha, double t) {
  const double reach = 60.0 * alpha;
  const auto panels = static_cast<std::size_t>(std::max(60.0, std::abs(t) * reach));
  return detail::composite_gauss(
      [&](double x) { return std::exp(-(x - c) / alpha) / alpha * std::polar(1.0, t * x); }, c, c + reach, panels);
}

MixtureSpec sample_spec() { return MixtureSpec::binned(0, true, {0.0, 0.5, 1.5, 3.0}, 2.0); }

}  // namespace

TEST(DelayModels, UniformKernelMatchesQuadrature) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> t(-10.0, 10.0);
  for (int k = 0; k < 50; ++k) {
    const double tk = t(rng);
    EXPECT_LT(std::abs(kernel_cf({Kernel::Kind::uniform, 0.7, 2.2, 0.0}, tk) - quad_uniform(0.7, 2.2, tk)), 1e-8);
  }
}

TEST(DelayModels, TailKernelMatchesQuadrature) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> t(-10.0, 10.0);
  for (int k = 0; k < 50; ++k) {
    const double tk = t(rng);
    EXPECT_LT(std::abs(kernel_cf({Kernel::Kind::tail, 3.0, 0.0, 1.5}, tk) - quad_tail(3.0, 1.5, tk)), 1e-8);
  }
}

TEST(DelayModels, UniformTaylorBranchIsContinuous) {
  const Kernel k{Kernel::Kind::uniform, 0.0, 1.0, 0.0};
  for (double t : {0.99e-4, 1.01e-4, -0.99e-4, -1.01e-4}) {
    const Complex exact = (std::polar(1.0, t) - 1.0) / (kI * t);
    EXPECT_LT(std::abs(kernel_cf(k, t) - exact), 1e-12);
  }
  EXPECT_EQ(kernel_cf(k, 0.0), Complex(1.0, 0.0));
}

TEST(DelayModels, UniformCfClosedForm) {
  // Uniform[0, 1] at t = pi: (e^{i pi} - 1) / (i pi) = 2i / pi.
  const Complex v = kernel_cf({Kernel::Kind::uniform, 0.0, 1.0, 0.0}, std::numbers::pi);
  EXPECT_NEAR(v.real(), 0.0, 1e-15);
  EXPECT_NEAR(v.imag(), 2.0 / std::numbers::pi, 1e-15);
}

TEST(DelayModels, MixtureCfPropertiesAndBasisAgreement) {
  const MixtureSpec s = sample_spec();
  const MixtureWeights w({0.1, 0.3, 0.2, 0.25, 0.15});
  EXPECT_EQ(mixture_cf(s, w, 0.0), Complex(1.0, 0.0));
  std::vector<Complex> basis(s.size());
  for (double t : {-7.3, -0.2, 0.01, 1.0, 4.5}) {
    const Complex v = mixture_cf(s, w, t);
    EXPECT_LT(std::abs(v - std::conj(mixture_cf(s, w, -t))), 1e-14);
    basis_cf_all(s, t, basis);
    Complex direct{0.0, 0.0};
    for (std::size_t l = 0; l < s.size(); ++l) {
      EXPECT_LT(std::abs(basis[l] - basis_cf(s, l, t)), 1e-14);
      direct += w[l] * basis_cf(s, l, t);
    }
    EXPECT_LT(std::abs(v - direct), 1e-14);
  }
}

TEST(DelayModels, MixtureSpecValidation) {
  EXPECT_THROW(MixtureSpec::binned(0, false, {0.5, 1.0}, 1.0), ConfigError);
  EXPECT_THROW(MixtureSpec::binned(0, false, {0.0, 1.0, 1.0}, 1.0), ConfigError);
  EXPECT_THROW(MixtureSpec::binned(0, false, {0.0, 1.0}, 0.0), ConfigError);
  EXPECT_EQ(MixtureSpec::binned(0, true, {0.0, 1.0, 2.0}, 1.0).size(), 4u);
  EXPECT_EQ(MixtureSpec::binned(0, false, {0.0, 1.0, 2.0}, 1.0).size(), 3u);
}

TEST(DelayModels, WeightsValidation) {
  EXPECT_THROW(MixtureWeights({0.5, -0.1, 0.6}), ConfigError);
  EXPECT_THROW(MixtureWeights({0.0, 0.0}), ConfigError);
  EXPECT_DOUBLE_EQ(MixtureWeights({1.0, 3.0})[1], 0.75);
  EXPECT_THROW(Mixture(sample_spec(), MixtureWeights({0.5, 0.5})), ConfigError);
}

TEST(DelayModels, CdfQuantileInverse) {
  const Mixture m(sample_spec(), MixtureWeights({0.1, 0.3, 0.2, 0.25, 0.15}));
  EXPECT_DOUBLE_EQ(m.cdf(0.0), 0.1);
  EXPECT_DOUBLE_EQ(m.quantile(0.05), 0.0);
  for (double p : {0.11, 0.25, 0.5, 0.7, 0.86, 0.99}) EXPECT_NEAR(m.cdf(m.quantile(p)), p, 1e-12);
  EXPECT_THROW(m.quantile(1.0), DomainError);
  EXPECT_THROW(m.quantile(0.0), DomainError);
}

TEST(DelayModels, DensityIntegratesToContinuousMass) {
  const Mixture m(sample_spec(), MixtureWeights({0.1, 0.3, 0.2, 0.25, 0.15}));
  const double body = detail::composite_gauss([&](double x) { return m.density(x); }, 0.0, 3.0, 300);
  const double tail = detail::composite_gauss([&](double x) { return m.density(x); }, 3.0, 120.0, 400);
  EXPECT_NEAR(body + tail, 0.9, 1e-6);
}

TEST(DelayModels, MomentsMatchSamples) {
  const Mixture m(sample_spec(), MixtureWeights({0.1, 0.3, 0.2, 0.25, 0.15}));
  std::mt19937_64 rng(9);
  const auto xs = m.sample(rng, 200000);
  double s = 0.0, s2 = 0.0;
  for (double x : xs) {
    s += x;
    s2 += x * x;
  }
  const double mean = s / static_cast<double>(xs.size());
  const double var = s2 / static_cast<double>(xs.size()) - mean * mean;
  EXPECT_NEAR(mean, m.mean(), 0.02);
  EXPECT_NEAR(var, m.variance(), 0.05);
}

TEST(DelayModels, LatticeCf) {
  const MixtureSpec s = MixtureSpec::lattice(0, 3);
  const MixtureWeights w({0.2, 0.5, 0.3});
  const double t = 0.9;
  const Complex expected = 0.2 + 0.5 * std::polar(1.0, t) + 0.3 * std::polar(1.0, 2.0 * t);
  EXPECT_LT(std::abs(mixture_cf(s, w, t) - expected), 1e-15);
  const Mixture m(s, w);
  EXPECT_DOUBLE_EQ(m.quantile(0.6), 1.0);
  EXPECT_DOUBLE_EQ(m.mean(), 1.1);
}

TEST(DelayModels, ParametricClosedForms) {
  const ParametricModel e = Exponential{2.0};
  EXPECT_DOUBLE_EQ(e.mean(), 2.0);
  EXPECT_DOUBLE_EQ(e.sd(), 2.0);
  EXPECT_NEAR(e.quantile(0.5), 2.0 * std::log(2.0), 1e-14);
  const ParametricModel g = Gamma{2.0, 1.5};
  EXPECT_NEAR(g.variance(), 4.5, 1e-12);
  EXPECT_NEAR(g.cdf(g.quantile(0.3)), 0.3, 1e-12);
  const ParametricModel w = Weibull{0.9, 3.0};
  EXPECT_NEAR(w.cdf(w.quantile(0.8)), 0.8, 1e-12);
  EXPECT_NEAR(w.mean(), 3.0 * std::tgamma(1.0 + 1.0 / 0.9), 1e-12);
}

TEST(DelayModels, ParametricCfMatchesQuadrature) {
  const ParametricModel g = Gamma{2.0, 1.5};
  const ParametricModel w = Weibull{0.9, 2.0};
  for (double t : {-3.0, -0.4, 0.7, 2.5}) {
    auto gamma_pdf = [](double x) { return x / (1.5 * 1.5) * std::exp(-x / 1.5); };
    const Complex gq = detail::composite_gauss([&](double x) { return gamma_pdf(x) * std::polar(1.0, t * x); }, 0.0,
                                               120.0, 2000);
    EXPECT_LT(std::abs(g.cf(t) - gq), 1e-10);
    // Weibull through its CDF: integrate by parts against the survival function.
    const Complex wq = 1.0 + kI * t *
                                 detail::composite_gauss(
                                     [&](double x) { return (1.0 - w.cdf(x)) * std::polar(1.0, t * x); }, 0.0, 400.0,
                                     20000);
    EXPECT_LT(std::abs(w.cf(t) - wq), 1e-6);
  }
}

TEST(DelayModels, FiniteMixtureWithAtom) {
  const ParametricModel m = FiniteMixture{{0.4, 0.6}, {DiscreteGrid{{1.0}, 1.0}, Exponential{2.0}}};
  EXPECT_DOUBLE_EQ(m.cdf(0.0), 0.4);
  EXPECT_DOUBLE_EQ(m.quantile(0.3), 0.0);
  EXPECT_NEAR(m.cdf(m.quantile(0.7)), 0.7, 1e-12);
  EXPECT_NEAR(m.mean(), 1.2, 1e-14);
  EXPECT_THROW((ParametricModel(FiniteMixture{{0.5}, {Exponential{1.0}, Exponential{2.0}}})), ConfigError);
}
