#include <gtest/gtest.h>

#include "tomo/simulation.hpp"

using namespace tomo;

namespace {

Scenario small_discrete() {
  Scenario s = builtin_scenario("discrete4");
  s.samples = 300;
  s.replications = 2;
  s.estimator.frequencies = 200;
  s.estimator.wcf_frequencies = 100;
  s.estimator.max_outer_iterations = 20;
  return s;
}

}  // namespace

TEST(Simulation, BuiltinsValidate) {
  for (const auto& name : builtin_scenario_names()) EXPECT_NO_THROW(builtin_scenario(name).validate()) << name;
  EXPECT_THROW(builtin_scenario("fig99"), ConfigError);
}

TEST(Simulation, MleRejectedForContinuousScenario) {
  Scenario s = builtin_scenario("exp4");
  s.runs.push_back({Estimator::mle, Binning::equal});
  EXPECT_THROW(s.validate(), ConfigError);
}

TEST(Simulation, GenerationIsDeterministic) {
  const Scenario s = small_discrete();
  const Replicate a = generate(s, 3);
  const Replicate b = generate(s, 3);
  EXPECT_EQ(a.seed, s.base_seed + 3);
  EXPECT_EQ(a.measurements.values(), b.measurements.values());
  EXPECT_NE(generate(s, 4).measurements.values(), a.measurements.values());
}

TEST(Simulation, MeasurementsFollowRouting) {
  const Scenario s = small_discrete();
  const Replicate r = generate(s, 0);
  const RoutingMatrix a = routing_matrix(s.topology);
  EXPECT_EQ(r.measurements.values(), r.x * a.entries().transpose());
  EXPECT_GE(r.x.minCoeff(), 0.0);
  EXPECT_LE(r.x.maxCoeff(), static_cast<double>(s.grid_points - 1));
}

TEST(Simulation, ContinuousMeansMatch) {
  Scenario s = builtin_scenario("expgamma4");
  s.samples = 40000;
  const Replicate r = generate(s, 0);
  const RoutingMatrix a = routing_matrix(s.topology);
  Eigen::VectorXd mu(7);
  for (Eigen::Index j = 0; j < 7; ++j) mu(j) = s.links[static_cast<std::size_t>(j)].mean();
  const Eigen::VectorXd expected = a.entries() * mu;
  const Eigen::VectorXd observed = r.measurements.values().colwise().mean().transpose();
  for (Eigen::Index i = 0; i < 4; ++i) EXPECT_NEAR(observed(i), expected(i), 0.05 * expected(i));
}

TEST(Simulation, ModelHelpers) {
  EXPECT_NEAR(exp_gamma_mixture(4.0).mean(), 4.0, 1e-12);
  const ParametricModel w = atom_weibull(0.3, 0.9, 5.0);
  EXPECT_NEAR(w.mean(), 5.0, 1e-9);
  EXPECT_NEAR(w.cdf(0.0), 0.3, 1e-12);
}

TEST(Simulation, UniformSimplexMean) {
  std::mt19937_64 rng(4);
  std::vector<double> acc(6, 0.0);
  for (int k = 0; k < 20000; ++k) {
    const auto p = uniform_simplex(6, rng);
    double sum = 0.0;
    for (std::size_t i = 0; i < 6; ++i) {
      EXPECT_GE(p[i], 0.0);
      acc[i] += p[i];
      sum += p[i];
    }
    ASSERT_NEAR(sum, 1.0, 1e-12);
  }
  for (double v : acc) EXPECT_NEAR(v / 20000.0, 1.0 / 6.0, 0.005);
}

TEST(Simulation, RunSummariesAndRecords) {
  const Scenario s = small_discrete();
  const RunResult r = run(s, 1);
  EXPECT_EQ(r.metric, "l1");
  ASSERT_EQ(r.summaries.size(), s.runs.size());
  ASSERT_EQ(r.records.size(), 2u);
  for (std::size_t k = 0; k < s.runs.size(); ++k) {
    EXPECT_EQ(r.failures[k], 0u);
    ASSERT_EQ(r.summaries[k].links.size(), 7u);
    for (const auto& l : r.summaries[k].links) {
      EXPECT_EQ(l.n_reps, 2u);
      EXPECT_LE(l.q25, l.q50);
      EXPECT_LE(l.q50, l.q75);
      EXPECT_GE(l.q25, 0.0);
      EXPECT_LE(l.q75, 2.0);
    }
  }
  for (const auto& rec : r.records)
    for (const auto& o : rec.outcomes) EXPECT_TRUE(o.ok) << o.error;
}

TEST(Simulation, RunIsReproducibleAcrossJobCounts) {
  Scenario s = small_discrete();
  s.runs = {{Estimator::cf, Binning::equal}};
  const RunResult a = run(s, 1);
  const RunResult b = run(s, 2);
  for (std::size_t r = 0; r < 2; ++r)
    EXPECT_EQ(a.records[r].outcomes[0].metric, b.records[r].outcomes[0].metric);
}
