#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "support.hpp"
#include "treepref/policy.hpp"

using namespace treepref;
using namespace treepref::testing;

namespace {

PolicyParams random_policy(std::mt19937_64& rng, std::size_t vocab, double scale) {
  std::normal_distribution<double> g(0.0, scale);
  std::vector<double> theta(kFeatureDim * vocab);
  for (double& x : theta) x = g(rng);
  return PolicyParams(kFeatureDim, vocab, std::move(theta));
}

StepList random_steps(std::mt19937_64& rng, const Prompt& p) {
  StepList steps;
  EnvState s = initial_state(p);
  std::uniform_int_distribution<int> pick(0, static_cast<int>(p.op_vocab.size()) - 1);
  while (!is_terminal(p, s) && std::uniform_int_distribution<int>(0, 4)(rng) != 0) {
    const Action a = pick(rng);
    steps.push_back(a);
    s = apply_step(p, s, a);
  }
  return steps;
}

}  // namespace

TEST(Features, AreBounded) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 500; ++i) {
    const Prompt p = make_prompt(std::uniform_int_distribution<std::int64_t>(-20, 40)(rng),
                                 std::uniform_int_distribution<std::int64_t>(-20, 400)(rng),
                                 std::uniform_int_distribution<int>(1, 8)(rng));
    const EnvState s{0, std::uniform_int_distribution<std::int64_t>(-50, 500)(rng),
                     std::uniform_int_distribution<int>(0, p.budget - 1)(rng)};
    for (double v : features(p, s)) {
      EXPECT_GE(v, -1.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(StepDistribution, ZeroThetaIsUniform) {
  const Prompt p = make_prompt(2, 17, 4);
  const auto d = step_distribution(PolicyParams::zeros(5), p, initial_state(p));
  ASSERT_EQ(d.probs.size(), 5u);
  for (double x : d.probs) EXPECT_DOUBLE_EQ(x, 0.2);
}

TEST(StepDistribution, HandSoftmax) {
  const Prompt p = make_prompt(2, 17, 4, vocab({"+1", "+2", "*2", "*3"}));
  ASSERT_EQ(features(p, initial_state(p))[0], 1.0);  // bias
  PolicyParams params = PolicyParams::zeros(4);
  params.theta()[0] = std::log(2.0);  // action 0, bias weight
  const auto d = step_distribution(params, p, initial_state(p));
  EXPECT_NEAR(d.probs[0], 0.4, 1e-15);
  for (int a = 1; a < 4; ++a) EXPECT_NEAR(d.probs[static_cast<std::size_t>(a)], 0.2, 1e-15);
}

TEST(StepDistribution, SumsToOneAndStaysFinite) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 300; ++i) {
    const double scale = i % 3 == 0 ? 200.0 : 1.0;
    const PolicyParams params = random_policy(rng, 5, scale);
    const Prompt p = make_prompt(std::uniform_int_distribution<std::int64_t>(1, 5)(rng),
                                 std::uniform_int_distribution<std::int64_t>(6, 30)(rng), 4);
    const auto d = step_distribution(params, p, initial_state(p));
    double sum = 0.0;
    for (double x : d.probs) {
      ASSERT_TRUE(std::isfinite(x));
      ASSERT_GE(x, 0.0);
      sum += x;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(StepDistribution, RejectsTerminalStateAndVocabMismatch) {
  const Prompt p = make_prompt(6, 6, 4);
  EXPECT_THROW(step_distribution(PolicyParams::zeros(5), p, initial_state(p)), PreconditionError);
  const Prompt q = make_prompt(1, 6, 4);
  EXPECT_THROW(step_distribution(PolicyParams::zeros(3), q, initial_state(q)), PreconditionError);
}

TEST(TrajectoryLogprob, UniformCases) {
  const Prompt p = make_prompt(1, 29, 4, vocab({"+1", "+2", "*2", "*3"}));
  EXPECT_NEAR(trajectory_logprob(PolicyParams::zeros(4), p, StepList{0, 1, 2}),
              3.0 * std::log(0.25), 1e-12);
  const Prompt two = make_prompt(3, 4, 1, vocab({"+1", "*2"}));
  EXPECT_NEAR(trajectory_logprob(PolicyParams::zeros(2), two, StepList{0}), std::log(0.5), 1e-15);
}

TEST(TrajectoryLogprob, IsSumOfStepLogprobs) {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 200; ++i) {
    const PolicyParams params = random_policy(rng, 5, 1.0);
    const Prompt p = make_prompt(std::uniform_int_distribution<std::int64_t>(1, 5)(rng),
                                 std::uniform_int_distribution<std::int64_t>(6, 30)(rng), 4);
    const StepList steps = random_steps(rng, p);
    double expected = 0.0;
    EnvState s = initial_state(p);
    for (Action a : steps) {
      expected += std::log(step_distribution(params, p, s).probs[static_cast<std::size_t>(a)]);
      s = apply_step(p, s, a);
    }
    EXPECT_NEAR(trajectory_logprob(params, p, steps), expected, 1e-12);
  }
}

TEST(GradTrajectoryLogprob, MatchesCentralDifferences) {
  std::mt19937_64 rng(13);
  const double h = 1e-5;
  int cases = 0;
  while (cases < 120) {
    PolicyParams params = random_policy(rng, 5, 0.7);
    const Prompt p = make_prompt(std::uniform_int_distribution<std::int64_t>(1, 5)(rng),
                                 std::uniform_int_distribution<std::int64_t>(6, 30)(rng), 4);
    const StepList steps = random_steps(rng, p);
    if (steps.empty()) continue;
    ++cases;
    const auto g = grad_trajectory_logprob(params, p, steps);
    double diff2 = 0.0, norm2 = 0.0;
    for (std::size_t k = 0; k < params.size(); ++k) {
      const double saved = params.theta()[k];
      params.theta()[k] = saved + h;
      const double up = trajectory_logprob(params, p, steps);
      params.theta()[k] = saved - h;
      const double down = trajectory_logprob(params, p, steps);
      params.theta()[k] = saved;
      const double fd = (up - down) / (2.0 * h);
      diff2 += (fd - g[k]) * (fd - g[k]);
      norm2 += g[k] * g[k];
    }
    EXPECT_LT(std::sqrt(diff2) / std::max(1e-8, std::sqrt(norm2)), 1e-6) << "case " << cases;
  }
}

TEST(GradTrajectoryLogprob, SignAndEmptyCases) {
  const Prompt p = make_prompt(2, 17, 4);
  const PolicyParams zero = PolicyParams::zeros(5);
  const auto g = grad_trajectory_logprob(zero, p, StepList{3});
  const FeatureVector f = features(p, initial_state(p));
  double chosen = 0.0, other = 0.0;
  for (std::size_t i = 0; i < kFeatureDim; ++i) {
    chosen += g[3 * kFeatureDim + i] * f[i];
    other += g[0 * kFeatureDim + i] * f[i];
  }
  EXPECT_GT(chosen, 0.0);
  EXPECT_LT(other, 0.0);

  for (double x : grad_trajectory_logprob(zero, p, StepList{})) EXPECT_EQ(x, 0.0);
}

TEST(SampleTrajectory, DeterministicAndWithinBudget) {
  std::mt19937_64 gen(21);
  const PolicyParams params = random_policy(gen, 5, 0.5);
  const Prompt p = make_prompt(2, 23, 4);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng a(seed), b(seed);
    const Trajectory x = sample_trajectory(params, p, a);
    const Trajectory y = sample_trajectory(params, p, b);
    EXPECT_EQ(x.steps, y.steps);
    EXPECT_LE(x.steps.size(), 4u);
    EXPECT_TRUE(x.complete);
    EXPECT_EQ(x.value, check_answer(p, x.steps).correct ? 1.0 : 0.0);
  }
}

TEST(SampleTrajectory, UniformCoinFlipIsFair) {
  const Prompt p = make_prompt(3, 4, 1, vocab({"+1", "*2"}));
  const PolicyParams uniform = PolicyParams::zeros(2);
  Rng rng(99);
  const int n = 20000;
  int correct = 0;
  for (int i = 0; i < n; ++i) correct += sample_trajectory(uniform, p, rng).value == 1.0 ? 1 : 0;
  const double sigma = std::sqrt(n * 0.25);
  EXPECT_LT(std::abs(correct - n * 0.5), 3.0 * sigma);
}

TEST(Snapshot, IsIsolatedFromLaterUpdates) {
  std::mt19937_64 rng(4);
  PolicyParams live = random_policy(rng, 5, 1.0);
  const FrozenPolicy frozen = snapshot(live);
  EXPECT_EQ(frozen.params(), live);
  const Prompt p = make_prompt(1, 20, 4);
  const double before = trajectory_logprob(frozen.params(), p, StepList{1, 3});
  for (double& x : live.theta()) x += 0.5;
  EXPECT_EQ(trajectory_logprob(frozen.params(), p, StepList{1, 3}), before);
  EXPECT_NE(frozen.params(), live);
}

TEST(GreedyAction, TiesGoToLowestIndex) {
  const Prompt p = make_prompt(1, 20, 4);
  EXPECT_EQ(greedy_action(PolicyParams::zeros(5), p, initial_state(p)), 0);
}

TEST(PolicyParams, ValidatesShapeAndFiniteness) {
  EXPECT_THROW(PolicyParams(kFeatureDim + 1, 5, std::vector<double>((kFeatureDim + 1) * 5)),
               PreconditionError);
  EXPECT_THROW(PolicyParams(kFeatureDim, 5, std::vector<double>(3)), PreconditionError);
  PolicyParams p = PolicyParams::zeros(5);
  p.theta()[7] = std::nan("");
  EXPECT_THROW(p.require_finite(), NumericError);
}
