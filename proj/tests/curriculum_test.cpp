#include <gtest/gtest.h>

#include "oracles.hpp"
#include "support.hpp"
#include "treepref/curriculum.hpp"

using namespace treepref;
using namespace treepref::testing;

TEST(RewardGap, SumsPostStateValues) {
  // budget 3 from 3 to 12 with {+1, *2}: 3 -> 6 -> 12 wins; 3 -> 4 -> 5 is lost.
  const Prompt p = make_prompt(3, 12, 3, vocab({"+1", "*2"}), 1);
  ValueConfig v;
  v.gamma = 0.9;
  TrajectoryPair pair;
  pair.prompt_id = 1;
  pair.winner.steps = {1, 1};  // values 0.9, 1.0
  pair.loser.steps = {0, 0};   // 4 (needs 3+ steps: 0) then 5 (0)
  EXPECT_NEAR(reward_gap(pair, p, v), 1.9, 1e-12);
  pair.loser = pair.winner;
  EXPECT_EQ(reward_gap(pair, p, v), 0.0);
}

TEST(RewardGap, MatchesIndependentSum) {
  std::mt19937_64 rng(12);
  ValueConfig v;
  v.noise_std = 0.05;
  v.seed = 4;
  for (int i = 0; i < 50; ++i) {
    RandomBuffer f = random_buffer(rng);
    for (const TrajectoryPair& pair : f.buffer.pairs()) {
      const Prompt& p = lookup(f.table, pair.prompt_id);
      auto total = [&](const StepList& steps) {
        double sum = 0.0;
        EnvState s = initial_state(p);
        for (Action a : steps) {
          s = apply_step(p, s, a);
          sum += state_value(p, s, v);
        }
        return sum;
      };
      EXPECT_NEAR(reward_gap(pair, p, v), total(pair.winner.steps) - total(pair.loser.steps),
                  1e-12);
      EXPECT_EQ(reward_gap(pair, p, v), reward_gap(pair, p, v));
    }
  }
}

TEST(PredictionGap, LogLikelihoodDifference) {
  const Prompt p = make_prompt(1, 29, 4, vocab({"+1", "+2", "*2", "*3"}), 2);
  TrajectoryPair pair;
  pair.winner.steps = {3};
  pair.loser.steps = {0, 1, 2};
  const PolicyParams uniform = PolicyParams::zeros(4);
  EXPECT_NEAR(prediction_gap(pair, p, uniform), 2.0 * std::log(4.0), 1e-12);
  std::swap(pair.winner, pair.loser);
  EXPECT_LT(prediction_gap(pair, p, uniform), 0.0);
  pair.loser = pair.winner;
  EXPECT_EQ(prediction_gap(pair, p, uniform), 0.0);
}

TEST(MinmaxNormalize, Examples) {
  const std::vector<double> in{1.6, 0.4, 2.8};
  EXPECT_EQ(minmax_normalize(in), (std::vector<double>{0.5, 0.0, 1.0}));
  EXPECT_EQ(minmax_normalize(std::vector<double>{3.0, 3.0}), (std::vector<double>{0.5, 0.5}));
  EXPECT_THROW(minmax_normalize(std::vector<double>{}), PreconditionError);
}

TEST(MinmaxNormalize, BoundedAndOrderPreserving) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 10.0);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> v(static_cast<std::size_t>(1 + i % 20));
    for (double& x : v) x = g(rng);
    const auto n = minmax_normalize(v);
    for (std::size_t a = 0; a < v.size(); ++a) {
      EXPECT_GE(n[a], 0.0);
      EXPECT_LE(n[a], 1.0);
      for (std::size_t b = 0; b < v.size(); ++b) {
        if (v[a] < v[b]) EXPECT_LE(n[a], n[b]);
      }
    }
  }
}

TEST(CombinedWeight, Examples) {
  EXPECT_NEAR(combined_weight(0.5, 0.8, 0.5), 0.9, 1e-15);
  EXPECT_EQ(combined_weight(0.3, 0.8, 0.0), 0.3);
  EXPECT_EQ(combined_weight(1.0, 1.0, 1.0), 2.0);
}

TEST(RoundRobin, InterleavesPromptsInIdOrder) {
  // P1: a1 > a2 > a3, P2: b1, P3: c1 > c2, inserted out of order.
  PairBuffer b;
  std::vector<PairWeights> w;
  const std::vector<std::tuple<std::int64_t, Action, double>> rows = {
      {3, 2, 0.4}, {1, 2, 0.5}, {2, 1, 0.7}, {1, 1, 0.9}, {1, 3, 0.1}, {3, 1, 0.8}};
  for (const auto& [prompt, action, weight] : rows) {
    TrajectoryPair p;
    p.prompt_id = prompt;
    p.winner.steps = {action};
    p.loser.steps = {0};
    b.add(p);
    PairWeights pw;
    pw.pair_index = w.size();
    pw.w_g = weight;
    w.push_back(pw);
  }
  const Schedule s = round_robin(b, w, SortDirection::descending, 0);
  // a1 a2 a3 = pairs 3, 1, 4; b1 = 2; c1 c2 = 5, 0.
  EXPECT_EQ(s.order, (std::vector<std::size_t>{3, 2, 5, 1, 0, 4}));

  const Schedule up = round_robin(b, w, SortDirection::ascending, 0);
  EXPECT_EQ(up.order, (std::vector<std::size_t>{4, 2, 0, 1, 5, 3}));
}

TEST(RoundRobin, TiesKeepPairIndexOrder) {
  PairBuffer b;
  std::vector<PairWeights> w;
  for (int i = 0; i < 4; ++i) {
    TrajectoryPair p;
    p.prompt_id = 0;
    p.winner.steps = {i};
    b.add(p);
    PairWeights pw;
    pw.pair_index = static_cast<std::size_t>(i);
    pw.w_g = i == 2 ? 0.9 : 0.5;
    w.push_back(pw);
  }
  EXPECT_EQ(round_robin(b, w, SortDirection::descending, 0).order,
            (std::vector<std::size_t>{2, 0, 1, 3}));
}

TEST(ScheduleEpoch, PropertiesOnRandomBuffers) {
  std::mt19937_64 rng(99);
  ValueConfig v;
  for (int i = 0; i < 150; ++i) {
    RandomBuffer f = random_buffer(rng);
    const PolicyParams policy = random_policy(rng);
    CurriculumConfig c;
    c.alpha = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    const EpochPlan plan = schedule_epoch(f.buffer, f.table, policy, v, c, 0);
    ASSERT_TRUE(is_permutation_of(plan.schedule.order, f.buffer.size())) << "case " << i;
    ASSERT_TRUE(round_robin_holds(f.buffer, plan.schedule.order)) << "case " << i;
    std::map<std::int64_t, double> last;
    for (std::size_t idx : plan.schedule.order) {
      const PairWeights& pw = plan.weights[idx];
      EXPECT_EQ(pw.pair_index, idx);
      EXPECT_GE(pw.r_g_norm, 0.0);
      EXPECT_LE(pw.r_g_norm, 1.0);
      EXPECT_GE(pw.p_g_norm, 0.0);
      EXPECT_LE(pw.p_g_norm, 1.0);
      EXPECT_EQ(pw.w_g, combined_weight(pw.r_g_norm, pw.p_g_norm, c.alpha));
      const std::int64_t id = f.buffer[idx].prompt_id;
      if (last.contains(id)) EXPECT_LE(pw.w_g, last[id]);
      last[id] = pw.w_g;
    }
  }
}

TEST(ScheduleEpoch, AlphaZeroScheduleIsStaticAcrossEpochs) {
  std::mt19937_64 rng(5);
  ValueConfig v;
  CurriculumConfig c;
  c.alpha = 0.0;
  for (int i = 0; i < 100; ++i) {
    RandomBuffer f = random_buffer(rng);
    CurriculumScheduler s(f.buffer, f.table, v, c);
    const EpochPlan first = s.schedule_epoch(random_policy(rng), 0);
    const EpochPlan second = s.schedule_epoch(random_policy(rng), 1);
    EXPECT_EQ(first.schedule.order, second.schedule.order);
  }
}

TEST(ScheduleEpoch, RewardGapsStayPredictionGapsMove) {
  std::mt19937_64 rng(8);
  RandomBuffer f;
  do {
    f = random_buffer(rng);
  } while (f.buffer.size() < 5);
  CurriculumScheduler s(f.buffer, f.table, ValueConfig{}, CurriculumConfig{});
  const PolicyParams a = random_policy(rng);
  PolicyParams b = a;
  for (double& x : b.theta()) x += 0.3 * std::sin(x * 7.0);
  const EpochPlan one = s.schedule_epoch(a, 0);
  const EpochPlan two = s.schedule_epoch(b, 1);
  bool moved = false;
  for (std::size_t i = 0; i < f.buffer.size(); ++i) {
    EXPECT_EQ(one.weights[i].r_g, two.weights[i].r_g);
    moved |= one.weights[i].p_g != two.weights[i].p_g;
  }
  EXPECT_TRUE(moved);
}

TEST(ScheduleEpoch, SinglePromptIsPlainSort) {
  std::mt19937_64 rng(17);
  const auto prompts = synthesize_prompts(1, SynthesisConfig{}, 3);
  const PromptTable table = index_prompts(prompts);
  PairBuffer b;
  for (int i = 0; i < 30; ++i) {
    TrajectoryPair p;
    p.prompt_id = prompts[0].id;
    p.winner.steps = random_walk(rng, prompts[0]);
    p.loser.steps = random_walk(rng, prompts[0]);
    b.add(p);
  }
  const EpochPlan plan = schedule_epoch(b, table, random_policy(rng), ValueConfig{}, CurriculumConfig{}, 0);
  std::vector<std::size_t> expected(b.size());
  std::iota(expected.begin(), expected.end(), 0);
  std::stable_sort(expected.begin(), expected.end(), [&](std::size_t x, std::size_t y) {
    return plan.weights[x].w_g > plan.weights[y].w_g;
  });
  EXPECT_EQ(plan.schedule.order, expected);
}

TEST(ScheduleEpoch, PredictionOnlyMetricIgnoresRewardGap) {
  std::mt19937_64 rng(23);
  RandomBuffer f = random_buffer(rng);
  CurriculumConfig c;
  c.metric = CurriculumMetric::pg_only;
  const EpochPlan plan = schedule_epoch(f.buffer, f.table, random_policy(rng), ValueConfig{}, c, 0);
  for (const PairWeights& pw : plan.weights) EXPECT_EQ(pw.w_g, pw.p_g_norm);
}

TEST(ShuffleSchedule, SeededPermutation) {
  std::mt19937_64 rng(4);
  RandomBuffer f;
  do {
    f = random_buffer(rng);
  } while (f.buffer.size() < 10);
  const Schedule a = shuffle_schedule(f.buffer, 7);
  EXPECT_EQ(a.order, shuffle_schedule(f.buffer, 7).order);
  EXPECT_TRUE(is_permutation_of(a.order, f.buffer.size()));
  EXPECT_NE(a.order, shuffle_schedule(f.buffer, 8).order);
}

TEST(ScheduleCsv, HeaderAndBlankWeightsForShuffle) {
  PairBuffer b;
  TrajectoryPair p;
  p.prompt_id = 3;
  p.winner.steps = {1};
  b.add(p);
  const std::string csv = schedule_csv(b, shuffle_schedule(b, 1), {});
  EXPECT_EQ(csv,
            "pair_index,prompt_id,r_g,p_g,r_g_norm,p_g_norm,w_g,emit_position\n"
            "0,3,,,,,,0\n");
}
