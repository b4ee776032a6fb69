#include <gtest/gtest.h>

#include <functional>

#include "support.hpp"
#include "treepref/env.hpp"

using namespace treepref;
using namespace treepref::testing;

namespace {

// Independent oracle: try every op sequence up to the remaining budget.
std::optional<int> enumerate_min_steps(const Prompt& p, std::int64_t current, int remaining) {
  std::optional<int> best;
  std::function<void(std::int64_t, int)> go = [&](std::int64_t x, int used) {
    if (x == p.target) {
      if (!best || used < *best) best = used;
      return;
    }
    if (used == remaining) return;
    for (const Op& op : p.op_vocab) {
      if (auto y = op.try_apply(x)) go(*y, used + 1);
    }
  };
  go(current, 0);
  return best;
}

}  // namespace

TEST(Op, ParsesAndPrintsCanonicalSpelling) {
  for (const char* s : {"+1", "+3", "-2", "*2", "*3"}) EXPECT_EQ(Op::parse(s).to_string(), s);
  EXPECT_THROW(Op::parse("x2"), PreconditionError);
  EXPECT_THROW(Op::parse("+"), PreconditionError);
  EXPECT_THROW(Op::parse("+02"), PreconditionError);
}

TEST(Op, ReportsOverflow) {
  EXPECT_FALSE(Op::parse("*3").try_apply(std::numeric_limits<std::int64_t>::max() / 2));
  EXPECT_EQ(*Op::parse("*3").try_apply(4), 12);
}

TEST(ApplyStep, Arithmetic) {
  const Prompt p = make_prompt(3, 20, 4, vocab({"+1", "*2"}));
  const EnvState s = initial_state(p);
  const EnvState doubled = apply_step(p, s, 1);
  EXPECT_EQ(doubled.current, 6);
  EXPECT_EQ(doubled.steps_taken, 1);
  EXPECT_EQ(apply_step(p, s, 0).current, 4);
}

TEST(ApplyStep, RejectsTerminalAndUnknownActions) {
  const Prompt p = make_prompt(3, 20, 1, vocab({"+1", "*2"}));
  const EnvState done = apply_step(p, initial_state(p), 0);
  EXPECT_THROW(apply_step(p, done, 0), PreconditionError);
  EXPECT_THROW(apply_step(p, initial_state(p), 2), PreconditionError);
  EXPECT_THROW(apply_step(p, initial_state(p), -1), PreconditionError);
}

TEST(IsTerminal, Cases) {
  const Prompt p = make_prompt(3, 6, 2, vocab({"+1", "*2"}));
  EXPECT_TRUE(is_terminal(p, EnvState{0, 6, 1}));
  EXPECT_TRUE(is_terminal(p, EnvState{0, 5, 2}));
  EXPECT_FALSE(is_terminal(p, EnvState{0, 5, 1}));
}

TEST(CheckAnswer, Cases) {
  const Prompt p = make_prompt(3, 12, 4, vocab({"+1", "*2"}));
  const Outcome twice = check_answer(p, std::vector<Action>{1, 1});
  EXPECT_TRUE(twice.correct);
  EXPECT_EQ(twice.steps_used, 2);
  EXPECT_FALSE(check_answer(p, std::vector<Action>{0}).correct);

  const Prompt same = make_prompt(5, 5, 4);
  const Outcome none = check_answer(same, std::vector<Action>{});
  EXPECT_TRUE(none.correct);
  EXPECT_EQ(none.steps_used, 0);

  EXPECT_THROW(check_answer(p, std::vector<Action>{0, 0, 0, 0, 0}), PreconditionError);
}

TEST(OracleDistance, Examples) {
  const Prompt p = make_prompt(3, 12, 3, vocab({"+1", "*2"}));
  const Reachability r = oracle_distance(p, initial_state(p));
  EXPECT_TRUE(r.reachable);
  EXPECT_EQ(r.min_steps, 2);

  const Prompt down = make_prompt(5, 4, 3, vocab({"+1", "*2"}));
  const Reachability u = oracle_distance(down, initial_state(down));
  EXPECT_FALSE(u.reachable);
  EXPECT_FALSE(u.min_steps.has_value());

  const Prompt at = make_prompt(7, 7, 3);
  EXPECT_EQ(oracle_distance(at, initial_state(at)).min_steps, 0);
}

TEST(OracleDistance, AgreesWithExhaustiveEnumeration) {
  std::mt19937_64 rng(11);
  const std::vector<OpVocab> vocabs = {default_vocab(), vocab({"+1", "*2"}),
                                       vocab({"-1", "+2", "*3"}), vocab({"+5", "*2", "-3", "+1"})};
  int reachable = 0;
  for (int i = 0; i < 600; ++i) {
    const OpVocab& v = vocabs[i % vocabs.size()];
    const int budget = std::uniform_int_distribution<int>(1, 6)(rng);
    const auto start = std::uniform_int_distribution<std::int64_t>(-5, 10)(rng);
    const auto target = std::uniform_int_distribution<std::int64_t>(-5, 60)(rng);
    const Prompt p = make_prompt(start, target, budget, v);
    const int taken = std::uniform_int_distribution<int>(0, budget)(rng);
    const EnvState s{0, std::uniform_int_distribution<std::int64_t>(-5, 40)(rng), taken};
    const auto expected = enumerate_min_steps(p, s.current, budget - taken);
    const Reachability got = oracle_distance(p, s);
    ASSERT_EQ(got.reachable, expected.has_value()) << "case " << i;
    ASSERT_EQ(got.min_steps, expected) << "case " << i;
    reachable += got.reachable ? 1 : 0;
  }
  EXPECT_GT(reachable, 50);
}

TEST(Synthesize, PromptsAreSolvableAndInRange) {
  SynthesisConfig c;
  const auto prompts = synthesize_prompts(300, c, 5, 10);
  ASSERT_EQ(prompts.size(), 300u);
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    const Prompt& p = prompts[i];
    EXPECT_EQ(p.id, static_cast<std::int64_t>(10 + i));
    EXPECT_GE(p.start, 1);
    EXPECT_LE(p.start, 5);
    EXPECT_GE(p.target, 6);
    EXPECT_LE(p.target, 30);
    EXPECT_EQ(p.budget, 4);
    EXPECT_TRUE(oracle_distance(p, initial_state(p)).reachable);
  }
}

TEST(Synthesize, DeterministicInSeed) {
  SynthesisConfig c;
  const auto a = synthesize_prompts(50, c, 9);
  const auto b = synthesize_prompts(50, c, 9);
  const auto other = synthesize_prompts(50, c, 10);
  ASSERT_EQ(a.size(), b.size());
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].start, b[i].start);
    EXPECT_EQ(a[i].target, b[i].target);
    differs |= a[i].start != other[i].start || a[i].target != other[i].target;
  }
  EXPECT_TRUE(differs);
}

TEST(Synthesize, RejectsZeroCountAndImpossibleRanges) {
  SynthesisConfig c;
  EXPECT_THROW(synthesize_prompts(0, c, 1), PreconditionError);
  SynthesisConfig impossible;
  impossible.op_vocab = vocab({"+1"});
  impossible.budget = 1;
  impossible.start_min = impossible.start_max = 1;
  impossible.target_min = impossible.target_max = 30;
  EXPECT_THROW(synthesize_prompts(1, impossible, 1), SynthesisError);
}

TEST(Prompt, ValidateRejectsBadVocab) {
  EXPECT_THROW(validate(make_prompt(1, 6, 0)), PreconditionError);
  EXPECT_THROW(validate(make_prompt(1, 6, 2, {})), PreconditionError);
  EXPECT_THROW(validate(make_prompt(1, 6, 2, vocab({"+1", "+1"}))), PreconditionError);
}
