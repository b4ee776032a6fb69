// Serial reference vs OpenMP for the three parallel kernels: batch tree
// search, curriculum pair scoring, and the batch DPO gradient.

#include <benchmark/benchmark.h>

#include "treepref/orchestrator.hpp"

using namespace treepref;

namespace {

Exec exec_of(const benchmark::State& state) {
  return state.range(0) == 0 ? Exec::serial : Exec::parallel;
}

const SharedStage& stage() {
  static const SharedStage s = [] {
    RunConfig c;
    c.num_train_prompts = 100;
    c.num_eval_prompts = 50;
    c.train.sft_epochs = 5;
    return prepare(c);
  }();
  return s;
}

const PairBuffer& buffer() {
  static const PairBuffer b = variant_buffer(stage(), RunConfig{}, Variant::cpl);
  return b;
}

void BM_Search(benchmark::State& state) {
  const auto prompts = synthesize_prompts(64, SynthesisConfig{}, 1);
  ValueConfig v;
  v.noise_std = 0.05;
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_search_batch(prompts, PolicyParams::zeros(5), v, MctsConfig{},
                                              exec_of(state)));
  }
}

void BM_PairScoring(benchmark::State& state) {
  const SharedStage& s = stage();
  for (auto _ : state) {
    benchmark::DoNotOptimize(schedule_epoch(buffer(), s.prompt_table, s.sft_policy, s.value,
                                            CurriculumConfig{}, 0, exec_of(state)));
  }
}

void BM_DpoGradient(benchmark::State& state) {
  const SharedStage& s = stage();
  std::vector<const TrajectoryPair*> batch;
  for (const auto& p : buffer().pairs()) batch.push_back(&p);
  const FrozenPolicy ref = snapshot(s.sft_policy);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        dpo_loss_and_grad(s.sft_policy, ref, batch, s.prompt_table, 0.1, exec_of(state)));
  }
}

}  // namespace

BENCHMARK(BM_Search)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PairScoring)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DpoGradient)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
