// seed_sweep: runs cpl, shuffle, and complete_only on a range of master
// seeds and prints per-seed accuracies plus the means.
//
//   seed_sweep [--config FILE] [--seeds N] [--first S]

#include <cmath>
#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "treepref/config.hpp"
#include "treepref/orchestrator.hpp"

using namespace treepref;

namespace {

double checkpoint_std(const RunResult& r) {
  const auto& cp = r.checkpoints;
  if (cp.size() < 2) return 0.0;
  double mean = 0.0;
  for (const auto& [step, a] : cp) mean += a;
  mean /= static_cast<double>(cp.size());
  double sq = 0.0;
  for (const auto& [step, a] : cp) sq += (a - mean) * (a - mean);
  return std::sqrt(sq / static_cast<double>(cp.size() - 1));
}

struct Sums {
  double ep1 = 0.0, ep2 = 0.0, best = 0.0, sd = 0.0;
  void add(const RunResult& r) {
    ep1 += r.epoch_accuracy.front();
    ep2 += r.epoch_accuracy.back();
    best += r.best_checkpoint_accuracy;
    sd += checkpoint_std(r);
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-seed comparison of cpl, shuffle, and complete_only"};
  std::string config_path;
  int seeds = 5;
  std::uint64_t first = 0;
  app.add_option("--config", config_path, "Run config (TOML)")->check(CLI::ExistingFile);
  app.add_option("--seeds", seeds, "Number of seeds")->capture_default_str();
  app.add_option("--first", first, "First master seed")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  try {
    const RunConfig base = config_path.empty() ? RunConfig{} : load_config(config_path);
    const Variant variants[] = {Variant::cpl, Variant::shuffle, Variant::complete_only};
    double base_acc = 0.0, sft_acc = 0.0;
    Sums sums[3];
    std::printf("seed   base    sft     cpl ep1/ep2     shuffle ep1/ep2  complete_only ep1/ep2\n");
    for (int k = 0; k < seeds; ++k) {
      RunConfig c = base;
      c.seed = first + static_cast<std::uint64_t>(k);
      const SharedStage shared = prepare(c);
      base_acc += shared.base_accuracy;
      sft_acc += shared.sft_accuracy;
      std::printf("%-6llu %.3f  %.3f", static_cast<unsigned long long>(c.seed),
                  shared.base_accuracy, shared.sft_accuracy);
      for (int v = 0; v < 3; ++v) {
        const RunResult r = run_variant(shared, c, variants[v]).result;
        sums[v].add(r);
        std::printf("   %.3f / %.3f", r.epoch_accuracy.front(), r.epoch_accuracy.back());
      }
      std::printf("\n");
    }
    const double n = seeds;
    std::printf("mean   %.3f  %.3f", base_acc / n, sft_acc / n);
    for (const Sums& s : sums) std::printf("   %.3f / %.3f", s.ep1 / n, s.ep2 / n);
    std::printf("\n\nvariant         best    checkpoint std\n");
    for (int v = 0; v < 3; ++v) {
      std::printf("%-15s %.3f   %.4f\n", to_string(variants[v]).c_str(), sums[v].best / n,
                  sums[v].sd / n);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
