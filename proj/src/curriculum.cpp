#include "treepref/curriculum.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "treepref/parallel.hpp"

namespace treepref {

PromptTable index_prompts(std::span<const Prompt> prompts) {
  PromptTable table;
  for (const Prompt& p : prompts) {
    if (!table.emplace(p.id, p).second) {
      throw PreconditionError("duplicate prompt id " + std::to_string(p.id));
    }
  }
  return table;
}

const Prompt& lookup(const PromptTable& prompts, std::int64_t id) {
  auto it = prompts.find(id);
  if (it == prompts.end()) throw PreconditionError("unknown prompt id " + std::to_string(id));
  return it->second;
}

namespace {

double summed_reward(const Prompt& prompt, std::span<const Action> steps,
                     const ValueConfig& value) {
  EnvState state = initial_state(prompt);
  double total = 0.0;
  for (Action a : steps) {
    const EnvState next = apply_step(prompt, state, a);
    total += step_reward(prompt, state, next, value);
    state = next;
  }
  return total;
}

}  // namespace

double reward_gap(const TrajectoryPair& pair, const Prompt& prompt, const ValueConfig& value) {
  return summed_reward(prompt, pair.winner.steps, value) -
         summed_reward(prompt, pair.loser.steps, value);
}

double prediction_gap(const TrajectoryPair& pair, const Prompt& prompt,
                      const PolicyParams& policy) {
  return trajectory_logprob(policy, prompt, pair.winner.steps) -
         trajectory_logprob(policy, prompt, pair.loser.steps);
}

std::vector<double> minmax_normalize(std::span<const double> values) {
  if (values.empty()) throw PreconditionError("cannot normalize an empty list");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double min = *lo;
  const double range = *hi - *lo;
  std::vector<double> out(values.size(), 0.5);
  if (range > 0.0) {
    // Snap to a 2^-40 grid: gaps that agree up to summation roundoff tie
    // and fall back to pair-index order instead of ordering on noise.
    constexpr double kGrid = 0x1p40;
    for (std::size_t i = 0; i < values.size(); ++i) {
      out[i] = std::round((values[i] - min) / range * kGrid) / kGrid;
    }
  }
  return out;
}

std::string to_string(SortDirection d) {
  return d == SortDirection::descending ? "descending" : "ascending";
}

SortDirection parse_sort_direction(std::string_view text) {
  if (text == "descending") return SortDirection::descending;
  if (text == "ascending") return SortDirection::ascending;
  throw PreconditionError("unknown sort_direction '" + std::string(text) + "'");
}

std::string to_string(CurriculumMetric m) {
  return m == CurriculumMetric::combined ? "combined" : "pg_only";
}

CurriculumMetric parse_curriculum_metric(std::string_view text) {
  if (text == "combined") return CurriculumMetric::combined;
  if (text == "pg_only") return CurriculumMetric::pg_only;
  throw PreconditionError("unknown curriculum metric '" + std::string(text) + "'");
}

Schedule round_robin(const PairBuffer& buffer, std::span<const PairWeights> weights,
                     SortDirection direction, int epoch) {
  if (weights.size() != buffer.size()) {
    throw PreconditionError("weights do not cover the buffer");
  }
  std::vector<std::vector<std::size_t>> queues;
  for (const auto& [prompt_id, indices] : buffer.by_prompt()) {
    std::vector<std::size_t> q = indices;
    std::stable_sort(q.begin(), q.end(), [&](std::size_t a, std::size_t b) {
      if (weights[a].w_g != weights[b].w_g) {
        return direction == SortDirection::descending ? weights[a].w_g > weights[b].w_g
                                                      : weights[a].w_g < weights[b].w_g;
      }
      return a < b;
    });
    queues.push_back(std::move(q));
  }
  Schedule s;
  s.epoch = epoch;
  s.order.reserve(buffer.size());
  for (std::size_t round = 0; s.order.size() < buffer.size(); ++round) {
    for (const auto& q : queues) {
      if (round < q.size()) s.order.push_back(q[round]);
    }
  }
  return s;
}

Schedule shuffle_schedule(const PairBuffer& buffer, std::uint64_t seed, int epoch) {
  if (buffer.empty()) throw PreconditionError("cannot schedule an empty buffer");
  Schedule s;
  s.epoch = epoch;
  s.order.resize(buffer.size());
  for (std::size_t i = 0; i < s.order.size(); ++i) s.order[i] = i;
  Rng rng(seed);
  std::shuffle(s.order.begin(), s.order.end(), rng);
  return s;
}

CurriculumScheduler::CurriculumScheduler(const PairBuffer& buffer, const PromptTable& prompts,
                                         ValueConfig value, CurriculumConfig config, Exec exec)
    : buffer_(buffer), prompts_(prompts), value_(value), config_(config), exec_(exec) {
  validate(value_);
  if (!(config_.alpha >= 0.0)) throw PreconditionError("alpha must be >= 0");
}

const std::vector<double>& CurriculumScheduler::reward_gaps() {
  if (!reward_gaps_) {
    std::vector<double> gaps(buffer_.size());
    parallel_for(buffer_.size(), exec_, [&](std::size_t i) {
      const TrajectoryPair& p = buffer_[i];
      gaps[i] = reward_gap(p, lookup(prompts_, p.prompt_id), value_);
    });
    reward_gaps_ = std::move(gaps);
  }
  return *reward_gaps_;
}

std::vector<double> CurriculumScheduler::prediction_gaps(const PolicyParams& policy) const {
  policy.require_finite();
  std::vector<double> gaps(buffer_.size());
  parallel_for(buffer_.size(), exec_, [&](std::size_t i) {
    const TrajectoryPair& p = buffer_[i];
    gaps[i] = prediction_gap(p, lookup(prompts_, p.prompt_id), policy);
  });
  return gaps;
}

EpochPlan CurriculumScheduler::schedule_epoch(const PolicyParams& policy, int epoch) {
  if (buffer_.empty()) throw PreconditionError("cannot schedule an empty buffer");
  const std::vector<double>& rg = reward_gaps();
  const std::vector<double> pg = prediction_gaps(policy);
  const std::vector<double> rg_norm = minmax_normalize(rg);
  const std::vector<double> pg_norm = minmax_normalize(pg);

  EpochPlan plan;
  plan.weights.resize(buffer_.size());
  for (std::size_t i = 0; i < buffer_.size(); ++i) {
    PairWeights& w = plan.weights[i];
    w.pair_index = i;
    w.r_g = rg[i];
    w.p_g = pg[i];
    w.r_g_norm = rg_norm[i];
    w.p_g_norm = pg_norm[i];
    w.w_g = config_.metric == CurriculumMetric::pg_only
                ? pg_norm[i]
                : combined_weight(rg_norm[i], pg_norm[i], config_.alpha);
  }
  plan.schedule = round_robin(buffer_, plan.weights, config_.sort_direction, epoch);
  return plan;
}

EpochPlan schedule_epoch(const PairBuffer& buffer, const PromptTable& prompts,
                         const PolicyParams& policy, const ValueConfig& value,
                         const CurriculumConfig& config, int epoch, Exec exec) {
  CurriculumScheduler scheduler(buffer, prompts, value, config, exec);
  return scheduler.schedule_epoch(policy, epoch);
}

std::string schedule_csv(const PairBuffer& buffer, const Schedule& schedule,
                         std::span<const PairWeights> weights) {
  std::ostringstream os;
  os << "pair_index,prompt_id,r_g,p_g,r_g_norm,p_g_norm,w_g,emit_position\n";
  for (std::size_t pos = 0; pos < schedule.order.size(); ++pos) {
    const std::size_t i = schedule.order[pos];
    os << i << ',' << buffer[i].prompt_id << ',';
    if (weights.empty()) {
      os << ",,,,,";
    } else {
      const PairWeights& w = weights[i];
      os << format_double(w.r_g) << ',' << format_double(w.p_g) << ','
         << format_double(w.r_g_norm) << ',' << format_double(w.p_g_norm) << ','
         << format_double(w.w_g) << ',';
    }
    os << pos << '\n';
  }
  return os.str();
}

}  // namespace treepref
