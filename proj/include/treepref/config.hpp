#pragma once

// Run configuration and its TOML form.
//
// The reader accepts the subset of TOML the run files use: [section]
// headers, `key = value` lines, integers, floats, booleans, double-quoted
// strings, flat arrays, and `#` comments. Unknown sections and keys are
// errors, reported with their dotted key path.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "treepref/curriculum.hpp"
#include "treepref/env.hpp"
#include "treepref/mcts.hpp"
#include "treepref/pairs.hpp"
#include "treepref/train.hpp"
#include "treepref/value.hpp"

namespace treepref {

class ConfigError : public Error {
 public:
  using Error::Error;
};

enum class Variant { cpl, shuffle, complete_only, depthwise_q, sft_only };

std::string to_string(Variant v);
Variant parse_variant(std::string_view text);

/// Buffer mode each variant trains on.
BufferMode buffer_mode_for(Variant v);

struct PairsConfig {
  double tau = 0.3;
  /// Unset: follow the variant.
  std::optional<BufferMode> mode;
};

struct TrainConfig {
  DpoConfig dpo;
  double lr_sft = 1.0;
  std::size_t batch_size_sft = 128;
  int sft_epochs = 4;
  int checkpoint_every = 10;
};

struct RunConfig {
  std::uint64_t seed = 0;
  Variant variant = Variant::cpl;
  int epochs = 2;
  std::size_t num_train_prompts = 200;
  std::size_t num_eval_prompts = 200;
  /// Unset: derived from the master seed.
  std::optional<std::uint64_t> shuffle_seed;

  SynthesisConfig env;
  MctsConfig mcts;    // seed is derived from the master seed
  ValueConfig value;  // seed is derived from the master seed
  PairsConfig pairs;
  CurriculumConfig cpl;
  TrainConfig train;

  RunConfig();
};

/// Throws ConfigError naming the offending key.
void validate(const RunConfig& config);

RunConfig parse_config(std::string_view toml);
RunConfig load_config(const std::string& path);

/// Full config with every key written out; parse_config(to_toml(c)) == c.
std::string to_toml(const RunConfig& config);

}  // namespace treepref
