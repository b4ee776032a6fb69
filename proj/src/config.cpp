#include "treepref/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <variant>
#include <vector>

namespace treepref {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::cpl: return "cpl";
    case Variant::shuffle: return "shuffle";
    case Variant::complete_only: return "complete_only";
    case Variant::depthwise_q: return "depthwise_q";
    case Variant::sft_only: return "sft_only";
  }
  return "?";
}

Variant parse_variant(std::string_view text) {
  for (Variant v : {Variant::cpl, Variant::shuffle, Variant::complete_only, Variant::depthwise_q,
                    Variant::sft_only}) {
    if (text == to_string(v)) return v;
  }
  throw ConfigError("unknown variant '" + std::string(text) +
                    "' (expected cpl, shuffle, complete_only, depthwise_q or sft_only)");
}

BufferMode buffer_mode_for(Variant v) {
  switch (v) {
    case Variant::complete_only: return BufferMode::complete_only;
    case Variant::depthwise_q: return BufferMode::depthwise;
    default: return BufferMode::both;
  }
}

// Desk-scale defaults. Search width, gamma and the learning rates come from
// a sweep scored on 40 seeds (tools/seed_sweep).
RunConfig::RunConfig() {
  mcts.max_children = 3;
  value.gamma = 0.7;
  value.noise_std = 0.05;
  train.dpo.beta = 0.1;
  train.dpo.batch_size = 64;
  train.dpo.lr_by_epoch = {3.0, 1.5};
}

void validate(const RunConfig& c) {
  auto wrap = [](const char* section, auto&& fn) {
    try {
      fn();
    } catch (const PreconditionError& e) {
      throw ConfigError(std::string(section) + ": " + e.what());
    }
  };
  if (c.epochs < 1) throw ConfigError("run.epochs: must be >= 1");
  if (c.num_train_prompts < 1) throw ConfigError("run.num_train_prompts: must be >= 1");
  if (c.num_eval_prompts < 1) throw ConfigError("run.num_eval_prompts: must be >= 1");
  if (c.env.start_min > c.env.start_max) throw ConfigError("env.start_min: exceeds env.start_max");
  if (c.env.target_min > c.env.target_max) {
    throw ConfigError("env.target_min: exceeds env.target_max");
  }
  if (c.env.budget < 1) throw ConfigError("env.budget: must be >= 1");
  wrap("env.op_vocab", [&] {
    Prompt p;
    p.op_vocab = c.env.op_vocab;
    validate(p);
  });
  wrap("mcts", [&] { validate(c.mcts); });
  wrap("value", [&] { validate(c.value); });
  if (!(c.pairs.tau > 0.0)) throw ConfigError("pairs.tau: must be > 0");
  if (!(c.cpl.alpha >= 0.0)) throw ConfigError("cpl.alpha: must be >= 0");
  wrap("train", [&] { validate(c.train.dpo); });
  if (c.train.dpo.lr_by_epoch.size() < static_cast<std::size_t>(c.epochs)) {
    throw ConfigError("train.lr_by_epoch: needs at least run.epochs entries");
  }
  if (!(c.train.lr_sft >= 0.0)) throw ConfigError("train.lr_sft: must be >= 0");
  if (c.train.batch_size_sft < 1) throw ConfigError("train.batch_size_sft: must be >= 1");
  if (c.train.sft_epochs < 0) throw ConfigError("train.sft_epochs: must be >= 0");
  if (c.train.checkpoint_every < 1) throw ConfigError("train.checkpoint_every: must be >= 1");
}

namespace {

using Scalar = std::variant<std::int64_t, double, bool, std::string>;

struct Entry {
  std::variant<Scalar, std::vector<Scalar>> value;
  int line = 0;
  bool used = false;
};

using Table = std::map<std::string, std::map<std::string, Entry>>;

const std::map<std::string, std::vector<std::string>>& known_keys() {
  static const std::map<std::string, std::vector<std::string>> keys = {
      {"run",
       {"seed", "variant", "epochs", "num_train_prompts", "num_eval_prompts", "shuffle_seed"}},
      {"env", {"start_min", "start_max", "target_min", "target_max", "budget", "op_vocab"}},
      {"mcts", {"c_explore", "num_simulations", "max_children", "ucb_variant"}},
      {"value", {"gamma", "noise_std", "reward_mode"}},
      {"pairs", {"tau", "mode"}},
      {"cpl", {"alpha", "sort_direction", "metric"}},
      {"train",
       {"beta", "batch_size_dpo", "batch_size_sft", "lr_sft", "sft_epochs", "lr_by_epoch",
        "max_grad_norm", "checkpoint_every"}},
  };
  return keys;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

class LineParser {
 public:
  LineParser(std::string_view text, int line) : text_(text), line_(line) {}

  std::variant<Scalar, std::vector<Scalar>> value() {
    skip_ws();
    if (peek() == '[') {
      ++pos_;
      std::vector<Scalar> items;
      skip_ws();
      if (peek() == ']') {
        ++pos_;
      } else {
        while (true) {
          items.push_back(scalar());
          skip_ws();
          const char c = next();
          if (c == ']') break;
          if (c != ',') fail("expected ',' or ']' in array");
          skip_ws();
          if (peek() == ']') {  // trailing comma
            ++pos_;
            break;
          }
        }
      }
      end();
      return items;
    }
    Scalar s = scalar();
    end();
    return s;
  }

 private:
  Scalar scalar() {
    skip_ws();
    if (peek() == '"') return string();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && text_[pos_] != ',' && text_[pos_] != ']' &&
           !std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
    const std::string_view tok = text_.substr(start, pos_ - start);
    if (tok == "true") return true;
    if (tok == "false") return false;
    if (tok.empty()) fail("missing value");
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    if (*first == '+') ++first;
    std::int64_t i = 0;
    auto [ip, iec] = std::from_chars(first, last, i);
    if (iec == std::errc() && ip == last) return i;
    double d = 0.0;
    auto [dp, dec] = std::from_chars(first, last, d);
    if (dec == std::errc() && dp == last) return d;
    fail("cannot parse value '" + std::string(tok) + "'");
  }

  std::string string() {
    ++pos_;  // opening quote
    std::string out;
    while (true) {
      if (pos_ >= text_.size()) fail("unterminated string");
      const char c = text_[pos_++];
      if (c == '"') return out;
      if (c == '\\') {
        if (pos_ >= text_.size()) fail("unterminated escape");
        const char e = text_[pos_++];
        switch (e) {
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          default: fail(std::string("unsupported escape \\") + e);
        }
      } else {
        out += c;
      }
    }
  }

  void end() {
    skip_ws();
    if (pos_ != text_.size()) fail("trailing characters after value");
  }
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }
  char next() { return pos_ < text_.size() ? text_[pos_++] : '\0'; }
  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError("line " + std::to_string(line_) + ": " + msg);
  }

  std::string_view text_;
  int line_;
  std::size_t pos_ = 0;
};

// Drops a trailing comment, honouring quotes.
std::string_view strip_comment(std::string_view line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_string && c == '\\') {
      ++i;
    } else if (c == '"') {
      in_string = !in_string;
    } else if (c == '#' && !in_string) {
      return line.substr(0, i);
    }
  }
  return line;
}

Table parse_table(std::string_view toml) {
  Table table;
  std::string section;
  std::istringstream in{std::string(toml)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(line_no) + ": bad header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      if (!known_keys().contains(section)) {
        throw ConfigError("line " + std::to_string(line_no) + ": unknown section [" + section + "]");
      }
      if (table.contains(section)) {
        throw ConfigError("line " + std::to_string(line_no) + ": duplicate section [" + section +
                          "]");
      }
      table[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(std::string_view(line).substr(0, eq));
    if (section.empty()) {
      throw ConfigError("line " + std::to_string(line_no) + ": key '" + key +
                        "' outside any section");
    }
    const auto& allowed = known_keys().at(section);
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError("unknown key '" + section + "." + key + "' (line " +
                        std::to_string(line_no) + ")");
    }
    if (table[section].contains(key)) {
      throw ConfigError("duplicate key '" + section + "." + key + "'");
    }
    Entry e;
    e.value = LineParser(std::string_view(line).substr(eq + 1), line_no).value();
    e.line = line_no;
    table[section][key] = std::move(e);
  }
  return table;
}

class Reader {
 public:
  explicit Reader(Table& t) : table_(t) {}

  template <class Fn>
  void with(const std::string& section, const std::string& key, Fn&& fn) {
    auto s = table_.find(section);
    if (s == table_.end()) return;
    auto k = s->second.find(key);
    if (k == s->second.end()) return;
    path_ = section + "." + key;
    try {
      fn(k->second);
    } catch (const PreconditionError& e) {
      throw ConfigError(path_ + ": " + e.what());
    }
  }

  void integer(const std::string& sec, const std::string& key, std::int64_t& out) {
    with(sec, key, [&](const Entry& e) { out = as_int(e.value); });
  }
  void integer(const std::string& sec, const std::string& key, int& out) {
    with(sec, key, [&](const Entry& e) { out = static_cast<int>(as_int(e.value)); });
  }
  void count(const std::string& sec, const std::string& key, std::size_t& out) {
    with(sec, key, [&](const Entry& e) {
      const auto v = as_int(e.value);
      if (v < 0) bad("must be >= 0");
      out = static_cast<std::size_t>(v);
    });
  }
  void seed(const std::string& sec, const std::string& key, std::uint64_t& out) {
    with(sec, key, [&](const Entry& e) {
      const auto v = as_int(e.value);
      if (v < 0) bad("seed must be >= 0");
      out = static_cast<std::uint64_t>(v);
    });
  }
  void real(const std::string& sec, const std::string& key, double& out) {
    with(sec, key, [&](const Entry& e) { out = as_real(e.value); });
  }
  template <class Parse, class T>
  void text(const std::string& sec, const std::string& key, T& out, Parse&& parse) {
    with(sec, key, [&](const Entry& e) { out = parse(as_string(e.value)); });
  }
  void reals(const std::string& sec, const std::string& key, std::vector<double>& out) {
    with(sec, key, [&](const Entry& e) {
      out.clear();
      for (const Scalar& s : as_array(e.value)) out.push_back(as_real(s));
    });
  }
  // "auto"/"none" strings or numbers.
  template <class Fn>
  void raw(const std::string& sec, const std::string& key, Fn&& fn) {
    with(sec, key, [&](const Entry& e) { fn(e.value); });
  }

  std::int64_t as_int(const std::variant<Scalar, std::vector<Scalar>>& v) const {
    if (const auto* s = std::get_if<Scalar>(&v)) return as_int(*s);
    bad("expected an integer, got an array");
  }
  std::int64_t as_int(const Scalar& s) const {
    if (const auto* i = std::get_if<std::int64_t>(&s)) return *i;
    bad("expected an integer");
  }
  double as_real(const std::variant<Scalar, std::vector<Scalar>>& v) const {
    if (const auto* s = std::get_if<Scalar>(&v)) return as_real(*s);
    bad("expected a number, got an array");
  }
  double as_real(const Scalar& s) const {
    if (const auto* i = std::get_if<std::int64_t>(&s)) return static_cast<double>(*i);
    if (const auto* d = std::get_if<double>(&s)) return *d;
    bad("expected a number");
  }
  std::string as_string(const std::variant<Scalar, std::vector<Scalar>>& v) const {
    if (const auto* s = std::get_if<Scalar>(&v)) return as_string(*s);
    bad("expected a string, got an array");
  }
  std::string as_string(const Scalar& s) const {
    if (const auto* str = std::get_if<std::string>(&s)) return *str;
    bad("expected a string");
  }
  const std::vector<Scalar>& as_array(const std::variant<Scalar, std::vector<Scalar>>& v) const {
    if (const auto* a = std::get_if<std::vector<Scalar>>(&v)) return *a;
    bad("expected an array");
  }

  [[noreturn]] void bad(const std::string& msg) const { throw ConfigError(path_ + ": " + msg); }

 private:
  Table& table_;
  std::string path_;
};

}  // namespace

RunConfig parse_config(std::string_view toml) {
  Table table = parse_table(toml);
  Reader r(table);
  RunConfig c;

  r.seed("run", "seed", c.seed);
  r.text("run", "variant", c.variant, [](const std::string& s) { return parse_variant(s); });
  r.integer("run", "epochs", c.epochs);
  r.count("run", "num_train_prompts", c.num_train_prompts);
  r.count("run", "num_eval_prompts", c.num_eval_prompts);
  r.raw("run", "shuffle_seed", [&](const auto& v) {
    const auto* s = std::get_if<Scalar>(&v);
    if (s && std::holds_alternative<std::string>(*s)) {
      if (std::get<std::string>(*s) != "auto") r.bad("expected an integer or \"auto\"");
      c.shuffle_seed.reset();
    } else {
      const auto i = r.as_int(v);
      if (i < 0) r.bad("seed must be >= 0");
      c.shuffle_seed = static_cast<std::uint64_t>(i);
    }
  });

  r.integer("env", "start_min", c.env.start_min);
  r.integer("env", "start_max", c.env.start_max);
  r.integer("env", "target_min", c.env.target_min);
  r.integer("env", "target_max", c.env.target_max);
  r.integer("env", "budget", c.env.budget);
  r.with("env", "op_vocab", [&](const Entry& e) {
    c.env.op_vocab.clear();
    for (const Scalar& op : r.as_array(e.value)) c.env.op_vocab.push_back(Op::parse(r.as_string(op)));
  });

  r.real("mcts", "c_explore", c.mcts.c_explore);
  r.integer("mcts", "num_simulations", c.mcts.num_simulations);
  r.integer("mcts", "max_children", c.mcts.max_children);
  r.text("mcts", "ucb_variant", c.mcts.ucb_variant,
         [](const std::string& s) { return parse_ucb_variant(s); });

  r.real("value", "gamma", c.value.gamma);
  r.real("value", "noise_std", c.value.noise_std);
  r.text("value", "reward_mode", c.value.reward_mode,
         [](const std::string& s) { return parse_reward_mode(s); });

  r.real("pairs", "tau", c.pairs.tau);
  r.text("pairs", "mode", c.pairs.mode, [](const std::string& s) -> std::optional<BufferMode> {
    if (s == "auto") return std::nullopt;
    return parse_buffer_mode(s);
  });

  r.real("cpl", "alpha", c.cpl.alpha);
  r.text("cpl", "sort_direction", c.cpl.sort_direction,
         [](const std::string& s) { return parse_sort_direction(s); });
  r.text("cpl", "metric", c.cpl.metric,
         [](const std::string& s) { return parse_curriculum_metric(s); });

  r.real("train", "beta", c.train.dpo.beta);
  r.count("train", "batch_size_dpo", c.train.dpo.batch_size);
  r.count("train", "batch_size_sft", c.train.batch_size_sft);
  r.real("train", "lr_sft", c.train.lr_sft);
  r.integer("train", "sft_epochs", c.train.sft_epochs);
  r.reals("train", "lr_by_epoch", c.train.dpo.lr_by_epoch);
  r.raw("train", "max_grad_norm", [&](const auto& v) {
    const auto* s = std::get_if<Scalar>(&v);
    if (s && std::holds_alternative<std::string>(*s)) {
      if (std::get<std::string>(*s) != "none") r.bad("expected a number or \"none\"");
      c.train.dpo.max_grad_norm.reset();
    } else {
      c.train.dpo.max_grad_norm = r.as_real(v);
    }
  });
  r.integer("train", "checkpoint_every", c.train.checkpoint_every);

  validate(c);
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_toml(const RunConfig& c) {
  auto q = [](const std::string& s) { return "\"" + s + "\""; };
  auto num = [](double x) { return format_double(x); };
  std::ostringstream os;
  os << "[run]\n"
     << "seed = " << c.seed << "\n"
     << "variant = " << q(to_string(c.variant)) << "\n"
     << "epochs = " << c.epochs << "\n"
     << "num_train_prompts = " << c.num_train_prompts << "\n"
     << "num_eval_prompts = " << c.num_eval_prompts << "\n"
     << "shuffle_seed = " << (c.shuffle_seed ? std::to_string(*c.shuffle_seed) : q("auto"))
     << "\n\n";
  os << "[env]\n"
     << "start_min = " << c.env.start_min << "\n"
     << "start_max = " << c.env.start_max << "\n"
     << "target_min = " << c.env.target_min << "\n"
     << "target_max = " << c.env.target_max << "\n"
     << "budget = " << c.env.budget << "\n"
     << "op_vocab = [";
  for (std::size_t i = 0; i < c.env.op_vocab.size(); ++i) {
    os << (i ? ", " : "") << q(c.env.op_vocab[i].to_string());
  }
  os << "]\n\n";
  os << "[mcts]\n"
     << "c_explore = " << num(c.mcts.c_explore) << "\n"
     << "num_simulations = " << c.mcts.num_simulations << "\n"
     << "max_children = " << c.mcts.max_children << "\n"
     << "ucb_variant = " << q(to_string(c.mcts.ucb_variant)) << "\n\n";
  os << "[value]\n"
     << "gamma = " << num(c.value.gamma) << "\n"
     << "noise_std = " << num(c.value.noise_std) << "\n"
     << "reward_mode = " << q(to_string(c.value.reward_mode)) << "\n\n";
  os << "[pairs]\n"
     << "tau = " << num(c.pairs.tau) << "\n"
     << "mode = " << q(c.pairs.mode ? to_string(*c.pairs.mode) : "auto") << "\n\n";
  os << "[cpl]\n"
     << "alpha = " << num(c.cpl.alpha) << "\n"
     << "sort_direction = " << q(to_string(c.cpl.sort_direction)) << "\n"
     << "metric = " << q(to_string(c.cpl.metric)) << "\n\n";
  os << "[train]\n"
     << "beta = " << num(c.train.dpo.beta) << "\n"
     << "batch_size_dpo = " << c.train.dpo.batch_size << "\n"
     << "batch_size_sft = " << c.train.batch_size_sft << "\n"
     << "lr_sft = " << num(c.train.lr_sft) << "\n"
     << "sft_epochs = " << c.train.sft_epochs << "\n"
     << "lr_by_epoch = [";
  for (std::size_t i = 0; i < c.train.dpo.lr_by_epoch.size(); ++i) {
    os << (i ? ", " : "") << num(c.train.dpo.lr_by_epoch[i]);
  }
  os << "]\n"
     << "max_grad_norm = "
     << (c.train.dpo.max_grad_norm ? num(*c.train.dpo.max_grad_norm) : q("none")) << "\n"
     << "checkpoint_every = " << c.train.checkpoint_every << "\n";
  return os.str();
}

}  // namespace treepref
