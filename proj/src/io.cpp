#include "treepref/io.hpp"

#include <bit>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace treepref {

using Json = nlohmann::ordered_json;

namespace {

// One JSONL record under strict validation.
class Record {
 public:
  Record(const Json& j, int line, std::string_view what) : j_(j), line_(line), what_(what) {
    if (!j_.is_object()) fail("expected a JSON object");
  }

  void expect_keys(std::initializer_list<const char*> keys) const {
    std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [k, v] : j_.items()) {
      if (!allowed.contains(k)) fail("unknown field '" + k + "'");
    }
    for (const char* k : keys) {
      if (!j_.contains(k)) fail(std::string("missing field '") + k + "'");
    }
  }

  const Json& at(const char* key) const { return j_.at(key); }

  std::int64_t integer(const char* key) const { return as_integer(at(key), key); }
  std::uint64_t unsigned_integer(const char* key) const {
    const Json& v = at(key);
    if (!v.is_number_unsigned()) fail(std::string("field '") + key + "' must be a non-negative integer");
    return v.get<std::uint64_t>();
  }
  double number(const char* key) const {
    const Json& v = at(key);
    if (!v.is_number()) fail(std::string("field '") + key + "' must be a number");
    return v.get<double>();
  }
  bool boolean(const char* key) const {
    const Json& v = at(key);
    if (!v.is_boolean()) fail(std::string("field '") + key + "' must be a boolean");
    return v.get<bool>();
  }
  std::string string(const char* key) const {
    const Json& v = at(key);
    if (!v.is_string()) fail(std::string("field '") + key + "' must be a string");
    return v.get<std::string>();
  }
  std::optional<std::int64_t> nullable_integer(const char* key) const {
    const Json& v = at(key);
    if (v.is_null()) return std::nullopt;
    return as_integer(v, key);
  }
  StepList steps(const char* key) const {
    const Json& v = at(key);
    if (!v.is_array()) fail(std::string("field '") + key + "' must be an array");
    StepList out;
    for (const Json& x : v) out.push_back(static_cast<Action>(as_integer(x, key)));
    return out;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw SchemaError(std::string(what_) + " line " + std::to_string(line_) + ": " + msg);
  }

 private:
  std::int64_t as_integer(const Json& v, const char* key) const {
    if (!v.is_number_integer()) fail(std::string("field '") + key + "' must be an integer");
    return v.get<std::int64_t>();
  }

  const Json& j_;
  int line_;
  std::string_view what_;
};

// Calls fn(json, line_number) for each line. A single trailing newline is
// allowed; any other empty line is an error.
template <class Fn>
void for_each_line(std::string_view text, std::string_view what, Fn&& fn) {
  int line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    ++line_no;
    const std::size_t nl = text.find('\n', pos);
    const std::string_view line =
        text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    if (line.empty()) {
      throw SchemaError(std::string(what) + " line " + std::to_string(line_no) + ": empty line");
    }
    Json j;
    try {
      j = Json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw SchemaError(std::string(what) + " line " + std::to_string(line_no) +
                        ": malformed JSON (" + e.what() + ")");
    }
    fn(j, line_no);
  }
}

Json steps_json(const StepList& steps) {
  Json a = Json::array();
  for (Action s : steps) a.push_back(s);
  return a;
}

}  // namespace

std::string prompts_to_jsonl(std::span<const Prompt> prompts) {
  std::string out;
  for (const Prompt& p : prompts) {
    Json ops = Json::array();
    for (const Op& op : p.op_vocab) ops.push_back(op.to_string());
    Json j;
    j["id"] = p.id;
    j["start"] = p.start;
    j["target"] = p.target;
    j["budget"] = p.budget;
    j["op_vocab"] = std::move(ops);
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<Prompt> prompts_from_jsonl(std::string_view text) {
  std::vector<Prompt> out;
  for_each_line(text, "prompts", [&](const Json& j, int line) {
    Record r(j, line, "prompts");
    r.expect_keys({"id", "start", "target", "budget", "op_vocab"});
    Prompt p;
    p.id = r.integer("id");
    p.start = r.integer("start");
    p.target = r.integer("target");
    p.budget = static_cast<int>(r.integer("budget"));
    const Json& ops = r.at("op_vocab");
    if (!ops.is_array()) r.fail("field 'op_vocab' must be an array");
    try {
      for (const Json& op : ops) {
        if (!op.is_string()) r.fail("op_vocab entries must be strings");
        p.op_vocab.push_back(Op::parse(op.get<std::string>()));
      }
      validate(p);
    } catch (const PreconditionError& e) {
      r.fail(e.what());
    }
    out.push_back(std::move(p));
  });
  return out;
}

std::string trees_to_jsonl(std::span<const SearchTree> trees) {
  std::string out;
  for (const SearchTree& t : trees) {
    Json cfg;
    cfg["c_explore"] = t.config.c_explore;
    cfg["num_simulations"] = t.config.num_simulations;
    cfg["max_children"] = t.config.max_children;
    cfg["seed"] = t.config.seed;
    cfg["ucb_variant"] = to_string(t.config.ucb_variant);
    Json header;
    header["prompt_id"] = t.prompt_id;
    header["config"] = std::move(cfg);
    out += header.dump();
    out += '\n';
    for (const TreeNode& n : t.nodes) {
      Json j;
      j["id"] = n.id;
      j["parent"] = n.parent ? Json(*n.parent) : Json(nullptr);
      j["action"] = n.action ? Json(*n.action) : Json(nullptr);
      j["current"] = n.state.current;
      j["steps_taken"] = n.state.steps_taken;
      j["n"] = n.n;
      j["w"] = n.w;
      j["v_est"] = n.v_est;
      j["terminal"] = n.terminal;
      out += j.dump();
      out += '\n';
    }
  }
  return out;
}

std::vector<SearchTree> trees_from_jsonl(std::string_view text) {
  std::vector<SearchTree> trees;
  for_each_line(text, "trees", [&](const Json& j, int line) {
    Record r(j, line, "trees");
    if (j.is_object() && j.contains("config")) {
      r.expect_keys({"prompt_id", "config"});
      SearchTree t;
      t.prompt_id = r.integer("prompt_id");
      Record c(r.at("config"), line, "trees");
      c.expect_keys({"c_explore", "num_simulations", "max_children", "seed", "ucb_variant"});
      t.config.c_explore = c.number("c_explore");
      t.config.num_simulations = static_cast<int>(c.integer("num_simulations"));
      t.config.max_children = static_cast<int>(c.integer("max_children"));
      t.config.seed = c.unsigned_integer("seed");
      try {
        t.config.ucb_variant = parse_ucb_variant(c.string("ucb_variant"));
      } catch (const PreconditionError& e) {
        r.fail(e.what());
      }
      trees.push_back(std::move(t));
      return;
    }
    r.expect_keys({"id", "parent", "action", "current", "steps_taken", "n", "w", "v_est",
                   "terminal"});
    if (trees.empty()) r.fail("node record before any tree header");
    SearchTree& t = trees.back();
    TreeNode n;
    n.id = static_cast<NodeId>(r.integer("id"));
    if (n.id != static_cast<NodeId>(t.nodes.size())) r.fail("node ids must be consecutive from 0");
    const auto parent = r.nullable_integer("parent");
    const auto action = r.nullable_integer("action");
    if (n.id == 0) {
      if (parent || action) r.fail("root must have null parent and action");
    } else {
      if (!parent || !action) r.fail("non-root node needs parent and action");
      if (*parent < 0 || *parent >= n.id) r.fail("parent must precede the node");
      n.parent = static_cast<NodeId>(*parent);
      n.action = static_cast<Action>(*action);
    }
    n.state.prompt_id = t.prompt_id;
    n.state.current = r.integer("current");
    n.state.steps_taken = static_cast<int>(r.integer("steps_taken"));
    n.n = r.integer("n");
    if (n.n < 0) r.fail("visit count must be >= 0");
    n.w = r.number("w");
    n.v_est = r.number("v_est");
    n.terminal = r.boolean("terminal");
    if (n.parent) t.node(*n.parent).children.push_back(n.id);
    t.nodes.push_back(std::move(n));
  });
  for (const SearchTree& t : trees) {
    if (t.nodes.empty()) {
      throw SchemaError("trees: tree for prompt " + std::to_string(t.prompt_id) + " has no nodes");
    }
  }
  return trees;
}

std::string buffer_to_jsonl(const PairBuffer& buffer) {
  std::string out;
  for (const TrajectoryPair& p : buffer.pairs()) {
    Json j;
    j["prompt_id"] = p.prompt_id;
    j["kind"] = to_string(p.kind);
    j["gap"] = p.gap;
    j["winner_steps"] = steps_json(p.winner.steps);
    j["loser_steps"] = steps_json(p.loser.steps);
    j["winner_value"] = p.winner.value;
    j["loser_value"] = p.loser.value;
    out += j.dump();
    out += '\n';
  }
  return out;
}

PairBuffer buffer_from_jsonl(std::string_view text) {
  PairBuffer buffer;
  for_each_line(text, "buffer", [&](const Json& j, int line) {
    Record r(j, line, "buffer");
    r.expect_keys({"prompt_id", "kind", "gap", "winner_steps", "loser_steps", "winner_value",
                   "loser_value"});
    TrajectoryPair p;
    p.prompt_id = r.integer("prompt_id");
    try {
      p.kind = parse_pair_kind(r.string("kind"));
    } catch (const PreconditionError& e) {
      r.fail(e.what());
    }
    p.gap = r.number("gap");
    const bool complete = p.kind == PairKind::complete;
    p.winner = {p.prompt_id, r.steps("winner_steps"), complete, r.number("winner_value")};
    p.loser = {p.prompt_id, r.steps("loser_steps"), complete, r.number("loser_value")};
    if (!buffer.add(std::move(p))) r.fail("duplicate pair");
  });
  return buffer;
}

std::string policy_checksum(const PolicyParams& params) {
  std::string bytes;
  bytes.reserve(params.size() * 8);
  for (double x : params.theta()) {
    auto bits = std::bit_cast<std::uint64_t>(x);
    for (int i = 0; i < 8; ++i, bits >>= 8) bytes += static_cast<char>(bits & 0xff);
  }
  return checksum_hex(bytes);
}

std::string policy_to_json(const PolicyParams& params) {
  std::ostringstream os;
  os << "{\"feature_dim\":" << params.feature_dim() << ",\"vocab_size\":" << params.vocab_size()
     << ",\"checksum\":\"" << policy_checksum(params) << "\",\"theta\":[";
  char buf[40];
  bool first = true;
  for (double x : params.theta()) {
    std::snprintf(buf, sizeof buf, "%.17g", x);
    os << (first ? "" : ",") << buf;
    first = false;
  }
  os << "]}\n";
  return os.str();
}

PolicyParams policy_from_json(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(std::string("policy: malformed JSON (") + e.what() + ")");
  }
  Record r(j, 1, "policy");
  r.expect_keys({"feature_dim", "vocab_size", "checksum", "theta"});
  const Json& theta_json = r.at("theta");
  if (!theta_json.is_array()) r.fail("field 'theta' must be an array");
  std::vector<double> theta;
  for (const Json& x : theta_json) {
    if (!x.is_number()) r.fail("theta entries must be numbers");
    theta.push_back(x.get<double>());
  }
  PolicyParams params;
  try {
    params = PolicyParams(static_cast<std::size_t>(r.integer("feature_dim")),
                          static_cast<std::size_t>(r.integer("vocab_size")), std::move(theta));
  } catch (const PreconditionError& e) {
    r.fail(e.what());
  }
  if (policy_checksum(params) != r.string("checksum")) r.fail("checksum mismatch");
  return params;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error("failed writing " + path);
}

}  // namespace treepref
