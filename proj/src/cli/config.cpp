#include "purisim/cli/config.h"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "purisim/format.h"

namespace purisim::cli {

namespace {

using nlohmann::json;

constexpr const char* kManifestSection = "manifest";

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  if (trim(text).empty()) return items;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) items.push_back(trim(item));
  return items;
}

template <typename Int>
Int parse_integer(const std::string& text) {
  const std::string t = trim(text);
  Int value{};
  const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (t.empty() || ec != std::errc() || end != t.data() + t.size()) {
    throw std::invalid_argument("expected an integer, got '" + text + "'");
  }
  return value;
}

double parse_real(const std::string& text) { return parse_double(trim(text)); }

bool parse_bool(const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw std::invalid_argument("expected true or false, got '" + text + "'");
}

// Collects per-key failures so one run reports all of them.
class Resolver {
 public:
  explicit Resolver(const Settings& s) : s_(s) {}

  template <typename F>
  auto get(const std::string& key, F parse) -> decltype(parse(std::string())) {
    try {
      return parse(s_.at(key));
    } catch (const std::exception& e) {
      fail(key, e.what());
      return {};
    }
  }

  template <typename F>
  auto list(const std::string& key, F parse) {
    std::vector<decltype(parse(std::string()))> out;
    try {
      for (const auto& item : split_list(s_.at(key))) out.push_back(parse(item));
    } catch (const std::exception& e) {
      fail(key, e.what());
      out.clear();
    }
    return out;
  }

  bool empty(const std::string& key) const { return trim(s_.at(key)).empty(); }

  // Range checks are skipped for keys that already failed to parse.
  void check(bool ok, const std::string& key, const std::string& why) {
    if (!ok && !failed_.contains(key)) fail(key, why);
  }

  void fail(const std::string& key, const std::string& why) {
    failed_.insert(key);
    errors_.push_back(key + ": " + why);
  }

  bool ok() const { return errors_.empty(); }

  [[noreturn]] void raise() const {
    std::string msg = "invalid configuration";
    for (const auto& e : errors_) msg += "\n  " + e;
    throw ConfigError(msg);
  }

 private:
  const Settings& s_;
  std::vector<std::string> errors_;
  std::set<std::string> failed_;
};

Settings read_ini(std::istream& in) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  Settings out;
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      throw ConfigError("config key '" + section + "' is outside any section");
    }
    for (const auto& [key, value] : body) out[section + "." + key] = value.data();
  }
  return out;
}

std::string json_scalar(const json& v, const std::string& where) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer()) return v.dump();
  if (v.is_number_float()) return format_double(v.get<double>());
  if (v.is_null()) return {};
  throw ConfigError("config value '" + where + "' must be a scalar");
}

Settings read_json(std::istream& in) {
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config JSON must be an object of sections");
  Settings out;
  for (const auto& [section, body] : doc.items()) {
    if (section == kManifestSection) continue;
    if (!body.is_object()) throw ConfigError("config section '" + section + "' must be an object");
    for (const auto& [key, value] : body.items()) {
      const std::string name = section + "." + key;
      out[name] = json_scalar(value, name);
    }
  }
  return out;
}

}  // namespace

const Settings& default_settings() {
  static const Settings defaults = {
      {"chain.hops", "2"},
      {"chain.f0", "0.99"},
      {"chain.pe", "0.1"},
      {"chain.ps", "0.9"},
      {"chain.cutoff", "10000"},
      {"chain.generation_mode", "sequential"},
      {"chain.discard_below", ""},
      {"memory.kind", "cmm"},
      {"memory.t_coh", "100"},
      {"memory.cutoff_tau", ""},
      {"run.policy", "no-pur"},
      {"run.trials", "100000"},
      {"run.seed", "1"},
      {"run.f_th", ""},
      {"run.budget", ""},
      {"run.out", "out"},
      {"run.debug_events", "false"},
      {"run.gain_log", "false"},
      {"run.max_purification_attempts", ""},
      {"run.decay_during_purification", "false"},
      {"calibrate.t_coh_min", "10"},
      {"calibrate.t_coh_max", "200"},
      {"calibrate.points", "8"},
      {"calibrate.target", "0.143"},
      {"calibrate.tolerance", "0.02"},
      {"calibrate.alt_f0", "0.9"},
      {"analyze.grid_res", "201"},
  };
  return defaults;
}

Settings merge_settings(Settings base, const Settings& overrides) {
  std::vector<std::string> unknown;
  for (const auto& [key, value] : overrides) {
    if (!default_settings().contains(key)) {
      unknown.push_back(key);
      continue;
    }
    base[key] = value;
  }
  if (!unknown.empty()) {
    std::string msg = "unknown configuration keys:";
    for (const auto& k : unknown) msg += " " + k;
    throw ConfigError(msg);
  }
  return base;
}

Settings load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  std::istringstream body(text);
  Settings raw = (first != std::string::npos && text[first] == '{') ? read_json(body)
                                                                    : read_ini(body);
  return merge_settings({}, raw);
}

RunConfig resolve_config(const Settings& input) {
  const Settings s = merge_settings(default_settings(), input);
  Resolver r(s);
  RunConfig c;
  c.settings = s;

  c.hops = r.list("chain.hops", parse_integer<int>);
  r.check(!c.hops.empty(), "chain.hops", "needs at least one hop count");
  for (const int h : c.hops) r.check(h >= 1, "chain.hops", "hop counts must be at least 1");

  const auto f0 = r.list("chain.f0", parse_real);
  r.check(!f0.empty(), "chain.f0", "needs a fidelity");
  for (const double f : f0) {
    r.check(f > 0.5 && f <= 1.0, "chain.f0", "fidelities must lie in (0.5, 1]");
  }
  if (f0.size() > 1 && !(c.hops.size() == 1 && f0.size() == static_cast<std::size_t>(c.hops[0]))) {
    r.fail("chain.f0", "per-link values need a single hop count of matching length");
  }

  ChainParams& p = c.chain;
  p.p_e = r.get("chain.pe", parse_real);
  r.check(p.p_e > 0.0 && p.p_e <= 1.0, "chain.pe", "must lie in (0, 1]");
  p.p_s = r.get("chain.ps", parse_real);
  r.check(p.p_s > 0.0 && p.p_s <= 1.0, "chain.ps", "must lie in (0, 1]");
  p.cutoff = r.get("chain.cutoff", parse_integer<Timestep>);
  r.check(p.cutoff >= 1, "chain.cutoff", "must be at least 1");
  p.generation_mode = r.get("chain.generation_mode", [](const std::string& t) {
    return parse_generation_mode(trim(t));
  });
  if (!r.empty("chain.discard_below")) {
    p.discard_below = r.get("chain.discard_below", parse_real);
  }

  const auto kind = r.get("memory.kind", [](const std::string& t) {
    return parse_memory_kind(trim(t));
  });
  if (kind == MemoryModel::Kind::kConstant) {
    std::optional<Timestep> tau;
    if (!r.empty("memory.cutoff_tau")) {
      tau = r.get("memory.cutoff_tau", parse_integer<Timestep>);
      r.check(*tau >= 0, "memory.cutoff_tau", "must be non-negative");
    }
    p.memory = MemoryModel::constant(tau);
  } else {
    const double t_coh = r.get("memory.t_coh", parse_real);
    r.check(t_coh > 0.0, "memory.t_coh", "must be positive for lmm and emm");
    p.memory = kind == MemoryModel::Kind::kLinear ? MemoryModel::linear(t_coh)
                                                  : MemoryModel::exponential(t_coh);
    r.check(r.empty("memory.cutoff_tau"), "memory.cutoff_tau", "only applies to cmm");
  }

  c.policies = r.list("run.policy", [](const std::string& t) { return parse_policy(t); });
  r.check(!c.policies.empty(), "run.policy", "needs at least one policy");
  c.trials = r.get("run.trials", parse_integer<std::size_t>);
  r.check(c.trials >= 1, "run.trials", "must be at least 1");
  c.seed = r.get("run.seed", parse_integer<std::uint64_t>);
  c.f_th = r.list("run.f_th", parse_real);
  for (const double f : c.f_th) r.check(f > 0.5 && f <= 1.0, "run.f_th", "must lie in (0.5, 1]");
  c.budgets = r.list("run.budget", parse_integer<Timestep>);
  for (const Timestep n : c.budgets) r.check(n >= 1, "run.budget", "must be at least 1");
  c.out = trim(s.at("run.out"));
  r.check(!c.out.empty(), "run.out", "needs a directory");
  c.debug_events = r.get("run.debug_events", parse_bool);
  c.gain_log = r.get("run.gain_log", parse_bool);
  if (!r.empty("run.max_purification_attempts")) {
    c.options.max_purification_attempts =
        r.get("run.max_purification_attempts", parse_integer<int>);
    r.check(*c.options.max_purification_attempts >= 1, "run.max_purification_attempts",
            "must be at least 1");
  }
  c.options.decay_during_purification = r.get("run.decay_during_purification", parse_bool);

  CalibrateSettings& cal = c.calibrate;
  cal.t_coh_min = r.get("calibrate.t_coh_min", parse_real);
  cal.t_coh_max = r.get("calibrate.t_coh_max", parse_real);
  r.check(cal.t_coh_min > 0.0 && cal.t_coh_max > cal.t_coh_min, "calibrate.t_coh_max",
          "needs 0 < t_coh_min < t_coh_max");
  cal.points = r.get("calibrate.points", parse_integer<int>);
  r.check(cal.points >= 2, "calibrate.points", "must be at least 2");
  cal.target = r.get("calibrate.target", parse_real);
  r.check(cal.target > 0.0 && cal.target < 1.0, "calibrate.target", "must lie in (0, 1)");
  cal.tolerance = r.get("calibrate.tolerance", parse_real);
  r.check(cal.tolerance > 0.0, "calibrate.tolerance", "must be positive");
  cal.alt_f0 = r.get("calibrate.alt_f0", parse_real);
  r.check(cal.alt_f0 > 0.5 && cal.alt_f0 <= 1.0, "calibrate.alt_f0", "must lie in (0.5, 1]");

  c.grid_res = r.get("analyze.grid_res", parse_integer<int>);
  r.check(c.grid_res >= 2, "analyze.grid_res", "must be at least 2");

  if (!r.ok()) r.raise();

  p.hops = c.hops.front();
  p.link_f0 = f0.size() == 1 ? std::vector<Fidelity>(static_cast<std::size_t>(p.hops), f0[0]) : f0;
  p.seed = c.seed;
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid configuration\n  chain: ") + e.what());
  }
  return c;
}

ExperimentSpec experiment_spec(const RunConfig& config) {
  ExperimentSpec spec;
  spec.policies = config.policies;
  spec.params = config.chain;
  spec.f_th = config.f_th;
  spec.budgets = config.budgets;
  spec.hops = config.hops;
  spec.trials = config.trials;
  spec.master_seed = config.seed;
  spec.options = config.options;
  return spec;
}

std::string manifest_json(const std::string& command, const RunConfig& config) {
  json doc = json::object();
  doc[kManifestSection] = {{"command", command}, {"tool", "purisim"}};
  for (const auto& [key, value] : config.settings) {
    const auto dot = key.find('.');
    doc[key.substr(0, dot)][key.substr(dot + 1)] = value;
  }
  return doc.dump(2) + "\n";
}

}  // namespace purisim::cli
