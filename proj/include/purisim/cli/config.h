#pragma once

// Run configuration for the command-line front end.
//
// Settings are addressed as "section.key". Sources are layered
// defaults < config file < command-line flags; every layer speaks the same
// text form, so a value means the same thing wherever it comes from. Lists
// are comma-separated.
//
// A config file is either INI:
//
//   [chain]
//   hops = 2
//   [memory]
//   kind = emm
//   t_coh = 52
//
// or the manifest.json written next to every result, which carries the fully
// resolved settings and reproduces that run.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "purisim/experiments.h"

namespace purisim::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitIo = 3;

/// Invalid or unknown settings. The message lists every offending key.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Settings = std::map<std::string, std::string>;

/// Every recognised key with its default text.
const Settings& default_settings();

/// Reads INI or manifest JSON. Unknown sections or keys are a ConfigError;
/// an unreadable file is an IoError.
Settings load_config_file(const std::filesystem::path& path);

/// `base` with every key of `overrides` replaced. Unknown keys throw.
Settings merge_settings(Settings base, const Settings& overrides);

struct CalibrateSettings {
  double t_coh_min = 10.0;
  double t_coh_max = 200.0;
  int points = 8;
  double target = 0.143;
  double tolerance = 0.02;
  Fidelity alt_f0 = 0.9;
};

struct RunConfig {
  ChainParams chain;  // hops and link fidelities for the first hop count
  std::vector<int> hops;
  std::vector<PolicyKind> policies;
  std::vector<Fidelity> f_th;
  std::vector<Timestep> budgets;
  std::size_t trials = 100000;
  std::uint64_t seed = 1;
  PolicyOptions options;
  std::filesystem::path out;
  bool debug_events = false;
  bool gain_log = false;
  int grid_res = 201;
  CalibrateSettings calibrate;
  Settings settings;  // the resolved text, as recorded in manifests
};

/// Parses and validates everything. Throws ConfigError naming each bad key.
RunConfig resolve_config(const Settings& settings);

/// ExperimentSpec for the grid described by `config`.
ExperimentSpec experiment_spec(const RunConfig& config);

/// Manifest JSON text: the command plus the resolved settings.
std::string manifest_json(const std::string& command, const RunConfig& config);

}  // namespace purisim::cli
