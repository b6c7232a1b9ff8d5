#include "purisim/cli/app.h"

#include <CLI11.hpp>
#include <fstream>
#include <json.hpp>
#include <ostream>
#include <sstream>

#include "purisim/format.h"

namespace purisim::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// Buffered text file; nothing reaches disk until close() succeeds.
class OutputFile {
 public:
  OutputFile(const fs::path& dir, const std::string& name) : path_(dir / name) {}

  std::ostream& stream() { return buf_; }

  void close() {
    std::ofstream out(path_, std::ios::binary | std::ios::trunc);
    out << buf_.str();
    out.flush();
    if (!out) throw IoError("cannot write " + path_.string());
  }

 private:
  fs::path path_;
  std::ostringstream buf_;
};

void write_text(const fs::path& dir, const std::string& name, const std::string& text) {
  OutputFile f(dir, name);
  f.stream() << text;
  f.close();
}

void prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw IoError("cannot create output directory " + dir.string());
  }
}

std::string num(double x) { return format_double(x); }

template <typename T>
std::string opt_num(const std::optional<T>& x) {
  return x ? num(static_cast<double>(*x)) : std::string();
}

json stats_json(const std::optional<DistributionStats>& d) {
  if (!d) return nullptr;
  return {{"count", d->count},         {"mean", d->mean},
          {"min", d->min},             {"q1", d->q1},
          {"median", d->median},       {"q3", d->q3},
          {"max", d->max},             {"whisker_low", d->whisker_low},
          {"whisker_high", d->whisker_high}};
}

json counters_json(const AttemptCounters& c) {
  return {{"generations", c.generations},
          {"swaps", c.swaps},
          {"swap_failures", c.swap_failures},
          {"purifications", c.purifications},
          {"purification_failures", c.purification_failures},
          {"delta_aborts", c.delta_aborts},
          {"feasibility_aborts", c.feasibility_aborts},
          {"expirations", c.expirations}};
}

json gain_json(const GainStats& g) {
  return {{"count", g.count},
          {"fraction_positive", g.fraction_positive},
          {"mean", g.mean},
          {"distribution", stats_json(g.distribution)}};
}

json summary_json(const MetricsSummary& m) {
  return {{"trials", m.trials},
          {"delivered", m.delivered},
          {"censored", m.censored},
          {"eta", m.eta},
          {"time", stats_json(m.time)},
          {"fidelity", stats_json(m.fidelity)},
          {"gain", gain_json(m.gain)},
          {"counters", counters_json(m.totals)}};
}

std::string stop_f_th(const StopCondition& stop) {
  return stop.has_threshold() ? num(stop.f_th) : std::string();
}

std::string stop_budget(const StopCondition& stop) {
  return stop.has_budget() ? std::to_string(stop.budget) : std::string();
}

std::optional<double> mean_of(const std::optional<DistributionStats>& d) {
  return d ? std::optional<double>(d->mean) : std::nullopt;
}

StopCondition single_stop(const RunConfig& c, Timestep cutoff) {
  if (c.f_th.size() > 1 || c.budgets.size() > 1) {
    throw ConfigError("simulate takes a single f_th and budget; use sweep for grids");
  }
  if (!c.f_th.empty() && !c.budgets.empty()) return StopCondition::joint(c.f_th[0], c.budgets[0]);
  if (!c.f_th.empty()) return StopCondition::fidelity(c.f_th[0]);
  if (!c.budgets.empty()) return StopCondition::time(c.budgets[0]);
  return StopCondition::time(cutoff);
}

void write_event_rows(std::ostream& out, std::size_t trial, const EventLog& log) {
  for (const Event& e : log) {
    out << trial << ',' << e.t << ',' << to_string(e.kind) << ',' << e.pair << ','
        << e.input_a << ',' << e.input_b << ',' << e.left_node << ',' << e.right_node << ','
        << e.inputs_at << ',' << num(e.fidelity) << '\n';
  }
}

std::vector<CellResult> grid_cells(const RunConfig& c) {
  if (c.f_th.empty() && c.budgets.empty()) {
    throw ConfigError("invalid configuration\n  run.f_th: set f_th values, budgets, or both");
  }
  return run_grid(experiment_spec(c));
}

bool same_cell(const CellResult& a, const CellResult& b) {
  return a.hops == b.hops && a.stop.mode == b.stop.mode && a.stop.f_th == b.stop.f_th &&
         a.stop.budget == b.stop.budget;
}

std::string diff(const std::optional<double>& a, const std::optional<double>& b) {
  return a && b ? num(*a - *b) : std::string();
}

}  // namespace

std::string analyze(const RunConfig& c) {
  prepare_dir(c.out);

  OutputFile table(c.out, "delta-table.csv");
  table.stream() << "f,delta_superior,delta_inferior,f2_min,f1_max\n";
  for (int i = 501; i <= 999; ++i) {
    const double f = i / 1000.0;
    table.stream() << num(f) << ',' << num(delta_tolerance(f, DeltaRole::kAsSuperior)) << ','
                   << num(delta_tolerance(f, DeltaRole::kAsInferior)) << ',' << num(f2_min(f))
                   << ',' << num(f1_max(f)) << '\n';
  }
  table.close();

  const GainGrid grid = gain_grid(c.grid_res);
  OutputFile gains(c.out, "gain-grid.csv");
  gains.stream() << "f1,f2,gain\n";
  for (std::size_t r = 0; r < grid.resolution; ++r) {
    for (std::size_t col = 0; col < grid.resolution; ++col) {
      gains.stream() << num(grid.axis(r)) << ',' << num(grid.axis(col)) << ','
                     << num(grid.at(r, col)) << '\n';
    }
  }
  gains.close();

  const DeltaMax dm = find_delta_max();
  const json jm = {{"f1_star", dm.f1_star}, {"f2_star", dm.f2_star}, {"delta_max", dm.delta_max}};
  write_text(c.out, "delta-max.json", jm.dump(2) + "\n");
  write_text(c.out, "manifest.json", manifest_json("analyze", c));
  return "delta_max " + num(dm.delta_max) + " at f1 " + num(dm.f1_star) + ", f2 " +
         num(dm.f2_star);
}

std::string simulate(const RunConfig& c) {
  if (c.policies.size() != 1 || c.hops.size() != 1) {
    throw ConfigError("simulate runs one policy on one hop count; use compare or sweep");
  }
  const PolicyKind policy = c.policies.front();
  const StopCondition stop = single_stop(c, c.chain.cutoff);
  if (policy == PolicyKind::kDeltaPurify && !stop.has_threshold()) {
    throw ConfigError("invalid configuration\n  run.f_th: delta-purify needs a threshold");
  }
  prepare_dir(c.out);

  const std::string label = stream_label(c.chain);
  std::vector<TrialOutcome> outcomes;
  outcomes.reserve(c.trials);
  OutputFile events(c.out, "events.csv");
  if (c.debug_events) events.stream() << "trial,t,kind,pair,input_a,input_b,left,right,inputs_at,fidelity\n";
  for (std::size_t i = 0; i < c.trials; ++i) {
    RngStream rng(c.seed, label, i);
    EventLog log;
    outcomes.push_back(
        run_policy(policy, c.chain, stop, rng, c.options, c.debug_events ? &log : nullptr));
    if (c.debug_events) write_event_rows(events.stream(), i, log);
  }
  if (c.debug_events) events.close();

  OutputFile trials(c.out, "trials.csv");
  trials.stream() << "trial_index,delivered,t_deliver,f_deliver,generations,swaps,purifications,"
                     "delta_aborts,feasibility_aborts\n";
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const TrialOutcome& o = outcomes[i];
    trials.stream() << i << ',' << (o.delivered ? 1 : 0) << ','
                    << (o.delivered ? std::to_string(o.t_deliver) : "") << ','
                    << (o.delivered ? num(o.f_deliver) : "") << ',' << o.counters.generations
                    << ',' << o.counters.swaps << ',' << o.counters.purifications << ','
                    << o.counters.delta_aborts << ',' << o.counters.feasibility_aborts << '\n';
  }
  trials.close();

  if (c.gain_log) {
    OutputFile gains(c.out, "gains.csv");
    gains.stream() << "trial_index,gain\n";
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
      for (const double g : outcomes[i].gain_samples) gains.stream() << i << ',' << num(g) << '\n';
    }
    gains.close();
  }

  const MetricsSummary m = aggregate_metrics(outcomes);
  json summary = summary_json(m);
  summary["policy"] = std::string(to_string(policy));
  summary["hops"] = c.chain.hops;
  summary["f_th"] = stop.has_threshold() ? json(stop.f_th) : json(nullptr);
  summary["budget"] = stop.has_budget() ? json(stop.budget) : json(nullptr);
  write_text(c.out, "summary.json", summary.dump(2) + "\n");
  write_text(c.out, "manifest.json", manifest_json("simulate", c));
  return std::string(to_string(policy)) + ": eta " + num(m.eta) + " over " +
         std::to_string(m.trials) + " trials";
}

std::string sweep(const RunConfig& c) {
  prepare_dir(c.out);
  const auto cells = grid_cells(c);
  OutputFile heat(c.out, "heatmap.csv");
  heat.stream() << "policy,f_th,budget_n,hops,eta,mean_time,mean_fidelity,censored_fraction\n";
  for (const CellResult& cell : cells) {
    const MetricsSummary& m = cell.summary;
    heat.stream() << to_string(cell.policy) << ',' << stop_f_th(cell.stop) << ','
                  << stop_budget(cell.stop) << ',' << cell.hops << ',' << num(m.eta) << ','
                  << opt_num(mean_of(m.time)) << ',' << opt_num(mean_of(m.fidelity)) << ','
                  << num(static_cast<double>(m.censored) / static_cast<double>(m.trials))
                  << '\n';
  }
  heat.close();
  write_text(c.out, "manifest.json", manifest_json("sweep", c));
  return std::to_string(cells.size()) + " cells";
}

std::string compare(const RunConfig& c) {
  if (c.policies.size() < 2) {
    throw ConfigError("compare needs at least two policies in run.policy");
  }
  prepare_dir(c.out);
  const auto cells = grid_cells(c);

  OutputFile table(c.out, "compare.csv");
  table.stream() << "hops,f_th,budget_n,policy,trials,delivered,eta,mean_time,median_time,"
                    "q1_time,q3_time,mean_fidelity,median_fidelity,censored_fraction\n";
  for (const CellResult& cell : cells) {
    const MetricsSummary& m = cell.summary;
    auto field = [](const std::optional<DistributionStats>& d, double DistributionStats::*f) {
      return d ? num((*d).*f) : std::string();
    };
    table.stream() << cell.hops << ',' << stop_f_th(cell.stop) << ',' << stop_budget(cell.stop)
                   << ',' << to_string(cell.policy) << ',' << m.trials << ',' << m.delivered
                   << ',' << num(m.eta) << ',' << field(m.time, &DistributionStats::mean) << ','
                   << field(m.time, &DistributionStats::median) << ','
                   << field(m.time, &DistributionStats::q1) << ','
                   << field(m.time, &DistributionStats::q3) << ','
                   << field(m.fidelity, &DistributionStats::mean) << ','
                   << field(m.fidelity, &DistributionStats::median) << ','
                   << num(static_cast<double>(m.censored) / static_cast<double>(m.trials))
                   << '\n';
  }
  table.close();

  OutputFile diffs(c.out, "compare-diff.csv");
  diffs.stream() << "hops,f_th,budget_n,policy_a,policy_b,mean_time_diff,mean_fidelity_diff\n";
  for (std::size_t begin = 0; begin < cells.size();) {
    std::size_t end = begin + 1;
    while (end < cells.size() && same_cell(cells[begin], cells[end])) ++end;
    for (std::size_t a = begin; a < end; ++a) {
      for (std::size_t b = a + 1; b < end; ++b) {
        const MetricsSummary& ma = cells[a].summary;
        const MetricsSummary& mb = cells[b].summary;
        diffs.stream() << cells[a].hops << ',' << stop_f_th(cells[a].stop) << ','
                       << stop_budget(cells[a].stop) << ',' << to_string(cells[a].policy) << ','
                       << to_string(cells[b].policy) << ','
                       << diff(mean_of(ma.time), mean_of(mb.time)) << ','
                       << diff(mean_of(ma.fidelity), mean_of(mb.fidelity)) << '\n';
      }
    }
    begin = end;
  }
  diffs.close();
  write_text(c.out, "manifest.json", manifest_json("compare", c));
  return std::to_string(cells.size()) + " cells compared";
}

std::string calibrate(const RunConfig& c) {
  prepare_dir(c.out);
  CalibrationSpec spec;
  spec.params = c.chain;
  spec.f0 = c.chain.link_f0.front();
  spec.alt_f0 = c.calibrate.alt_f0;
  spec.t_coh_min = c.calibrate.t_coh_min;
  spec.t_coh_max = c.calibrate.t_coh_max;
  spec.points = c.calibrate.points;
  spec.target = c.calibrate.target;
  spec.tolerance = c.calibrate.tolerance;
  spec.trials = c.trials;
  spec.master_seed = c.seed;
  const CalibrationResult r = calibrate_t_coh(spec);

  OutputFile table(c.out, "calibration.csv");
  table.stream() << "stage,t_coh,memory,f0,samples,fraction_positive,mean_gain\n";
  auto row = [&](const char* stage, const CalibrationPoint& p) {
    table.stream() << stage << ',' << num(p.t_coh) << ',' << to_string(p.kind) << ','
                   << num(p.f0) << ',' << p.stats.count << ',' << num(p.stats.fraction_positive)
                   << ',' << num(p.stats.mean) << '\n';
  };
  for (const auto& p : r.trace) row("search", p);
  for (const auto* p : {&r.emm, &r.lmm, &r.emm_alt, &r.lmm_alt}) row("final", *p);
  table.close();

  auto point = [](const CalibrationPoint& p) {
    return json{{"f0", p.f0},
                {"samples", p.stats.count},
                {"fraction_positive", p.stats.fraction_positive},
                {"mean_gain", p.stats.mean}};
  };
  const json doc = {
      {"t_coh", r.t_coh},
      {"target", spec.target},
      {"tolerance", spec.tolerance},
      {"within_tolerance", r.within_tolerance},
      {"emm", point(r.emm)},
      {"lmm", point(r.lmm)},
      {"emm_alt_f0", point(r.emm_alt)},
      {"lmm_alt_f0", point(r.lmm_alt)},
      {"lmm_exceeds_emm", r.lmm.stats.fraction_positive > r.emm.stats.fraction_positive},
  };
  write_text(c.out, "calibration.json", doc.dump(2) + "\n");
  write_text(c.out, "manifest.json", manifest_json("calibrate", c));
  std::string report = "t_coh " + num(r.t_coh) + ": emm fraction " +
                       num(r.emm.stats.fraction_positive) + ", lmm fraction " +
                       num(r.lmm.stats.fraction_positive);
  if (!r.within_tolerance) report += " (target not reached)";
  return report;
}

namespace {

struct FlagBinding {
  const char* flag;
  const char* key;
  const char* help;
};

constexpr FlagBinding kFlags[] = {
    {"--hops", "chain.hops", "hop count(s), comma-separated"},
    {"--f0", "chain.f0", "link fidelity, or one per link"},
    {"--pe", "chain.pe", "generation probability per timestep"},
    {"--ps", "chain.ps", "swap success probability"},
    {"--cutoff", "chain.cutoff", "timestep cap per trial"},
    {"--generation-mode", "chain.generation_mode", "sequential or parallel"},
    {"--memory", "memory.kind", "cmm, lmm or emm"},
    {"--t-coh", "memory.t_coh", "coherence time in timesteps"},
    {"--cutoff-tau", "memory.cutoff_tau", "cmm storage lifetime"},
    {"--policy", "run.policy", "no-pur, sp, ps, delta-purify (comma-separated)"},
    {"--trials", "run.trials", "trials per cell"},
    {"--seed", "run.seed", "master seed"},
    {"--f-th", "run.f_th", "fidelity threshold(s)"},
    {"--budget", "run.budget", "timestep budget(s)"},
    {"--out", "run.out", "output directory"},
    {"--grid-res", "analyze.grid_res", "gain grid resolution"},
};

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Entanglement purification on repeater chains"};
  app.require_subcommand(1);

  std::string config_path;
  std::map<std::string, std::string> flag_values;
  bool debug_events = false;
  bool gain_log = false;
  bool smoke = false;

  const std::pair<const char*, const char*> commands[] = {
      {"analyze", "tolerance tables, gain grid and delta_max"},
      {"simulate", "one policy, per-trial results"},
      {"sweep", "delivery rate over f_th, budget and hop grids"},
      {"compare", "several policies on common random numbers"},
      {"calibrate", "search t_coh for a target EMM positive-gain fraction"},
  };
  for (const auto& [name, description] : commands) {
    CLI::App* sub = app.add_subcommand(name, description);
    sub->add_option("--config", config_path, "INI file or manifest.json");
    for (const FlagBinding& f : kFlags) sub->add_option(f.flag, flag_values[f.key], f.help);
    sub->add_flag("--debug-events", debug_events, "write events.csv (simulate)");
    sub->add_flag("--gain-log", gain_log, "write gains.csv (simulate)");
    sub->add_flag("--smoke", smoke, "1000 trials unless --trials is given");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  CLI::App* chosen = app.get_subcommands().front();
  try {
    Settings settings;
    if (!config_path.empty()) settings = load_config_file(config_path);
    for (const FlagBinding& f : kFlags) {
      if (chosen->count(f.flag) > 0) settings[f.key] = flag_values[f.key];
    }
    if (smoke && chosen->count("--trials") == 0) settings["run.trials"] = "1000";
    if (debug_events) settings["run.debug_events"] = "true";
    if (gain_log) settings["run.gain_log"] = "true";

    const RunConfig config = resolve_config(settings);
    const std::string name = chosen->get_name();
    std::string report;
    if (name == "analyze") report = analyze(config);
    if (name == "simulate") report = simulate(config);
    if (name == "sweep") report = sweep(config);
    if (name == "compare") report = compare(config);
    if (name == "calibrate") report = calibrate(config);
    out << report << "\n";
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}

}  // namespace purisim::cli
