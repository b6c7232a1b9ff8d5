#include "purisim/experiments.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace purisim {

double nearest_rank(std::span<const double> sorted, double p) {
  if (sorted.empty()) {
    throw std::invalid_argument("quantile of an empty sample");
  }
  if (p <= 0.0) return sorted.front();
  const auto n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(p * n));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

std::optional<DistributionStats> describe(std::vector<double> samples) {
  if (samples.empty()) return std::nullopt;
  DistributionStats s;
  s.count = samples.size();
  double sum = 0.0;
  for (const double x : samples) sum += x;
  s.mean = sum / static_cast<double>(samples.size());

  std::sort(samples.begin(), samples.end());
  s.min = samples.front();
  s.max = samples.back();
  s.q1 = nearest_rank(samples, 0.25);
  s.median = nearest_rank(samples, 0.5);
  s.q3 = nearest_rank(samples, 0.75);
  const double iqr = s.q3 - s.q1;
  const double lo = s.q1 - 1.5 * iqr;
  const double hi = s.q3 + 1.5 * iqr;
  s.whisker_low = *std::lower_bound(samples.begin(), samples.end(), lo);
  s.whisker_high = *(std::upper_bound(samples.begin(), samples.end(), hi) - 1);
  return s;
}

GainStats summarize_gains(std::span<const double> gains) {
  GainStats g;
  g.count = gains.size();
  if (gains.empty()) return g;
  std::size_t positive = 0;
  double sum = 0.0;
  for (const double x : gains) {
    if (x > 0.0) ++positive;
    sum += x;
  }
  g.fraction_positive = static_cast<double>(positive) / static_cast<double>(gains.size());
  g.mean = sum / static_cast<double>(gains.size());
  g.distribution = describe(std::vector<double>(gains.begin(), gains.end()));
  return g;
}

MetricsSummary aggregate_metrics(std::span<const TrialOutcome> outcomes) {
  if (outcomes.empty()) {
    throw std::invalid_argument("cannot summarise an empty trial stream");
  }
  MetricsSummary m;
  m.trials = outcomes.size();
  std::vector<double> times;
  std::vector<double> fidelities;
  std::vector<double> gains;
  for (const TrialOutcome& o : outcomes) {
    m.totals += o.counters;
    gains.insert(gains.end(), o.gain_samples.begin(), o.gain_samples.end());
    if (!o.delivered) continue;
    ++m.delivered;
    times.push_back(static_cast<double>(o.t_deliver));
    fidelities.push_back(o.f_deliver);
  }
  m.censored = m.trials - m.delivered;
  m.eta = static_cast<double>(m.delivered) / static_cast<double>(m.trials);
  m.time = describe(std::move(times));
  m.fidelity = describe(std::move(fidelities));
  m.gain = summarize_gains(gains);
  return m;
}

std::string stream_label(const ChainParams& params) {
  return "hops=" + std::to_string(params.hops);
}

std::vector<TrialOutcome> run_trials(PolicyKind policy, const ChainParams& params,
                                     const StopCondition& stop, std::size_t trials,
                                     std::uint64_t master_seed, const PolicyOptions& options) {
  params.validate();
  stop.validate();
  const std::string label = stream_label(params);
  std::vector<TrialOutcome> outcomes;
  outcomes.reserve(trials);
  for (std::size_t i = 0; i < trials; ++i) {
    RngStream rng(master_seed, label, i);
    outcomes.push_back(run_policy(policy, params, stop, rng, options));
  }
  return outcomes;
}

void ExperimentSpec::validate() const {
  if (trials < 1) {
    throw std::invalid_argument("trials must be at least 1");
  }
  for (const int h : hops) {
    if (h < 1) throw std::invalid_argument("hop counts must be at least 1");
  }
  params.validate();
}

namespace {

ChainParams with_hops(const ChainParams& base, int hops) {
  ChainParams p = base;
  if (p.hops != hops) {
    // Links are uniform unless the template spells out every hop.
    const Fidelity f0 = base.link_f0.empty() ? 0.99 : base.link_f0.front();
    p.hops = hops;
    p.link_f0.assign(static_cast<std::size_t>(hops), f0);
  }
  p.validate();
  return p;
}

CellResult run_cell(const ExperimentSpec& spec, PolicyKind policy, const ChainParams& params,
                    const StopCondition& stop) {
  CellResult cell;
  cell.policy = policy;
  cell.hops = params.hops;
  cell.stop = stop;
  cell.outcomes = run_trials(policy, params, stop, spec.trials, spec.master_seed, spec.options);
  cell.summary = aggregate_metrics(cell.outcomes);
  return cell;
}

std::vector<int> hop_axis(const ExperimentSpec& spec) {
  return spec.hops.empty() ? std::vector<int>{spec.params.hops} : spec.hops;
}

std::vector<CellResult> run_fidelity_only(const ExperimentSpec& spec) {
  std::vector<CellResult> cells;
  for (const int h : hop_axis(spec)) {
    const ChainParams params = with_hops(spec.params, h);
    for (const Fidelity f : spec.f_th) {
      for (const PolicyKind policy : spec.policies) {
        cells.push_back(run_cell(spec, policy, params, StopCondition::fidelity(f)));
      }
    }
  }
  return cells;
}

std::vector<CellResult> run_time_only(const ExperimentSpec& spec) {
  std::vector<CellResult> cells;
  for (const int h : hop_axis(spec)) {
    const ChainParams params = with_hops(spec.params, h);
    for (const Timestep n : spec.budgets) {
      for (const PolicyKind policy : spec.policies) {
        if (policy == PolicyKind::kDeltaPurify) continue;  // needs a threshold
        cells.push_back(run_cell(spec, policy, params, StopCondition::time(n)));
      }
    }
  }
  return cells;
}

}  // namespace

std::vector<CellResult> run_grid(const ExperimentSpec& spec) {
  spec.validate();
  if (spec.policies.empty()) {
    throw std::invalid_argument("experiment needs at least one policy");
  }
  if (spec.f_th.empty() && spec.budgets.empty()) {
    throw std::invalid_argument("experiment needs f_th values, budgets, or both");
  }
  if (spec.budgets.empty()) return run_fidelity_only(spec);
  if (spec.f_th.empty()) return run_time_only(spec);

  std::vector<CellResult> cells;
  for (const int h : hop_axis(spec)) {
    const ChainParams params = with_hops(spec.params, h);
    for (const Fidelity f : spec.f_th) {
      for (const Timestep n : spec.budgets) {
        for (const PolicyKind policy : spec.policies) {
          cells.push_back(run_cell(spec, policy, params, StopCondition::joint(f, n)));
        }
      }
    }
  }
  return cells;
}

std::vector<GainReport> gain_distribution_experiment(const ExperimentSpec& spec) {
  spec.validate();
  std::vector<MemoryModel> memories = spec.memories;
  if (memories.empty()) memories.push_back(spec.params.memory);

  PolicyOptions options = spec.options;
  options.max_purification_attempts = 1;

  std::vector<GainReport> reports;
  for (const MemoryModel& memory : memories) {
    ChainParams params = spec.params;
    params.memory = memory;
    const auto outcomes = run_trials(PolicyKind::kSwapPurify, params,
                                     StopCondition::time(params.cutoff), spec.trials,
                                     spec.master_seed, options);
    GainReport report;
    report.memory = memory;
    for (const TrialOutcome& o : outcomes) {
      report.samples.insert(report.samples.end(), o.gain_samples.begin(), o.gain_samples.end());
    }
    report.stats = summarize_gains(report.samples);
    reports.push_back(std::move(report));
  }
  return reports;
}

GainStats gain_fraction(const ChainParams& params, const MemoryModel& memory, Fidelity f0,
                        std::size_t trials, std::uint64_t master_seed) {
  ExperimentSpec spec;
  spec.params = params;
  spec.params.link_f0.assign(static_cast<std::size_t>(params.hops), f0);
  spec.memories = {memory};
  spec.trials = trials;
  spec.master_seed = master_seed;
  return gain_distribution_experiment(spec).front().stats;
}

void CalibrationSpec::validate() const {
  params.validate();
  if (!(t_coh_min > 0.0) || !(t_coh_max > t_coh_min)) {
    throw std::invalid_argument("calibration needs 0 < t_coh_min < t_coh_max");
  }
  if (points < 2) throw std::invalid_argument("calibration needs at least 2 grid points");
  if (!(target > 0.0 && target < 1.0)) throw std::invalid_argument("target must lie in (0, 1)");
  if (!(tolerance > 0.0)) throw std::invalid_argument("tolerance must be positive");
  if (!(f0 > 0.5 && f0 <= 1.0) || !(alt_f0 > 0.5 && alt_f0 <= 1.0)) {
    throw std::invalid_argument("calibration fidelities must lie in (0.5, 1]");
  }
  if (trials < 1) throw std::invalid_argument("trials must be at least 1");
}

CalibrationResult calibrate_t_coh(const CalibrationSpec& spec) {
  spec.validate();
  CalibrationResult result;
  auto evaluate = [&](double t_coh, MemoryModel memory, Fidelity f0) {
    CalibrationPoint point;
    point.t_coh = t_coh;
    point.kind = memory.kind;
    point.f0 = f0;
    point.stats = gain_fraction(spec.params, memory, f0, spec.trials, spec.master_seed);
    return point;
  };
  auto emm_at = [&](double t_coh) {
    result.trace.push_back(evaluate(t_coh, MemoryModel::exponential(t_coh), spec.f0));
    return result.trace.back();
  };
  auto miss = [&](const CalibrationPoint& p) {
    return std::abs(p.stats.fraction_positive - spec.target);
  };

  std::vector<CalibrationPoint> grid;
  const double step = (spec.t_coh_max - spec.t_coh_min) / (spec.points - 1);
  for (int i = 0; i < spec.points; ++i) grid.push_back(emm_at(spec.t_coh_min + step * i));

  CalibrationPoint best = grid.front();
  for (const auto& p : grid) {
    if (miss(p) < miss(best)) best = p;
  }
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    CalibrationPoint lo = grid[i];
    CalibrationPoint hi = grid[i + 1];
    if (lo.stats.fraction_positive > spec.target || hi.stats.fraction_positive < spec.target) {
      continue;
    }
    for (int iter = 0; iter < 40 && miss(best) > spec.tolerance / 4 &&
                       hi.t_coh - lo.t_coh > 1e-3;
         ++iter) {
      const CalibrationPoint mid = emm_at(0.5 * (lo.t_coh + hi.t_coh));
      if (miss(mid) < miss(best)) best = mid;
      (mid.stats.fraction_positive < spec.target ? lo : hi) = mid;
    }
    break;
  }

  result.t_coh = best.t_coh;
  result.within_tolerance = miss(best) <= spec.tolerance;
  result.emm = best;
  result.lmm = evaluate(best.t_coh, MemoryModel::linear(best.t_coh), spec.f0);
  result.emm_alt = evaluate(best.t_coh, MemoryModel::exponential(best.t_coh), spec.alt_f0);
  result.lmm_alt = evaluate(best.t_coh, MemoryModel::linear(best.t_coh), spec.alt_f0);
  return result;
}

std::vector<CellResult> objective1_run(const ExperimentSpec& spec) {
  if (spec.f_th.empty()) {
    throw std::invalid_argument("objective 1 needs at least one f_th value");
  }
  ExperimentSpec s = spec;
  s.budgets.clear();
  return run_grid(s);
}

std::vector<CellResult> objective2_run(const ExperimentSpec& spec) {
  if (spec.budgets.empty()) {
    throw std::invalid_argument("objective 2 needs at least one budget");
  }
  ExperimentSpec s = spec;
  s.f_th.clear();
  return run_grid(s);
}

std::vector<CellResult> objective3_sweep(const ExperimentSpec& spec) {
  if (spec.f_th.empty() || spec.budgets.empty()) {
    throw std::invalid_argument("objective 3 needs both f_th values and budgets");
  }
  return run_grid(spec);
}

std::vector<CellResult> scalability_sweep(const ExperimentSpec& spec) {
  if (spec.hops.empty()) {
    throw std::invalid_argument("scalability sweep needs a hop axis");
  }
  std::vector<CellResult> cells;
  if (!spec.f_th.empty()) {
    auto part = objective1_run(spec);
    cells.insert(cells.end(), std::make_move_iterator(part.begin()),
                 std::make_move_iterator(part.end()));
  }
  if (!spec.budgets.empty()) {
    auto part = objective2_run(spec);
    cells.insert(cells.end(), std::make_move_iterator(part.begin()),
                 std::make_move_iterator(part.end()));
  }
  if (cells.empty()) {
    throw std::invalid_argument("scalability sweep needs f_th values or budgets");
  }
  return cells;
}

std::vector<CellResult> delta_purify_eval(const ExperimentSpec& spec) {
  ExperimentSpec s = spec;
  s.policies = {PolicyKind::kNoPur, PolicyKind::kSwapPurify, PolicyKind::kDeltaPurify};
  return objective1_run(s);
}

}  // namespace purisim
