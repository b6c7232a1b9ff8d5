#pragma once

// Monte Carlo harness: runs policies over grids of operating points and
// reduces trial streams into deterministic summaries.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "purisim/policies.h"

namespace purisim {

/// Sample statistics with nearest-rank quantiles on the sorted sample.
struct DistributionStats {
  std::size_t count = 0;
  double mean = 0.0;
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
  double whisker_low = 0.0;   // smallest sample >= q1 - 1.5 IQR
  double whisker_high = 0.0;  // largest sample <= q3 + 1.5 IQR

  bool operator==(const DistributionStats&) const = default;
};

/// Nearest-rank quantile: the ceil(p * n)-th smallest sample (first for p = 0).
double nearest_rank(std::span<const double> sorted, double p);

/// Empty input gives nullopt. Summation runs in input order.
std::optional<DistributionStats> describe(std::vector<double> samples);

struct GainStats {
  std::size_t count = 0;
  double fraction_positive = 0.0;
  double mean = 0.0;
  std::optional<DistributionStats> distribution;

  bool operator==(const GainStats&) const = default;
};

GainStats summarize_gains(std::span<const double> gains);

struct MetricsSummary {
  std::size_t trials = 0;
  std::size_t delivered = 0;
  std::size_t censored = 0;
  double eta = 0.0;
  std::optional<DistributionStats> time;
  std::optional<DistributionStats> fidelity;
  GainStats gain;
  AttemptCounters totals;

  bool operator==(const MetricsSummary&) const = default;
};

/// Throws std::invalid_argument on an empty stream.
MetricsSummary aggregate_metrics(std::span<const TrialOutcome> outcomes);

/// Seeds of trial i in a cell come from (master seed, stream label, i). Cells
/// that differ only in policy or stop condition share a label, so policies
/// are compared on common random numbers and any single trial can be replayed.
std::string stream_label(const ChainParams& params);

std::vector<TrialOutcome> run_trials(PolicyKind policy, const ChainParams& params,
                                     const StopCondition& stop, std::size_t trials,
                                     std::uint64_t master_seed,
                                     const PolicyOptions& options = {});

struct ExperimentSpec {
  std::vector<PolicyKind> policies;
  ChainParams params;                       // template; hops overridden per cell
  std::vector<Fidelity> f_th;               // empty: no fidelity constraint
  std::vector<Timestep> budgets;            // empty: no time constraint
  std::vector<int> hops;                    // empty: params.hops only
  std::vector<MemoryModel> memories;        // gain experiment only
  std::size_t trials = 100000;
  std::uint64_t master_seed = 1;
  PolicyOptions options;

  void validate() const;
};

struct CellResult {
  PolicyKind policy = PolicyKind::kNoPur;
  int hops = 0;
  StopCondition stop;
  MetricsSummary summary;
  std::vector<TrialOutcome> outcomes;
};

/// Every (hops, f_th, budget, policy) cell of the spec, in that nesting
/// order. At least one of f_th or budgets must be non-empty.
std::vector<CellResult> run_grid(const ExperimentSpec& spec);

struct GainReport {
  MemoryModel memory;
  std::vector<double> samples;
  GainStats stats;
};

/// Swap-Purify gain distribution, one purification attempt per trial.
std::vector<GainReport> gain_distribution_experiment(const ExperimentSpec& spec);

/// Positive-gain statistics of the Swap-Purify gain experiment for one
/// memory model, with every link at fidelity `f0`.
GainStats gain_fraction(const ChainParams& params, const MemoryModel& memory, Fidelity f0,
                        std::size_t trials, std::uint64_t master_seed);

struct CalibrationSpec {
  ChainParams params;  // operating point; memory and link fidelities are replaced
  Fidelity f0 = 0.99;
  Fidelity alt_f0 = 0.9;
  double t_coh_min = 10.0;
  double t_coh_max = 200.0;
  int points = 8;
  double target = 0.143;     // EMM positive-gain fraction sought
  double tolerance = 0.02;
  std::size_t trials = 100000;
  std::uint64_t master_seed = 1;

  void validate() const;
};

struct CalibrationPoint {
  double t_coh = 0.0;
  MemoryModel::Kind kind = MemoryModel::Kind::kExponential;
  Fidelity f0 = 0.0;
  GainStats stats;
};

struct CalibrationResult {
  double t_coh = 0.0;
  bool within_tolerance = false;
  CalibrationPoint emm;
  CalibrationPoint lmm;
  CalibrationPoint emm_alt;  // alt_f0 links
  CalibrationPoint lmm_alt;
  std::vector<CalibrationPoint> trace;  // every EMM evaluation, in order
};

/// Scans t_coh on a uniform grid for the EMM fraction closest to `target`,
/// bisects inside the first bracketing interval, then evaluates LMM and the
/// alternative F0 at the chosen t_coh.
CalibrationResult calibrate_t_coh(const CalibrationSpec& spec);

/// Fidelity-constrained delivery times per (policy, f_th).
std::vector<CellResult> objective1_run(const ExperimentSpec& spec);
/// Time-constrained fidelities and delivery rate per (policy, budget).
std::vector<CellResult> objective2_run(const ExperimentSpec& spec);
/// Delivery rate over the (f_th, budget) plane per policy.
std::vector<CellResult> objective3_sweep(const ExperimentSpec& spec);
/// Objective-1 and objective-2 metrics against hop count.
std::vector<CellResult> scalability_sweep(const ExperimentSpec& spec);
/// No-Pur, Swap-Purify and DeltaPurify under fidelity constraints.
std::vector<CellResult> delta_purify_eval(const ExperimentSpec& spec);

}  // namespace purisim
