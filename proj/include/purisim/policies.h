#pragma once

// End-to-end delivery policies over the repeater chain. Each runner plays one
// trial from timestep 0 and reports what, if anything, was delivered.

#include <optional>
#include <string_view>
#include <vector>

#include "purisim/chain.h"

namespace purisim {

enum class PolicyKind {
  kNoPur,
  kSwapPurify,
  kPurifySwap,
  kDeltaPurify,
};

std::string_view to_string(PolicyKind kind);
PolicyKind parse_policy(std::string_view name);

struct StopCondition {
  enum class Mode {
    kFidelity,  // deliver F >= f_th, no time limit beyond the cutoff
    kTime,      // deliver anything within budget timesteps
    kJoint,     // deliver F >= f_th within budget timesteps
  };

  Mode mode = Mode::kFidelity;
  Fidelity f_th = 0.5;
  Timestep budget = 0;

  static StopCondition fidelity(Fidelity f_th) { return {Mode::kFidelity, f_th, 0}; }
  static StopCondition time(Timestep budget) { return {Mode::kTime, 0.5, budget}; }
  static StopCondition joint(Fidelity f_th, Timestep budget) {
    return {Mode::kJoint, f_th, budget};
  }

  bool has_threshold() const { return mode != Mode::kTime; }
  bool has_budget() const { return mode != Mode::kFidelity; }

  /// Whether a pair of fidelity `f` satisfies the fidelity part.
  bool accepts(Fidelity f) const { return !has_threshold() || f >= f_th; }

  /// Last timestep (exclusive) a trial may use.
  Timestep deadline(Timestep cutoff) const;

  void validate() const;
};

struct TrialOutcome {
  bool delivered = false;
  Timestep t_deliver = 0;  // timesteps from trial start, when delivered
  Fidelity f_deliver = 0.0;
  std::vector<double> gain_samples;  // one per evaluated purification attempt
  AttemptCounters counters;

  bool operator==(const TrialOutcome&) const = default;
};

struct PolicyOptions {
  // Stop a purifying policy after this many evaluated purification attempts.
  std::optional<int> max_purification_attempts;
  // Also decay purification inputs across the purification timestep.
  bool decay_during_purification = false;
};

TrialOutcome run_no_pur(const ChainParams& params, const StopCondition& stop, RngStream& rng,
                        EventLog* log = nullptr);

TrialOutcome run_sp(const ChainParams& params, const StopCondition& stop, RngStream& rng,
                    const PolicyOptions& options = {}, EventLog* log = nullptr);

TrialOutcome run_ps(const ChainParams& params, const StopCondition& stop, RngStream& rng,
                    const PolicyOptions& options = {}, EventLog* log = nullptr);

/// Threshold-aware purification. `stop` must carry a fidelity threshold.
TrialOutcome run_delta_purify(const ChainParams& params, const StopCondition& stop,
                              RngStream& rng, const PolicyOptions& options = {},
                              EventLog* log = nullptr);

inline TrialOutcome run_delta_purify(const ChainParams& params, Fidelity f_th, RngStream& rng) {
  return run_delta_purify(params, StopCondition::fidelity(f_th), rng);
}

TrialOutcome run_policy(PolicyKind kind, const ChainParams& params, const StopCondition& stop,
                        RngStream& rng, const PolicyOptions& options = {},
                        EventLog* log = nullptr);

}  // namespace purisim
