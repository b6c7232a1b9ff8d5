#pragma once

// Discrete-time simulation of an n-hop repeater chain.
//
// Timing conventions:
//  * Timestep t is one clock cycle. Every elementary link without a live pair
//    makes one Bernoulli(p_e) generation attempt per timestep.
//  * Swaps are instantaneous and happen in the same timestep as the herald
//    that enabled them.
//  * A purification attempt occupies one full timestep.
//  * A pair heralded in timestep t carries t_herald = t. An episode that
//    finishes in timestep t after starting at timestep s took t - s + 1
//    timesteps.
//
// Pairs are stored with their herald fidelity and time; decoherence is
// evaluated lazily from the elapsed time whenever the pair is used.

#include <cstdint>
#include <optional>
#include <ostream>
#include <string_view>
#include <vector>

#include "purisim/calculus.h"
#include "purisim/memory_model.h"
#include "purisim/rng.h"

namespace purisim {

using PairId = std::uint64_t;
inline constexpr PairId kNoPair = 0;

struct EntangledPair {
  int left_node = 0;
  int right_node = 0;
  Fidelity f_herald = 1.0;
  Timestep t_herald = 0;
  PairId id = kNoPair;
};

enum class GenerationMode {
  kSequential,  // the two end-to-end pairs of a purification share resources
  kParallel,    // doubled resources, both pairs generated concurrently
};

std::string_view to_string(GenerationMode mode);
GenerationMode parse_generation_mode(std::string_view name);

struct ChainParams {
  int hops = 2;
  std::vector<Fidelity> link_f0 = {0.99, 0.99};
  double p_e = 0.1;
  double p_s = 0.9;
  MemoryModel memory = MemoryModel::constant();
  Timestep cutoff = 10000;
  GenerationMode generation_mode = GenerationMode::kSequential;
  std::uint64_t seed = 1;
  // Stored pairs whose current fidelity falls below this are dropped.
  std::optional<Fidelity> discard_below;

  static ChainParams uniform(int hops, Fidelity f0, double p_e, double p_s,
                             MemoryModel memory);

  /// Throws std::invalid_argument naming the first violated constraint.
  void validate() const;

  /// Swap-only ceiling on end-to-end fidelity for these links.
  Fidelity fidelity_limit() const { return chain_fidelity_limit(link_f0); }
};

struct AttemptCounters {
  std::uint64_t generations = 0;  // successful link heralds
  std::uint64_t swaps = 0;
  std::uint64_t swap_failures = 0;
  std::uint64_t purifications = 0;
  std::uint64_t purification_failures = 0;
  std::uint64_t delta_aborts = 0;
  std::uint64_t feasibility_aborts = 0;
  std::uint64_t expirations = 0;

  AttemptCounters& operator+=(const AttemptCounters& other);
  bool operator==(const AttemptCounters&) const = default;
};

enum class EventKind {
  kGenerate,
  kSwap,
  kSwapFail,
  kPurify,
  kPurifyFail,
  kExpire,
  kDiscard,
  kDeliver,
};

std::string_view to_string(EventKind kind);

/// One line of the per-trial event log. `inputs_at` is the timestep at which
/// the input pairs' decay was evaluated; it differs from `t` only for
/// purification, whose protocol step comes after the inputs were observed.
struct Event {
  Timestep t = 0;
  EventKind kind = EventKind::kGenerate;
  PairId pair = kNoPair;
  PairId input_a = kNoPair;
  PairId input_b = kNoPair;
  int left_node = 0;
  int right_node = 0;
  Timestep inputs_at = 0;
  Fidelity fidelity = 0.0;

  bool operator==(const Event&) const = default;
};

using EventLog = std::vector<Event>;

void write_event_log(std::ostream& out, const EventLog& log);

/// Mutable per-trial state shared by the operations of one trial.
class TrialContext {
 public:
  TrialContext(const ChainParams& params, RngStream& rng, EventLog* log = nullptr)
      : params_(params), rng_(rng), log_(log) {}

  const ChainParams& params() const { return params_; }
  RngStream& rng() { return rng_; }
  AttemptCounters& counters() { return counters_; }
  const AttemptCounters& counters() const { return counters_; }
  std::vector<double>& gain_samples() { return gain_samples_; }

  PairId next_pair_id() { return ++last_id_; }
  bool logging() const { return log_ != nullptr; }
  void record(const Event& event) {
    if (log_ != nullptr) log_->push_back(event);
  }

 private:
  const ChainParams& params_;
  RngStream& rng_;
  EventLog* log_;
  AttemptCounters counters_;
  std::vector<double> gain_samples_;
  PairId last_id_ = kNoPair;
};

/// Fidelity of `pair` observed at `now`, or empty if the pair expired.
std::optional<Fidelity> current_fidelity(const EntangledPair& pair, Timestep now,
                                         const MemoryModel& model);

/// One Bernoulli(p_e) generation attempt on elementary link `link`.
std::optional<EntangledPair> attempt_generation(int link, Timestep now, TrialContext& ctx);

/// Bell-state measurement joining adjacent spans. Both inputs are consumed;
/// returns the merged pair with probability p_s.
std::optional<EntangledPair> attempt_swap(const EntangledPair& a, const EntangledPair& b,
                                          Timestep now, TrialContext& ctx);

struct PurificationResult {
  bool evaluated = false;  // false when an input had expired
  bool success = false;
  std::optional<EntangledPair> pair;
  Fidelity f1 = 0.0;       // inputs as observed
  Fidelity f2 = 0.0;
  double gain = 0.0;       // deterministic output minus the better input
};

/// BBPSSW on two pairs with identical span. Inputs are observed at
/// `inputs_at`; the protocol runs in timestep `now`, which stamps the output.
/// Both inputs are consumed. An expired input makes the attempt fail without
/// a draw.
PurificationResult attempt_purification(const EntangledPair& a, const EntangledPair& b,
                                        Timestep inputs_at, Timestep now, TrialContext& ctx);

/// Result of one swap-ASAP episode.
struct EndToEnd {
  EntangledPair pair;    // spans the whole chain, t_herald = finishing timestep
  Timestep elapsed = 0;  // timesteps consumed since the episode started
};

/// How elementary links obtain the pair they contribute to swapping.
enum class LinkStage {
  kRaw,       // a freshly generated pair
  kPurified,  // the output of purifying two generated pairs on the link
};

/// Runs swap-ASAP from timestep `start` until an end-to-end pair exists or
/// timestep `deadline` is reached (exclusive). Empty on deadline.
std::optional<EndToEnd> run_swap_asap(TrialContext& ctx, Timestep start, Timestep deadline,
                                      LinkStage stage = LinkStage::kRaw,
                                      bool decay_during_purification = false);

}  // namespace purisim
