#include "purisim/policies.h"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace purisim {

std::string_view to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kNoPur:
      return "no-pur";
    case PolicyKind::kSwapPurify:
      return "sp";
    case PolicyKind::kPurifySwap:
      return "ps";
    case PolicyKind::kDeltaPurify:
      return "delta-purify";
  }
  return "?";
}

PolicyKind parse_policy(std::string_view name) {
  if (name == "no-pur" || name == "nopur") return PolicyKind::kNoPur;
  if (name == "sp" || name == "swap-purify") return PolicyKind::kSwapPurify;
  if (name == "ps" || name == "purify-swap") return PolicyKind::kPurifySwap;
  if (name == "delta-purify" || name == "deltapurify") return PolicyKind::kDeltaPurify;
  throw std::invalid_argument("unknown policy '" + std::string(name) +
                              "' (expected no-pur, sp, ps or delta-purify)");
}

Timestep StopCondition::deadline(Timestep cutoff) const {
  return has_budget() ? std::min(cutoff, budget) : cutoff;
}

void StopCondition::validate() const {
  if (has_threshold() && !(f_th > 0.5 && f_th <= 1.0)) {
    throw std::invalid_argument("f_th must lie in (0.5, 1]");
  }
  if (has_budget() && budget < 1) {
    throw std::invalid_argument("budget must be at least 1 timestep");
  }
}

namespace {

class PolicyRun {
 public:
  PolicyRun(const ChainParams& params, const StopCondition& stop, RngStream& rng,
            EventLog* log)
      : ctx(params, rng, log), stop(stop), deadline(stop.deadline(params.cutoff)) {
    params.validate();
    stop.validate();
  }

  TrialOutcome deliver(const EntangledPair& pair, Fidelity f) {
    ctx.record({clock - 1, EventKind::kDeliver, pair.id, kNoPair, kNoPair, pair.left_node,
                pair.right_node, clock - 1, f});
    TrialOutcome out = finish();
    out.delivered = true;
    out.t_deliver = clock;
    out.f_deliver = f;
    return out;
  }

  TrialOutcome finish() {
    TrialOutcome out;
    out.counters = ctx.counters();
    out.gain_samples = std::move(ctx.gain_samples());
    return out;
  }

  void discard(const EntangledPair& pair, Timestep t, Fidelity f) {
    ctx.record({t, EventKind::kDiscard, pair.id, kNoPair, kNoPair, pair.left_node,
                pair.right_node, t, f});
  }

  // Next swap-ASAP episode from the current clock.
  std::optional<EndToEnd> episode(LinkStage stage = LinkStage::kRaw, bool decay = false) {
    auto e = run_swap_asap(ctx, clock, deadline, stage, decay);
    if (e) clock = e->pair.t_herald + 1;
    return e;
  }

  TrialContext ctx;
  StopCondition stop;
  Timestep deadline;
  Timestep clock = 0;  // first timestep not yet used
};

// The two end-to-end inputs of a purification, `older` heralded first.
struct PairOfPairs {
  EntangledPair older;
  EntangledPair newer;
};

std::optional<PairOfPairs> generate_two(PolicyRun& run) {
  const ChainParams& params = run.ctx.params();
  if (params.generation_mode == GenerationMode::kSequential) {
    const auto first = run.episode();
    if (!first) return std::nullopt;
    const auto second = run.episode();
    if (!second) return std::nullopt;
    return PairOfPairs{first->pair, second->pair};
  }
  const Timestep start = run.clock;
  const auto a = run_swap_asap(run.ctx, start, run.deadline);
  if (!a) return std::nullopt;
  const auto b = run_swap_asap(run.ctx, start, run.deadline);
  if (!b) return std::nullopt;
  const bool a_first = a->pair.t_herald <= b->pair.t_herald;
  PairOfPairs pp{a_first ? a->pair : b->pair, a_first ? b->pair : a->pair};
  run.clock = pp.newer.t_herald + 1;
  return pp;
}

// Runs the purification step on two end-to-end pairs. Returns the result and
// advances the clock by the one timestep the protocol takes.
PurificationResult purify_end_to_end(PolicyRun& run, const PairOfPairs& pp,
                                     const PolicyOptions& options) {
  const Timestep now = run.clock;
  const Timestep inputs_at = options.decay_during_purification ? now : pp.newer.t_herald;
  ++run.clock;
  PurificationResult r = attempt_purification(pp.older, pp.newer, inputs_at, now, run.ctx);
  if (r.evaluated) run.ctx.gain_samples().push_back(r.gain);
  return r;
}

bool attempts_exhausted(const PolicyOptions& options, int attempts) {
  return options.max_purification_attempts && attempts >= *options.max_purification_attempts;
}

}  // namespace

TrialOutcome run_no_pur(const ChainParams& params, const StopCondition& stop, RngStream& rng,
                        EventLog* log) {
  PolicyRun run(params, stop, rng, log);
  while (run.clock < run.deadline) {
    const auto e = run.episode();
    if (!e) break;
    if (stop.accepts(e->pair.f_herald)) {
      return run.deliver(e->pair, e->pair.f_herald);
    }
    run.discard(e->pair, e->pair.t_herald, e->pair.f_herald);
  }
  return run.finish();
}

TrialOutcome run_sp(const ChainParams& params, const StopCondition& stop, RngStream& rng,
                    const PolicyOptions& options, EventLog* log) {
  PolicyRun run(params, stop, rng, log);
  int attempts = 0;
  while (run.clock < run.deadline) {
    const auto pp = generate_two(run);
    if (!pp || run.clock >= run.deadline) break;
    const PurificationResult r = purify_end_to_end(run, *pp, options);
    ++attempts;
    if (r.success && stop.accepts(r.pair->f_herald)) {
      return run.deliver(*r.pair, r.pair->f_herald);
    }
    if (r.success) run.discard(*r.pair, r.pair->t_herald, r.pair->f_herald);
    if (attempts_exhausted(options, attempts)) break;
  }
  return run.finish();
}

TrialOutcome run_ps(const ChainParams& params, const StopCondition& stop, RngStream& rng,
                    const PolicyOptions& options, EventLog* log) {
  PolicyRun run(params, stop, rng, log);
  while (run.clock < run.deadline) {
    const auto e = run.episode(LinkStage::kPurified, options.decay_during_purification);
    if (!e) break;
    if (stop.accepts(e->pair.f_herald)) {
      return run.deliver(e->pair, e->pair.f_herald);
    }
    run.discard(e->pair, e->pair.t_herald, e->pair.f_herald);
    if (attempts_exhausted(options, static_cast<int>(run.ctx.counters().purifications))) break;
  }
  return run.finish();
}

TrialOutcome run_delta_purify(const ChainParams& params, const StopCondition& stop,
                              RngStream& rng, const PolicyOptions& options, EventLog* log) {
  if (!stop.has_threshold()) {
    throw std::invalid_argument("delta-purify needs a fidelity threshold");
  }
  if (stop.f_th <= params.fidelity_limit()) {
    return run_no_pur(params, stop, rng, log);
  }

  PolicyRun run(params, stop, rng, log);
  const MemoryModel& memory = params.memory;
  int attempts = 0;
  while (run.clock < run.deadline) {
    // Phase 1: first pair and feasibility.
    const auto first = run.episode();
    if (!first) break;
    const Fidelity f1 = first->pair.f_herald;
    if (!(f1 > 0.5) || !purification_feasibility(f1, stop.f_th).feasible) {
      ++run.ctx.counters().feasibility_aborts;
      run.discard(first->pair, first->pair.t_herald, f1);
      continue;
    }

    // Phase 2: second pair, then the asymmetry test on what is observed.
    const auto second = run.episode();
    if (!second) break;
    const auto f1_now = current_fidelity(first->pair, second->pair.t_herald, memory);
    const Fidelity f2 = second->pair.f_herald;
    if (!f1_now || !(*f1_now > 0.5) || !(f2 > 0.5) || !should_purify(*f1_now, f2)) {
      ++run.ctx.counters().delta_aborts;
      run.discard(first->pair, second->pair.t_herald, f1_now.value_or(0.0));
      run.discard(second->pair, second->pair.t_herald, f2);
      continue;
    }

    // Phase 3: purify.
    if (run.clock >= run.deadline) break;
    const PurificationResult r =
        purify_end_to_end(run, PairOfPairs{first->pair, second->pair}, options);
    ++attempts;
    if (r.success && stop.accepts(r.pair->f_herald)) {
      return run.deliver(*r.pair, r.pair->f_herald);
    }
    if (r.success) run.discard(*r.pair, r.pair->t_herald, r.pair->f_herald);
    if (attempts_exhausted(options, attempts)) break;
  }
  return run.finish();
}

TrialOutcome run_policy(PolicyKind kind, const ChainParams& params, const StopCondition& stop,
                        RngStream& rng, const PolicyOptions& options, EventLog* log) {
  switch (kind) {
    case PolicyKind::kNoPur:
      return run_no_pur(params, stop, rng, log);
    case PolicyKind::kSwapPurify:
      return run_sp(params, stop, rng, options, log);
    case PolicyKind::kPurifySwap:
      return run_ps(params, stop, rng, options, log);
    case PolicyKind::kDeltaPurify:
      return run_delta_purify(params, stop, rng, options, log);
  }
  throw std::invalid_argument("unknown policy");
}

}  // namespace purisim
