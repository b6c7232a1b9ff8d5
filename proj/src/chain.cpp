#include "purisim/chain.h"

#include <algorithm>
#include <array>
#include <stdexcept>
#include <string>

#include "purisim/format.h"

namespace purisim {

std::string_view to_string(GenerationMode mode) {
  return mode == GenerationMode::kSequential ? "sequential" : "parallel";
}

GenerationMode parse_generation_mode(std::string_view name) {
  if (name == "sequential") return GenerationMode::kSequential;
  if (name == "parallel") return GenerationMode::kParallel;
  throw std::invalid_argument("unknown generation mode '" + std::string(name) +
                              "' (expected sequential or parallel)");
}

ChainParams ChainParams::uniform(int hops, Fidelity f0, double p_e, double p_s,
                                 MemoryModel memory) {
  ChainParams params;
  params.hops = hops;
  params.link_f0.assign(static_cast<std::size_t>(std::max(hops, 0)), f0);
  params.p_e = p_e;
  params.p_s = p_s;
  params.memory = memory;
  params.validate();
  return params;
}

void ChainParams::validate() const {
  if (hops < 1) {
    throw std::invalid_argument("chain.hops must be at least 1");
  }
  if (link_f0.size() != static_cast<std::size_t>(hops)) {
    throw std::invalid_argument("chain.f0 must give one fidelity per hop (or a single value)");
  }
  for (const Fidelity f : link_f0) {
    if (!(f > 0.5 && f <= 1.0)) {
      throw std::invalid_argument("chain.f0 values must lie in (0.5, 1]");
    }
  }
  if (!(p_e > 0.0 && p_e <= 1.0)) {
    throw std::invalid_argument("chain.pe must lie in (0, 1]");
  }
  if (!(p_s > 0.0 && p_s <= 1.0)) {
    throw std::invalid_argument("chain.ps must lie in (0, 1]");
  }
  if (cutoff < 1) {
    throw std::invalid_argument("chain.cutoff must be at least 1");
  }
  if (discard_below && !(*discard_below >= 0.0 && *discard_below <= 1.0)) {
    throw std::invalid_argument("chain.discard_below must lie in [0, 1]");
  }
  memory.validate();
}

AttemptCounters& AttemptCounters::operator+=(const AttemptCounters& other) {
  generations += other.generations;
  swaps += other.swaps;
  swap_failures += other.swap_failures;
  purifications += other.purifications;
  purification_failures += other.purification_failures;
  delta_aborts += other.delta_aborts;
  feasibility_aborts += other.feasibility_aborts;
  expirations += other.expirations;
  return *this;
}

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::kGenerate:
      return "generate";
    case EventKind::kSwap:
      return "swap";
    case EventKind::kSwapFail:
      return "swap_fail";
    case EventKind::kPurify:
      return "purify";
    case EventKind::kPurifyFail:
      return "purify_fail";
    case EventKind::kExpire:
      return "expire";
    case EventKind::kDiscard:
      return "discard";
    case EventKind::kDeliver:
      return "deliver";
  }
  return "?";
}

void write_event_log(std::ostream& out, const EventLog& log) {
  out << "t,kind,pair,input_a,input_b,left,right,inputs_at,fidelity\n";
  for (const Event& e : log) {
    out << e.t << ',' << to_string(e.kind) << ',' << e.pair << ',' << e.input_a << ','
        << e.input_b << ',' << e.left_node << ',' << e.right_node << ',' << e.inputs_at << ','
        << format_double(e.fidelity) << '\n';
  }
}

std::optional<Fidelity> current_fidelity(const EntangledPair& pair, Timestep now,
                                         const MemoryModel& model) {
  if (now < pair.t_herald) {
    throw std::invalid_argument("pair observed before it was heralded");
  }
  return decayed_fidelity(model, pair.f_herald, now - pair.t_herald);
}

std::optional<EntangledPair> attempt_generation(int link, Timestep now, TrialContext& ctx) {
  const ChainParams& params = ctx.params();
  if (link < 0 || link >= params.hops) {
    throw std::out_of_range("link index outside the chain");
  }
  if (!ctx.rng().bernoulli(params.p_e)) {
    return std::nullopt;
  }
  EntangledPair pair{link, link + 1, params.link_f0[static_cast<std::size_t>(link)], now,
                     ctx.next_pair_id()};
  ++ctx.counters().generations;
  ctx.record({now, EventKind::kGenerate, pair.id, kNoPair, kNoPair, pair.left_node,
              pair.right_node, now, pair.f_herald});
  return pair;
}

std::optional<EntangledPair> attempt_swap(const EntangledPair& a, const EntangledPair& b,
                                          Timestep now, TrialContext& ctx) {
  if (a.right_node != b.left_node) {
    throw std::invalid_argument("swap needs adjacent spans");
  }
  const MemoryModel& model = ctx.params().memory;
  const auto fa = current_fidelity(a, now, model);
  const auto fb = current_fidelity(b, now, model);
  ++ctx.counters().swaps;
  if (!fa || !fb) {
    ++ctx.counters().swap_failures;
    ctx.record({now, EventKind::kSwapFail, kNoPair, a.id, b.id, a.left_node, b.right_node, now,
                0.0});
    return std::nullopt;
  }
  if (!ctx.rng().bernoulli(ctx.params().p_s)) {
    ++ctx.counters().swap_failures;
    ctx.record({now, EventKind::kSwapFail, kNoPair, a.id, b.id, a.left_node, b.right_node, now,
                0.0});
    return std::nullopt;
  }
  EntangledPair merged{a.left_node, b.right_node, swap_fidelity(*fa, *fb), now,
                       ctx.next_pair_id()};
  ctx.record({now, EventKind::kSwap, merged.id, a.id, b.id, merged.left_node, merged.right_node,
              now, merged.f_herald});
  return merged;
}

PurificationResult attempt_purification(const EntangledPair& a, const EntangledPair& b,
                                        Timestep inputs_at, Timestep now, TrialContext& ctx) {
  if (a.left_node != b.left_node || a.right_node != b.right_node) {
    throw std::invalid_argument("purification needs pairs with identical spans");
  }
  if (inputs_at > now) {
    throw std::invalid_argument("purification inputs observed after the protocol step");
  }
  const MemoryModel& model = ctx.params().memory;
  const auto f1 = current_fidelity(a, inputs_at, model);
  const auto f2 = current_fidelity(b, inputs_at, model);
  ++ctx.counters().purifications;

  PurificationResult result;
  if (!f1 || !f2) {
    ++ctx.counters().purification_failures;
    ++ctx.counters().expirations;
    ctx.record({now, EventKind::kExpire, kNoPair, a.id, b.id, a.left_node, a.right_node,
                inputs_at, 0.0});
    return result;
  }
  result.evaluated = true;
  result.f1 = *f1;
  result.f2 = *f2;
  const Fidelity output = purified_fidelity(*f1, *f2);
  result.gain = output - std::max(*f1, *f2);
  result.success = ctx.rng().bernoulli(purification_success_prob(*f1, *f2));
  if (!result.success) {
    ++ctx.counters().purification_failures;
    ctx.record({now, EventKind::kPurifyFail, kNoPair, a.id, b.id, a.left_node, a.right_node,
                inputs_at, output});
    return result;
  }
  result.pair = EntangledPair{a.left_node, a.right_node, output, now, ctx.next_pair_id()};
  ctx.record({now, EventKind::kPurify, result.pair->id, a.id, b.id, a.left_node, a.right_node,
              inputs_at, output});
  return result;
}

namespace {

// Two generation slots feeding link-level purification.
struct LinkSlots {
  std::array<std::optional<EntangledPair>, 2> slot;
  Timestep purify_at = -1;
  Timestep inputs_at = 0;
};

class SwapAsapEpisode {
 public:
  SwapAsapEpisode(TrialContext& ctx, LinkStage stage, bool decay_during_purification)
      : ctx_(ctx),
        params_(ctx.params()),
        stage_(stage),
        decay_during_purification_(decay_during_purification),
        covered_(static_cast<std::size_t>(params_.hops), false),
        links_(stage == LinkStage::kPurified ? static_cast<std::size_t>(params_.hops) : 0) {
    const MemoryModel& m = params_.memory;
    needs_pruning_ = params_.discard_below.has_value() ||
                     (m.kind == MemoryModel::Kind::kConstant && m.cutoff_tau.has_value());
  }

  std::optional<EndToEnd> run(Timestep start, Timestep deadline) {
    for (Timestep t = start; t < deadline; ++t) {
      if (needs_pruning_) prune(t);
      supply(t);
      swap_all(t);
      if (segments_.size() == 1 && segments_.front().left_node == 0 &&
          segments_.front().right_node == params_.hops) {
        return EndToEnd{segments_.front(), t - start + 1};
      }
    }
    return std::nullopt;
  }

 private:
  bool keep(const EntangledPair& pair, Timestep t) {
    const auto f = current_fidelity(pair, t, params_.memory);
    if (!f) {
      ++ctx_.counters().expirations;
      ctx_.record({t, EventKind::kExpire, pair.id, kNoPair, kNoPair, pair.left_node,
                   pair.right_node, t, 0.0});
      return false;
    }
    if (params_.discard_below && *f < *params_.discard_below) {
      ctx_.record({t, EventKind::kDiscard, pair.id, kNoPair, kNoPair, pair.left_node,
                   pair.right_node, t, *f});
      return false;
    }
    return true;
  }

  void prune(Timestep t) {
    for (std::size_t i = 0; i < segments_.size();) {
      if (keep(segments_[i], t)) {
        ++i;
      } else {
        uncover(segments_[i]);
        segments_.erase(segments_.begin() + static_cast<std::ptrdiff_t>(i));
      }
    }
    for (LinkSlots& link : links_) {
      if (link.purify_at >= 0) continue;
      for (auto& s : link.slot) {
        if (s && !keep(*s, t)) s.reset();
      }
    }
  }

  void uncover(const EntangledPair& pair) {
    for (int l = pair.left_node; l < pair.right_node; ++l) {
      covered_[static_cast<std::size_t>(l)] = false;
    }
  }

  void insert(const EntangledPair& pair) {
    for (int l = pair.left_node; l < pair.right_node; ++l) {
      covered_[static_cast<std::size_t>(l)] = true;
    }
    const auto pos = std::lower_bound(
        segments_.begin(), segments_.end(), pair,
        [](const EntangledPair& x, const EntangledPair& y) { return x.left_node < y.left_node; });
    segments_.insert(pos, pair);
  }

  void supply(Timestep t) {
    for (int link = 0; link < params_.hops; ++link) {
      if (covered_[static_cast<std::size_t>(link)]) continue;
      if (stage_ == LinkStage::kRaw) {
        if (auto pair = attempt_generation(link, t, ctx_)) insert(*pair);
        continue;
      }
      LinkSlots& slots = links_[static_cast<std::size_t>(link)];
      if (slots.purify_at == t) {
        const PurificationResult r =
            attempt_purification(*slots.slot[0], *slots.slot[1], slots.inputs_at, t, ctx_);
        if (r.evaluated) ctx_.gain_samples().push_back(r.gain);
        slots = LinkSlots{};
        if (r.success) insert(*r.pair);
        continue;
      }
      for (auto& s : slots.slot) {
        if (!s) s = attempt_generation(link, t, ctx_);
      }
      if (slots.slot[0] && slots.slot[1]) {
        slots.purify_at = t + 1;
        slots.inputs_at = decay_during_purification_ ? t + 1 : t;
      }
    }
  }

  void swap_all(Timestep t) {
    bool changed = true;
    while (changed) {
      changed = false;
      for (std::size_t i = 0; i + 1 < segments_.size(); ++i) {
        if (segments_[i].right_node != segments_[i + 1].left_node) continue;
        const auto merged = attempt_swap(segments_[i], segments_[i + 1], t, ctx_);
        const auto first = segments_.begin() + static_cast<std::ptrdiff_t>(i);
        if (merged) {
          *first = *merged;
          segments_.erase(first + 1);
        } else {
          uncover(segments_[i]);
          uncover(segments_[i + 1]);
          segments_.erase(first, first + 2);
        }
        changed = true;
        break;
      }
    }
  }

  TrialContext& ctx_;
  const ChainParams& params_;
  LinkStage stage_;
  bool decay_during_purification_;
  bool needs_pruning_ = false;
  std::vector<EntangledPair> segments_;  // sorted by left node, disjoint
  std::vector<bool> covered_;
  std::vector<LinkSlots> links_;
};

}  // namespace

std::optional<EndToEnd> run_swap_asap(TrialContext& ctx, Timestep start, Timestep deadline,
                                      LinkStage stage, bool decay_during_purification) {
  SwapAsapEpisode episode(ctx, stage, decay_during_purification);
  return episode.run(start, deadline);
}

}  // namespace purisim
