#pragma once

// Decoherence of a stored Werner pair as a function of storage time.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "purisim/calculus.h"

namespace purisim {

using Timestep = std::int64_t;

struct MemoryModel {
  enum class Kind {
    kConstant,     // CMM: no decay, optional hard lifetime
    kLinear,       // LMM: linear decay towards 0.5
    kExponential,  // EMM: depolarising decay towards 0.25
  };

  Kind kind = Kind::kConstant;
  double t_coh = 0.0;                   // timesteps, LMM/EMM only
  std::optional<Timestep> cutoff_tau;   // CMM only; empty means unbounded

  static MemoryModel constant(std::optional<Timestep> cutoff_tau = std::nullopt);
  static MemoryModel linear(double t_coh);
  static MemoryModel exponential(double t_coh);

  /// Throws std::invalid_argument when parameters are inconsistent.
  void validate() const;
};

std::string_view to_string(MemoryModel::Kind kind);
MemoryModel::Kind parse_memory_kind(std::string_view name);

/// True only for a CMM with finite lifetime and dt > tau.
bool is_expired(const MemoryModel& model, Timestep dt);

/// Fidelity after `dt` timesteps of storage, or empty when the pair expired.
std::optional<Fidelity> decayed_fidelity(const MemoryModel& model, Fidelity f0, Timestep dt);

}  // namespace purisim
