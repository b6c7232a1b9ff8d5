#include "purisim/memory_model.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace purisim {

MemoryModel MemoryModel::constant(std::optional<Timestep> cutoff_tau) {
  MemoryModel m;
  m.kind = Kind::kConstant;
  m.cutoff_tau = cutoff_tau;
  m.validate();
  return m;
}

MemoryModel MemoryModel::linear(double t_coh) {
  MemoryModel m;
  m.kind = Kind::kLinear;
  m.t_coh = t_coh;
  m.validate();
  return m;
}

MemoryModel MemoryModel::exponential(double t_coh) {
  MemoryModel m;
  m.kind = Kind::kExponential;
  m.t_coh = t_coh;
  m.validate();
  return m;
}

void MemoryModel::validate() const {
  if (kind == Kind::kConstant) {
    if (cutoff_tau && *cutoff_tau < 0) {
      throw std::invalid_argument("memory.cutoff_tau must be non-negative");
    }
    return;
  }
  if (!(t_coh > 0.0) || !std::isfinite(t_coh)) {
    throw std::invalid_argument("memory.t_coh must be a positive number of timesteps");
  }
}

std::string_view to_string(MemoryModel::Kind kind) {
  switch (kind) {
    case MemoryModel::Kind::kConstant:
      return "cmm";
    case MemoryModel::Kind::kLinear:
      return "lmm";
    case MemoryModel::Kind::kExponential:
      return "emm";
  }
  return "?";
}

MemoryModel::Kind parse_memory_kind(std::string_view name) {
  if (name == "cmm") return MemoryModel::Kind::kConstant;
  if (name == "lmm") return MemoryModel::Kind::kLinear;
  if (name == "emm") return MemoryModel::Kind::kExponential;
  throw std::invalid_argument("unknown memory model '" + std::string(name) +
                              "' (expected cmm, lmm or emm)");
}

bool is_expired(const MemoryModel& model, Timestep dt) {
  return model.kind == MemoryModel::Kind::kConstant && model.cutoff_tau.has_value() &&
         dt > *model.cutoff_tau;
}

std::optional<Fidelity> decayed_fidelity(const MemoryModel& model, Fidelity f0, Timestep dt) {
  if (dt < 0) {
    throw std::invalid_argument("storage time must be non-negative");
  }
  switch (model.kind) {
    case MemoryModel::Kind::kConstant:
      if (is_expired(model, dt)) {
        return std::nullopt;
      }
      return f0;
    case MemoryModel::Kind::kLinear: {
      // A pair already at or below the floor has nothing left to lose.
      if (f0 <= 0.5) {
        return f0;
      }
      const double slope = (f0 - 0.5) / model.t_coh;
      return std::max(0.5, f0 - static_cast<double>(dt) * slope);
    }
    case MemoryModel::Kind::kExponential:
      // Werner parameter decays as w0 * exp(-dt / T); F(0) = f0.
      return 0.25 + (f0 - 0.25) * std::exp(-static_cast<double>(dt) / model.t_coh);
  }
  return f0;
}

}  // namespace purisim
