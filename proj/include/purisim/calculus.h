#pragma once

// Closed-form fidelity algebra for Werner-state Bell pairs: generation,
// swapping, BBPSSW purification and the asymmetry tolerance that decides
// whether a two-pair purification can beat its better input.
//
// Every function here is pure. Fidelities are plain doubles in [0, 1].

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace purisim {

using Fidelity = double;

/// Raised when an input lies outside the domain a formula is defined on.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

Fidelity fidelity_from_werner(double w);
double werner_from_fidelity(Fidelity f);

struct HardwareParams {
  double detector_efficiency = 1.0;
  double coupling_efficiency = 1.0;
  double length_km = 0.0;
  double attenuation_length_km = 22.0;
};

/// Heralded generation probability per clock cycle for a mid-point
/// (Barrett-Kok style) scheme.
double generation_probability(const HardwareParams& hw);

Fidelity swap_fidelity(Fidelity f_ab, Fidelity f_bc);

/// Smallest partner fidelity that keeps a swap with `f_ab` at F >= 0.5.
Fidelity swap_partner_lower_bound(Fidelity f_ab);

double purification_success_prob(Fidelity f1, Fidelity f2);
Fidelity purified_fidelity(Fidelity f1, Fidelity f2);

/// Output fidelity minus the better input. Positive means purifying helps.
double purification_gain(Fidelity f1, Fidelity f2);

/// Inferior-pair fidelity at which purification exactly breaks even
/// against a superior pair `f1`. Requires f1 in (0.5, 1].
Fidelity f2_min(Fidelity f1);

/// Superior-pair fidelity at which purification exactly breaks even
/// against an inferior pair `f2`. Requires f2 in (0.5, 1].
Fidelity f1_max(Fidelity f2);

enum class DeltaRole {
  kAsSuperior,  // f is the better pair; tolerance measured downwards
  kAsInferior,  // f is the worse pair; tolerance measured upwards
};

/// Largest input asymmetry |F1 - F2| that still yields a net gain when
/// `f` plays the given role.
double delta_tolerance(Fidelity f, DeltaRole role);

/// Width of the band around the zero-gain boundary that is treated as
/// "do not purify".
inline constexpr double kPurifyBoundaryEpsilon = 1e-9;

/// Purify iff |f1 - f2| < delta(max(f1, f2)) by more than the boundary band.
bool should_purify(Fidelity f1, Fidelity f2);

struct DeltaMax {
  Fidelity f1_star;
  Fidelity f2_star;
  double delta_max;
};

/// Maximises the superior-referenced tolerance over (0.5, 1): grid bracket
/// followed by golden-section refinement.
DeltaMax find_delta_max();

/// Fidelity of an end-to-end pair obtained by swapping every link once with
/// no memory decay.
Fidelity chain_fidelity_limit(std::span<const Fidelity> link_fidelities);

struct Feasibility {
  Fidelity f_hat;
  bool feasible;
};

/// Best purified fidelity reachable with `f1` as one input: either a
/// symmetric partner or a partner at the upper edge of delta(f1).
Feasibility purification_feasibility(Fidelity f1, Fidelity f_th);

/// Square table of purification_gain over [0.5, 1]^2.
struct GainGrid {
  std::size_t resolution = 0;
  std::vector<double> gain;  // row-major, row = f1 index, col = f2 index

  double axis(std::size_t i) const;
  double at(std::size_t row, std::size_t col) const { return gain[row * resolution + col]; }
};

GainGrid gain_grid(std::size_t resolution);

}  // namespace purisim
