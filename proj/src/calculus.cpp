#include "purisim/calculus.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

namespace purisim {

namespace {

void require_unit(double x, const char* what) {
  if (!(x >= 0.0 && x <= 1.0)) {
    throw DomainError(std::string(what) + " must lie in [0, 1], got " + std::to_string(x));
  }
}

// Entangled domain used by the asymmetry formulas. The upper end is closed:
// every formula has a finite limit of 0 tolerance at F = 1.
void require_entangled(double f, const char* what) {
  if (!(f > 0.5 && f <= 1.0)) {
    throw DomainError(std::string(what) + " must lie in (0.5, 1], got " + std::to_string(f));
  }
}

// Golden-section maximisation of a unimodal f on [a, b] down to `width`.
double golden_section_max(const std::function<double(double)>& f, double a, double b,
                          double width) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > width) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

Fidelity fidelity_from_werner(double w) {
  require_unit(w, "Werner parameter");
  return (3.0 * w + 1.0) / 4.0;
}

double werner_from_fidelity(Fidelity f) {
  if (!(f >= 0.25 && f <= 1.0)) {
    throw DomainError("fidelity of a Werner state must lie in [0.25, 1], got " +
                      std::to_string(f));
  }
  return (4.0 * f - 1.0) / 3.0;
}

double generation_probability(const HardwareParams& hw) {
  require_unit(hw.detector_efficiency, "detector efficiency");
  require_unit(hw.coupling_efficiency, "coupling efficiency");
  if (!(hw.length_km >= 0.0)) {
    throw DomainError("link length must be non-negative");
  }
  if (!(hw.attenuation_length_km > 0.0)) {
    throw DomainError("attenuation length must be positive");
  }
  const double eta_d = hw.detector_efficiency;
  const double eta_c = hw.coupling_efficiency;
  return 0.5 * eta_d * eta_d * eta_c * eta_c * std::exp(-hw.length_km / hw.attenuation_length_km);
}

Fidelity swap_fidelity(Fidelity f_ab, Fidelity f_bc) {
  return 0.25 + 0.75 * ((4.0 * f_ab - 1.0) / 3.0) * ((4.0 * f_bc - 1.0) / 3.0);
}

Fidelity swap_partner_lower_bound(Fidelity f_ab) {
  if (!(f_ab > 0.25)) {
    throw DomainError("swap partner bound needs f_ab > 0.25");
  }
  return 0.25 * (3.0 / (4.0 * f_ab - 1.0) + 1.0);
}

double purification_success_prob(Fidelity f1, Fidelity f2) {
  return (8.0 / 9.0) * f1 * f2 - (2.0 / 9.0) * (f1 + f2) + 5.0 / 9.0;
}

Fidelity purified_fidelity(Fidelity f1, Fidelity f2) {
  const double p = purification_success_prob(f1, f2);
  if (!(p > 0.0)) {
    throw DomainError("purification success probability is zero");
  }
  return (f1 * f2 + (1.0 / 9.0) * (1.0 - f1) * (1.0 - f2)) / p;
}

double purification_gain(Fidelity f1, Fidelity f2) {
  return purified_fidelity(f1, f2) - std::max(f1, f2);
}

Fidelity f2_min(Fidelity f1) {
  require_entangled(f1, "f1");
  return (2.0 * f1 * f1 - 6.0 * f1 + 1.0) / (8.0 * f1 * f1 - 12.0 * f1 + 1.0);
}

Fidelity f1_max(Fidelity f2) {
  require_entangled(f2, "f2");
  // 28f^2 - 26f + 7 has negative discriminant, so the root is always real.
  const double root = std::sqrt(28.0 * f2 * f2 - 26.0 * f2 + 7.0);
  return (6.0 * f2 - 3.0 + root) / (2.0 * (4.0 * f2 - 1.0));
}

double delta_tolerance(Fidelity f, DeltaRole role) {
  switch (role) {
    case DeltaRole::kAsSuperior:
      return f - f2_min(f);
    case DeltaRole::kAsInferior:
      return f1_max(f) - f;
  }
  throw DomainError("unknown delta role");
}

bool should_purify(Fidelity f1, Fidelity f2) {
  require_entangled(f1, "f1");
  require_entangled(f2, "f2");
  const double asymmetry = std::abs(f1 - f2);
  const double tolerance = delta_tolerance(std::max(f1, f2), DeltaRole::kAsSuperior);
  return asymmetry < tolerance - kPurifyBoundaryEpsilon;
}

DeltaMax find_delta_max() {
  const auto delta = [](double f) { return delta_tolerance(f, DeltaRole::kAsSuperior); };

  constexpr int kGridPoints = 1000;
  constexpr double kLo = 0.5;
  constexpr double kHi = 1.0;
  const double step = (kHi - kLo) / (kGridPoints + 1);

  int best = 1;
  double best_value = delta(kLo + step);
  for (int i = 2; i <= kGridPoints; ++i) {
    const double value = delta(kLo + i * step);
    if (value > best_value) {
      best_value = value;
      best = i;
    }
  }

  const double a = kLo + std::max(best - 1, 1) * step;
  const double b = kLo + std::min(best + 1, kGridPoints) * step;
  const double f1 = golden_section_max(delta, a, b, 1e-9);
  return DeltaMax{f1, f2_min(f1), delta(f1)};
}

Fidelity chain_fidelity_limit(std::span<const Fidelity> link_fidelities) {
  if (link_fidelities.empty()) {
    throw std::invalid_argument("chain_fidelity_limit needs at least one link");
  }
  double product = 1.0;
  for (const Fidelity f : link_fidelities) {
    if (!(f >= 0.25 && f <= 1.0)) {
      throw DomainError("link fidelity must lie in [0.25, 1]");
    }
    product *= (4.0 * f - 1.0) / 3.0;
  }
  return 0.25 + 0.75 * product;
}

Feasibility purification_feasibility(Fidelity f1, Fidelity f_th) {
  require_entangled(f1, "f1");
  const double symmetric = purified_fidelity(f1, f1);
  const double partner = std::min(f1 + delta_tolerance(f1, DeltaRole::kAsSuperior), 1.0);
  const double upper = purified_fidelity(partner, f1);
  const double f_hat = std::max(symmetric, upper);
  return Feasibility{f_hat, f_hat >= f_th};
}

double GainGrid::axis(std::size_t i) const {
  return 0.5 + 0.5 * static_cast<double>(i) / static_cast<double>(resolution - 1);
}

GainGrid gain_grid(std::size_t resolution) {
  if (resolution < 2) {
    throw std::invalid_argument("gain grid resolution must be at least 2");
  }
  GainGrid grid;
  grid.resolution = resolution;
  grid.gain.resize(resolution * resolution);
  for (std::size_t r = 0; r < resolution; ++r) {
    for (std::size_t c = 0; c < resolution; ++c) {
      grid.gain[r * resolution + c] = purification_gain(grid.axis(r), grid.axis(c));
    }
  }
  return grid;
}

}  // namespace purisim
