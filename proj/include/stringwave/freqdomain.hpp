// SPDX-License-Identifier: Apache-2.0
#pragma once

/// Closed-form time-harmonic (exp(-i omega t)) scattering solutions for the
/// free string, the mass-spring scatterer and the mass next to an anchor.
/// Every function accepts complex omega, so the same formulas serve real-axis
/// GEM quadrature and complex resonance evaluation.

#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <variant>

#include "stringwave/error.hpp"
#include "stringwave/model.hpp"

namespace stringwave {

enum class Incidence {
  FromMinusInfinity, // "+" family: e^{ikx} incoming from the left
  FromPlusInfinity,  // "-" family: e^{-ikx} incoming from the right
  FromPlusInfinityAnchor,
};

/// Which one-sided limit to take for quantities that jump at x = 0.
enum class Side { Left, Right };

struct FieldValue {
  cplx u; // displacement amplitude
  cplx v; // velocity amplitude, -i omega u
};

struct MassSpringCoefficients {
  cplx r;
  cplx t;
};

struct AnchorCoefficients {
  cplx r;
  cplx B; // interior amplitude, r + 1
};

inline constexpr double pole_tolerance = 1e-13;
inline constexpr double cot_guard = 1e-12;

/// Denominator 2ikT - k_s + M omega^2 shared by r and t.
inline cplx mass_spring_denominator(cplx omega, const StringMedium& medium, const MassSpring& ms) {
  const cplx k = omega / medium.wave_speed();
  return 2.0 * I * k * medium.tension() - ms.spring + ms.mass * omega * omega;
}

inline MassSpringCoefficients coefficients_mass_spring(cplx omega, const StringMedium& medium,
                                                       const MassSpring& ms) {
  const cplx k = omega / medium.wave_speed();
  const cplx ikt2 = 2.0 * I * k * medium.tension();
  const cplx stiffness = ms.spring - ms.mass * omega * omega;
  const cplx denom = ikt2 - stiffness;
  const double scale = std::abs(ikt2) + std::abs(ms.spring) + std::abs(ms.mass * omega * omega);
  if (std::abs(denom) <= pole_tolerance * scale)
    throw PoleHitError("mass-spring coefficients evaluated at a resonance pole, omega = (" +
                       std::to_string(omega.real()) + ", " + std::to_string(omega.imag()) + ")");
  return {stiffness / denom, ikt2 / denom};
}

namespace detail {

inline FieldValue mass_spring_field(cplx omega, cplx k, cplx r, cplx t, Incidence incidence,
                                    double x) {
  // The "-" solution is the "+" solution under x -> -x.
  const double y = incidence == Incidence::FromMinusInfinity ? x : -x;
  cplx u;
  if (y < 0.0) u = std::exp(I * k * y) + r * std::exp(-I * k * y);
  else if (y > 0.0) u = t * std::exp(I * k * y);
  else u = t;
  return {u, -I * omega * u};
}

inline cplx mass_spring_slope(cplx k, cplx r, cplx t, Incidence incidence, double x, Side side) {
  const bool plus = incidence == Incidence::FromMinusInfinity;
  const double y = plus ? x : -x;
  bool left_branch = y < 0.0;
  if (y == 0.0) left_branch = plus ? side == Side::Left : side == Side::Right;
  const cplx dy = left_branch ? I * k * (std::exp(I * k * y) - r * std::exp(-I * k * y))
                              : I * k * t * std::exp(I * k * y);
  return plus ? dy : -dy;
}

inline FieldValue anchor_field(cplx omega, cplx k, cplx r, cplx B, double L, double x) {
  cplx u;
  if (x < 0.0) u = B * std::sin(k * (x + L)) / std::sin(k * L);
  else if (x > 0.0) u = std::exp(-I * k * x) + r * std::exp(I * k * x);
  else u = B;
  return {u, -I * omega * u};
}

inline cplx anchor_slope(cplx k, cplx r, cplx B, double L, double x, Side side) {
  const bool left_branch = x < 0.0 || (x == 0.0 && side == Side::Left);
  if (left_branch) return B * k * std::cos(k * (x + L)) / std::sin(k * L);
  return I * k * (-std::exp(-I * k * x) + r * std::exp(I * k * x));
}

} // namespace detail

inline FieldValue field_mass_spring(cplx omega, Incidence incidence, const StringMedium& medium,
                                    const MassSpring& ms, double x) {
  if (incidence == Incidence::FromPlusInfinityAnchor)
    throw ValidationError("anchor incidence is not defined for the mass-spring scatterer");
  const auto [r, t] = coefficients_mass_spring(omega, medium, ms);
  return detail::mass_spring_field(omega, omega / medium.wave_speed(), r, t, incidence, x);
}

/// Analytic x-derivative of the mass-spring field; `side` selects the branch at x = 0.
inline cplx slope_mass_spring(cplx omega, Incidence incidence, const StringMedium& medium,
                              const MassSpring& ms, double x, Side side = Side::Right) {
  const auto [r, t] = coefficients_mass_spring(omega, medium, ms);
  return detail::mass_spring_slope(omega / medium.wave_speed(), r, t, incidence, x, side);
}

inline AnchorCoefficients coefficients_anchor(cplx omega, const StringMedium& medium,
                                              const MassAnchor& ma) {
  const double c = medium.wave_speed();
  const double T = medium.tension();
  const cplx k = omega / c;
  const cplx s = std::sin(k * ma.offset);
  if (std::abs(s) < cot_guard)
    throw CotSingularityError("sin(kL) vanishes in the anchor reflection coefficient");
  const cplx cot = std::cos(k * ma.offset) / s;
  const cplx inertia = ma.mass * c * c * k * k;
  const cplx interior = k * T * cot;
  const cplx radiation = I * k * T;
  const cplx denom = inertia - interior + radiation;
  const double scale = std::abs(inertia) + std::abs(interior) + std::abs(radiation);
  if (std::abs(denom) <= pole_tolerance * scale)
    throw PoleHitError("anchor coefficients evaluated at a resonance pole");
  const cplx r = -(inertia - interior - radiation) / denom;
  return {r, r + 1.0};
}

inline FieldValue field_anchor(cplx omega, const StringMedium& medium, const MassAnchor& ma,
                               double x) {
  if (x < -ma.offset) throw ValidationError("anchor field evaluated beyond the anchor");
  const auto [r, B] = coefficients_anchor(omega, medium, ma);
  return detail::anchor_field(omega, omega / medium.wave_speed(), r, B, ma.offset, x);
}

inline cplx slope_anchor(cplx omega, const StringMedium& medium, const MassAnchor& ma, double x,
                         Side side = Side::Right) {
  const auto [r, B] = coefficients_anchor(omega, medium, ma);
  return detail::anchor_slope(omega / medium.wave_speed(), r, B, ma.offset, x, side);
}

/// A solved scattering problem at one frequency for one incidence.
class FrequencyDomainField {
public:
  FrequencyDomainField(cplx omega, Incidence incidence, const StringMedium& medium,
                       const ScattererConfig& scatterer)
      : omega_(omega), k_(omega / medium.wave_speed()), incidence_(incidence),
        scatterer_(scatterer) {
    if (const auto* ma = std::get_if<MassAnchor>(&scatterer_)) {
      if (incidence != Incidence::FromPlusInfinityAnchor)
        throw ValidationError("the anchored string supports only incidence from +infinity");
      const auto c = coefficients_anchor(omega, medium, *ma);
      r_ = c.r;
      B_ = c.B;
    } else {
      if (incidence == Incidence::FromPlusInfinityAnchor)
        throw ValidationError("anchor incidence requires the mass-anchor scatterer");
      const auto c = coefficients_mass_spring(omega, medium, as_mass_spring());
      r_ = c.r;
      t_ = c.t;
    }
  }

  cplx omega() const noexcept { return omega_; }
  cplx wavenumber() const noexcept { return k_; }
  Incidence incidence() const noexcept { return incidence_; }
  cplx reflection() const noexcept { return r_; }
  std::optional<cplx> transmission() const noexcept { return t_; }
  std::optional<cplx> interior_amplitude() const noexcept { return B_; }

  FieldValue operator()(double x) const {
    if (const auto* ma = std::get_if<MassAnchor>(&scatterer_)) {
      if (x < -ma->offset) throw ValidationError("anchor field evaluated beyond the anchor");
      return detail::anchor_field(omega_, k_, r_, *B_, ma->offset, x);
    }
    return detail::mass_spring_field(omega_, k_, r_, *t_, incidence_, x);
  }

  cplx slope(double x, Side side = Side::Right) const {
    if (const auto* ma = std::get_if<MassAnchor>(&scatterer_))
      return detail::anchor_slope(k_, r_, *B_, ma->offset, x, side);
    return detail::mass_spring_slope(k_, r_, *t_, incidence_, x, side);
  }

private:
  // The free string is the mass-spring problem with M = k_s = 0.
  MassSpring as_mass_spring() const {
    if (const auto* ms = std::get_if<MassSpring>(&scatterer_)) return *ms;
    return MassSpring{0.0, 0.0};
  }

  cplx omega_;
  cplx k_;
  Incidence incidence_;
  ScattererConfig scatterer_;
  cplx r_{};
  std::optional<cplx> t_;
  std::optional<cplx> B_;
};

} // namespace stringwave
