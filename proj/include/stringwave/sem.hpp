// SPDX-License-Identifier: Apache-2.0
#pragma once

/// Singularity expansion over complex resonances.
///
/// u(x, t) ~ sum_j <f, Psi_j> / <Phi_j, Psi_j> phi_j(x) e^{-i w_j t}
///
/// phi_j is the purely outgoing (resonant) mode at the pole w_j and psi_j the
/// purely incoming (absorbing) mode at conj(w_j). The normalisations are closed
/// forms; only the projection <f, Psi_j> is computed by quadrature.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "stringwave/error.hpp"
#include "stringwave/freqdomain.hpp"
#include "stringwave/model.hpp"

namespace stringwave {

struct NewtonResult {
  cplx root;
  int iterations = 0;
  double residual = 0.0;
};

/// Newton iteration z <- z - F(z)/F'(z) until |F(z)| <= tol.
template <class Function, class Derivative>
NewtonResult newton_refine(Function&& f, Derivative&& df, cplx guess, double tol = 1e-12,
                           int max_iter = 50) {
  cplx z = guess;
  cplx fz = f(z);
  for (int it = 0;; ++it) {
    if (!std::isfinite(fz.real()) || !std::isfinite(fz.imag()))
      throw NonConvergenceError("Newton iteration diverged");
    if (std::abs(fz) <= tol) return {z, it, std::abs(fz)};
    if (it == max_iter)
      throw NonConvergenceError("Newton iteration did not converge in " + std::to_string(max_iter) +
                                " steps (residual " + std::to_string(std::abs(fz)) + ")");
    const cplx d = df(z);
    if (std::abs(d) <= 1e-300 || std::abs(d) < 1e-14 * std::abs(fz))
      throw NonConvergenceError("Newton iteration hit a vanishing derivative");
    z -= fz / d;
    fz = f(z);
  }
}

struct MassSpringShape {};
struct AnchorShape {
  double offset = 0.0;
};

/// One complex resonance with its mode pair and biorthogonal normalisation.
struct ResonanceMode {
  int index = 0;
  cplx omega;
  cplx k;
  double residual = 0.0;     // |pole equation| at the root
  cplx normalization;        // <Phi_j, Psi_j>
  std::optional<cplx> coefficient; // <f, Psi_j> / <Phi_j, Psi_j>
  std::variant<MassSpringShape, AnchorShape> shape;

  /// Outgoing mode phi_j.
  cplx resonant(double x) const {
    if (const auto* a = std::get_if<AnchorShape>(&shape)) {
      if (x < 0.0) return std::sin(k * (x + a->offset)) / std::sin(k * a->offset);
      return std::exp(I * k * x);
    }
    return std::exp(I * k * std::abs(x));
  }

  cplx resonant_slope(double x, Side side = Side::Right) const {
    const bool left = x < 0.0 || (x == 0.0 && side == Side::Left);
    if (const auto* a = std::get_if<AnchorShape>(&shape)) {
      if (left) return k * std::cos(k * (x + a->offset)) / std::sin(k * a->offset);
      return I * k * std::exp(I * k * x);
    }
    const double sign = left ? -1.0 : 1.0;
    return sign * I * k * std::exp(I * k * std::abs(x));
  }

  /// Incoming mode psi_j at conj(omega_j).
  cplx absorbing(double x) const {
    const cplx kc = std::conj(k);
    if (const auto* a = std::get_if<AnchorShape>(&shape)) {
      if (x < 0.0) return std::sin(kc * (x + a->offset)) / std::sin(kc * a->offset);
      return std::exp(-I * kc * x);
    }
    return std::exp(-I * kc * std::abs(x));
  }

  cplx absorbing_slope(double x, Side side = Side::Right) const {
    const cplx kc = std::conj(k);
    const bool left = x < 0.0 || (x == 0.0 && side == Side::Left);
    if (const auto* a = std::get_if<AnchorShape>(&shape)) {
      if (left) return kc * std::cos(kc * (x + a->offset)) / std::sin(kc * a->offset);
      return -I * kc * std::exp(-I * kc * x);
    }
    const double sign = left ? -1.0 : 1.0;
    return -sign * I * kc * std::exp(-I * kc * std::abs(x));
  }
};

inline cplx normalization(const ResonanceMode& mode, const StringMedium& medium,
                          const ScattererConfig& scatterer) {
  const cplx w2 = mode.omega * mode.omega;
  if (const auto* ms = std::get_if<MassSpring>(&scatterer)) return ms->mass * w2 + ms->spring;
  if (const auto* ma = std::get_if<MassAnchor>(&scatterer)) {
    const cplx s = std::sin(mode.k * ma->offset);
    if (std::abs(s) < cot_guard)
      throw NumericalError("sin(kL) vanishes at resonance " + std::to_string(mode.index) +
                           "; the root is not a resonance");
    return ma->mass * w2 + medium.density() * w2 * ma->offset / (s * s);
  }
  throw ValidationError("the free string has no resonances");
}

/// The two resonances of the mass-spring scatterer,
/// w = -iT/(cM) +- sqrt(k_s M - mu T)/M.
inline std::array<ResonanceMode, 2> poles_mass_spring(const StringMedium& medium,
                                                      const MassSpring& ms) {
  if (!(ms.mass > 0.0)) throw ValidationError("mass-spring resonances require M > 0");
  const double c = medium.wave_speed();
  const double T = medium.tension();
  const double disc = ms.spring * ms.mass - medium.density() * T;
  if (std::abs(disc) <= 1e-14 * std::max(ms.spring * ms.mass, medium.density() * T))
    throw NumericalError("k_s M = mu T: the two resonances merge into a double pole, "
                         "which the simple-pole expansion does not cover");
  const cplx root = std::sqrt(cplx(disc, 0.0)) / ms.mass;
  const cplx damping = -I * T / (c * ms.mass);
  std::array<ResonanceMode, 2> modes;
  const std::array<cplx, 2> omegas{damping + root, damping - root};
  for (std::size_t j = 0; j < 2; ++j) {
    auto& m = modes[j];
    m.index = static_cast<int>(j) + 1;
    m.omega = omegas[j];
    m.k = omegas[j] / c;
    m.residual = std::abs(mass_spring_denominator(m.omega, medium, ms));
    m.shape = MassSpringShape{};
    m.normalization = normalization(m, medium, ms);
  }
  return modes;
}

/// F(k) = (Mk/mu + i) sin(kL) - cos(kL), zero at the anchor resonances.
inline cplx anchor_resonance_function(cplx k, const StringMedium& medium, const MassAnchor& ma) {
  const double L = ma.offset;
  return (ma.mass * k / medium.density() + I) * std::sin(k * L) - std::cos(k * L);
}

inline cplx anchor_resonance_slope(cplx k, const StringMedium& medium, const MassAnchor& ma) {
  const double L = ma.offset;
  const double m = ma.mass / medium.density();
  return m * std::sin(k * L) + L * (m * k + I) * std::cos(k * L) + L * std::sin(k * L);
}

/// Starting point for index j: j pi / L, or the quadratic Taylor estimate for j = 0.
inline cplx anchor_initial_guess(int j, const StringMedium& medium, const MassAnchor& ma) {
  const double mu = medium.density();
  const double L = ma.offset;
  if (j == 0)
    return (-I * mu + mu * std::sqrt(4.0 * ma.mass / (mu * L) + 1.0)) / (2.0 * ma.mass + mu * L);
  return j * pi / L;
}

struct PoleSearchOptions {
  double newton_tolerance = 1e-12;
  double acceptance = 1e-10;
  int max_iterations = 50;
};

struct PoleFailure {
  int index = 0;
  std::string reason;
};

struct AnchorPoleSearch {
  std::vector<ResonanceMode> modes; // sorted by index
  std::vector<PoleFailure> failures;
  std::vector<std::pair<int, int>> duplicates; // (kept, dropped)
};

/// Resonances j_min..j_max. Non-negative indices are refined by Newton's method;
/// index -j is the mirror -conj(k) of index j-1, an exact symmetry of F.
inline AnchorPoleSearch poles_anchor(const StringMedium& medium, const MassAnchor& ma, int j_min,
                                     int j_max, const PoleSearchOptions& opts = {}) {
  validate(ma);
  if (j_min > j_max) throw ValidationError("resonance index range is empty");
  AnchorPoleSearch out;
  std::map<int, std::optional<cplx>> refined;
  auto base_root = [&](int base) -> std::optional<cplx> {
    if (auto it = refined.find(base); it != refined.end()) return it->second;
    std::optional<cplx> root;
    try {
      const auto result = newton_refine(
          [&](cplx k) { return anchor_resonance_function(k, medium, ma); },
          [&](cplx k) { return anchor_resonance_slope(k, medium, ma); },
          anchor_initial_guess(base, medium, ma), opts.newton_tolerance, opts.max_iterations);
      root = result.root;
    } catch (const NumericalError& e) {
      out.failures.push_back({base, e.what()});
    }
    refined[base] = root;
    return root;
  };

  const double c = medium.wave_speed();
  for (int j = j_min; j <= j_max; ++j) {
    const int base = j >= 0 ? j : -j - 1;
    const auto root = base_root(base);
    if (!root) {
      if (j < 0) out.failures.push_back({j, "mirror of unconverged index " + std::to_string(base)});
      continue;
    }
    ResonanceMode m;
    m.index = j;
    m.k = j >= 0 ? *root : -std::conj(*root);
    m.omega = c * m.k;
    m.residual = std::abs(anchor_resonance_function(m.k, medium, ma));
    m.shape = AnchorShape{ma.offset};
    if (!(m.residual < opts.acceptance)) {
      out.failures.push_back({j, "residual " + std::to_string(m.residual) + " above acceptance"});
      continue;
    }
    if (!(m.k.imag() < 0.0)) {
      out.failures.push_back({j, "root is not in the lower half plane"});
      continue;
    }
    const auto dup = std::find_if(out.modes.begin(), out.modes.end(),
                                  [&](const ResonanceMode& o) { return std::abs(o.k - m.k) < 1e-8; });
    if (dup != out.modes.end()) {
      out.duplicates.emplace_back(dup->index, j);
      continue;
    }
    m.normalization = normalization(m, medium, ma);
    out.modes.push_back(m);
  }
  return out;
}

struct ModalCoefficient {
  cplx value;
  cplx projection; // <f, Psi_j>
  std::vector<std::string> warnings;
};

/// Energy inner product of the initial state with the absorbing mode, by
/// midpoint quadrature on the grid, divided by the closed-form normalisation.
inline ModalCoefficient modal_coefficient(const InitialCondition& ic, const ResonanceMode& mode,
                                          const StringMedium& medium,
                                          const ScattererConfig& scatterer,
                                          const SpatialGrid& grid) {
  const auto n = grid.size();
  if (ic.displacement.size() != n || ic.velocity.size() != n)
    throw ValidationError("initial condition does not match the spatial grid");
  if (!grid.j0()) throw ValidationError("modal projection needs a grid with a scatterer cell");
  const std::size_t j0 = *grid.j0();
  const double dx = grid.dx();
  const double T = medium.tension();
  const double mu = medium.density();
  const auto& f = ic.displacement;
  const auto& g = ic.velocity;
  ModalCoefficient out{};

  auto slope = [&](std::size_t j) {
    if (n == 1) return 0.0;
    if (j == 0) return (f[1] - f[0]) / dx;
    if (j == n - 1) return (f[n - 1] - f[n - 2]) / dx;
    return (f[j + 1] - f[j - 1]) / (2.0 * dx);
  };

  // -i conj(w) psi is the velocity component of Psi_j.
  const cplx absorbing_rate = -I * std::conj(mode.omega);
  cplx sum{};
  for (std::size_t j = 0; j < n; ++j) {
    const double x = grid[j];
    cplx dpsi;
    if (j == j0)
      dpsi = 0.5 * (mode.absorbing_slope(x, Side::Left) + mode.absorbing_slope(x, Side::Right));
    else dpsi = mode.absorbing_slope(x);
    sum += T * slope(j) * std::conj(dpsi) + mu * g[j] * std::conj(absorbing_rate * mode.absorbing(x));
  }
  cplx projection = sum * dx;
  const cplx psi0 = mode.absorbing(0.0);
  projection += point_mass(scatterer) * ic.point_velocity * std::conj(absorbing_rate * psi0);
  projection += point_spring(scatterer) * ic.point_displacement * std::conj(psi0);
  out.projection = projection;

  const cplx norm = normalization(mode, medium, scatterer);
  if (std::abs(norm) == 0.0)
    throw NumericalError("resonance " + std::to_string(mode.index) + " has zero normalisation");
  out.value = projection / norm;

  // Only open ends truncate the problem; the anchor is a true boundary.
  double fmax = 0.0, gmax = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    fmax = std::max(fmax, std::abs(f[j]));
    gmax = std::max(gmax, std::abs(g[j]));
  }
  auto truncated = [&](std::size_t j) {
    return (fmax > 0.0 && std::abs(f[j]) > 1e-8 * fmax) || (gmax > 0.0 && std::abs(g[j]) > 1e-8 * gmax);
  };
  const bool open_left = grid.left_boundary() == LeftBoundary::Open;
  if ((open_left && truncated(0)) || truncated(n - 1))
    out.warnings.push_back("initial data is not negligible at the grid boundary; "
                           "the absorbing-mode projection is truncated");
  return out;
}

/// Fills the coefficient of every mode; returns the distinct warnings raised.
inline std::vector<std::string> attach_coefficients(std::span<ResonanceMode> modes,
                                                    const InitialCondition& ic,
                                                    const StringMedium& medium,
                                                    const ScattererConfig& scatterer,
                                                    const SpatialGrid& grid) {
  std::vector<std::string> warnings;
  for (auto& m : modes) {
    auto coef = modal_coefficient(ic, m, medium, scatterer, grid);
    m.coefficient = coef.value;
    for (auto& w : coef.warnings)
      if (std::find(warnings.begin(), warnings.end(), w) == warnings.end())
        warnings.push_back(std::move(w));
  }
  return warnings;
}

/// Modal sum at a single point, for time series.
inline double sem_point_value(std::span<const ResonanceMode> modes, double x, double t,
                              double tol_im = 1e-6) {
  cplx u{};
  double scale = 0.0; // a lone value may be near zero, so compare to the term sizes
  for (const auto& m : modes) {
    if (!m.coefficient)
      throw ValidationError("resonance " + std::to_string(m.index) + " has no modal coefficient");
    const cplx term = *m.coefficient * m.resonant(x) * std::exp(-I * m.omega * t);
    u += term;
    scale += std::abs(term);
  }
  if (std::abs(u.imag()) > tol_im * scale && std::abs(u.imag()) > 1e-300)
    throw ImaginaryResidueError("SEM point value: imaginary residue " + std::to_string(u.imag()) +
                                " (unpaired resonances?)");
  return u.real();
}

/// Modal sum Re sum_j c_j phi_j(x) e^{-i w_j t} on the grid.
inline Snapshot evolve_sem(std::span<const ResonanceMode> modes, double t, const SpatialGrid& grid,
                           double tol_im = 1e-6) {
  if (!(t >= 0.0)) throw ValidationError("the singularity expansion is evaluated for t >= 0");
  const auto n = grid.size();
  std::vector<cplx> u(n), v(n);
  double scale_u = 0.0, scale_v = 0.0;
  for (const auto& m : modes) {
    if (!m.coefficient)
      throw ValidationError("resonance " + std::to_string(m.index) + " has no modal coefficient");
    const cplx amp = *m.coefficient * std::exp(-I * m.omega * t);
    const cplx rate = -I * m.omega;
    double peak = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const cplx term = amp * m.resonant(grid[j]);
      u[j] += term;
      v[j] += rate * term;
      peak = std::max(peak, std::abs(term));
    }
    scale_u += peak;
    scale_v += std::abs(rate) * peak;
  }
  Snapshot snap;
  snap.time = t;
  snap.method = Method::Sem;
  snap.positions.assign(grid.midpoints().begin(), grid.midpoints().end());
  snap.displacement = checked_real_part(u, tol_im, "SEM displacement (unpaired resonances?)", scale_u);
  snap.velocity = checked_real_part(v, tol_im, "SEM velocity (unpaired resonances?)", scale_v);
  return snap;
}

} // namespace stringwave
