// SPDX-License-Identifier: Apache-2.0
#pragma once

/// Generalised eigenfunction expansion on midpoint grids.
///
/// The initial state (f, g) is projected onto the frequency-domain solutions
/// with the energy inner product, which after integration by parts yields
///
///   A(w) = 1/(4 pi mu c) [ M f(0) u(0,w)* + mu sum_j f_j u(x_j,w)* dx
///                        + M/w^2 g(0) v(0,w)* + mu/w^2 sum_j g_j v(x_j,w)* dx ],
///
/// and the field at time t is dw * sum_i e^{-i w_i t} u(x_j, w_i) A(w_i) summed
/// over the incidence families. Both steps are dense matrix-vector products.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <variant>
#include <vector>

#include "stringwave/error.hpp"
#include "stringwave/freqdomain.hpp"
#include "stringwave/model.hpp"

namespace stringwave {

inline constexpr double default_imaginary_tolerance = 1e-6;

struct SpectralAmplitudes {
  std::vector<cplx> plus;  // A_+(w_i), or the single family A(w_i) for the anchor
  std::vector<cplx> minus; // A_-(w_i); empty for the anchor
  FrequencyGrid grid;

  bool single_family() const noexcept { return minus.empty(); }
};

/// Frequency-domain solutions sampled on (x_j, w_i), rows x columns.
struct GemOperator {
  SpatialGrid spatial;
  FrequencyGrid frequency;
  StringMedium medium;
  ScattererConfig scatterer;
  Eigen::MatrixXcd U_plus;
  Eigen::MatrixXcd U_minus; // empty for the anchor
  Eigen::MatrixXcd V_plus;
  Eigen::MatrixXcd V_minus;
  Eigen::VectorXd weight; // mu dx, plus M at the scatterer cell

  bool single_family() const noexcept { return U_minus.size() == 0; }
};

inline GemOperator assemble_operator(const SpatialGrid& spatial, const FrequencyGrid& frequency,
                                     const StringMedium& medium,
                                     const ScattererConfig& scatterer) {
  validate(scatterer);
  if (has_scatterer(scatterer) && !spatial.j0())
    throw ValidationError("operator assembly needs a spatial grid with a scatterer cell");
  const auto nx = static_cast<Eigen::Index>(spatial.size());
  const auto nw = static_cast<Eigen::Index>(frequency.size());
  const bool anchored = std::holds_alternative<MassAnchor>(scatterer);

  GemOperator op{spatial, frequency, medium, scatterer, {}, {}, {}, {}, {}};
  op.U_plus.resize(nx, nw);
  op.V_plus.resize(nx, nw);
  if (!anchored) {
    op.U_minus.resize(nx, nw);
    op.V_minus.resize(nx, nw);
  }
  const auto xs = spatial.midpoints();
  for (Eigen::Index i = 0; i < nw; ++i) {
    const cplx w = frequency[static_cast<std::size_t>(i)];
    const cplx minus_i_w = -I * w;
    if (anchored) {
      const FrequencyDomainField field(w, Incidence::FromPlusInfinityAnchor, medium, scatterer);
      for (Eigen::Index j = 0; j < nx; ++j) op.U_plus(j, i) = field(xs[j]).u;
    } else {
      const FrequencyDomainField plus(w, Incidence::FromMinusInfinity, medium, scatterer);
      const FrequencyDomainField minus(w, Incidence::FromPlusInfinity, medium, scatterer);
      for (Eigen::Index j = 0; j < nx; ++j) {
        op.U_plus(j, i) = plus(xs[j]).u;
        op.U_minus(j, i) = minus(xs[j]).u;
      }
      op.V_minus.col(i) = minus_i_w * op.U_minus.col(i);
    }
    op.V_plus.col(i) = minus_i_w * op.U_plus.col(i);
  }

  op.weight = Eigen::VectorXd::Constant(nx, medium.density() * spatial.dx());
  if (spatial.j0()) op.weight(static_cast<Eigen::Index>(*spatial.j0())) += point_mass(scatterer);
  return op;
}

namespace detail {

/// Lambda applied to grid samples, with the point value standing in for the
/// sample at the scatterer cell in the point-mass term.
inline Eigen::VectorXcd weighted_samples(std::span<const double> samples, double point_value,
                                         const GemOperator& op) {
  const auto n = static_cast<Eigen::Index>(samples.size());
  const double cell = op.medium.density() * op.spatial.dx();
  Eigen::VectorXcd out(n);
  for (Eigen::Index j = 0; j < n; ++j) out(j) = cell * samples[static_cast<std::size_t>(j)];
  if (op.spatial.j0())
    out(static_cast<Eigen::Index>(*op.spatial.j0())) += point_mass(op.scatterer) * point_value;
  return out;
}

inline std::vector<cplx> to_std(const Eigen::VectorXcd& v) {
  return std::vector<cplx>(v.data(), v.data() + v.size());
}

} // namespace detail

/// Amplitudes from initial data sampled on the operator's own spatial grid.
inline SpectralAmplitudes spectral_amplitudes(const InitialCondition& ic, const GemOperator& op) {
  if (ic.displacement.size() != op.spatial.size() || ic.velocity.size() != op.spatial.size())
    throw ValidationError("initial condition and operator use different spatial grids");
  const double norm = 1.0 / (4.0 * pi * op.medium.density() * op.medium.wave_speed());
  const auto lf = detail::weighted_samples(ic.displacement, ic.point_displacement, op);
  const auto lg = detail::weighted_samples(ic.velocity, ic.point_velocity, op);
  const auto nw = static_cast<Eigen::Index>(op.frequency.size());
  Eigen::VectorXd inv_w2(nw);
  for (Eigen::Index i = 0; i < nw; ++i) {
    const double w = op.frequency[static_cast<std::size_t>(i)];
    inv_w2(i) = 1.0 / (w * w);
  }
  auto project = [&](const Eigen::MatrixXcd& U, const Eigen::MatrixXcd& V) {
    Eigen::VectorXcd a = U.adjoint() * lf;
    a += (V.adjoint() * lg).cwiseProduct(inv_w2.cast<cplx>());
    return detail::to_std(norm * a);
  };
  SpectralAmplitudes amps{project(op.U_plus, op.V_plus), {}, op.frequency};
  if (!op.single_family()) amps.minus = project(op.U_minus, op.V_minus);
  return amps;
}

/// Free string amplitudes from the Fourier integrals of f and g directly:
/// A_pm = 1/(4 pi c) int f e^{-+ikx} dx + i/(4 pi w c) int g e^{-+ikx} dx.
inline SpectralAmplitudes spectral_amplitudes_free(const InitialCondition& ic,
                                                   const SpatialGrid& spatial,
                                                   const FrequencyGrid& frequency,
                                                   const StringMedium& medium) {
  if (ic.displacement.size() != spatial.size() || ic.velocity.size() != spatial.size())
    throw ValidationError("initial condition does not match the spatial grid");
  const double c = medium.wave_speed();
  const double dx = spatial.dx();
  SpectralAmplitudes amps{std::vector<cplx>(frequency.size()),
                          std::vector<cplx>(frequency.size()), frequency};
  for (std::size_t i = 0; i < frequency.size(); ++i) {
    const double w = frequency[i];
    const double k = w / c;
    cplx fplus{}, fminus{}, gplus{}, gminus{};
    for (std::size_t j = 0; j < spatial.size(); ++j) {
      const cplx e = std::exp(-I * k * spatial[j]);
      fplus += ic.displacement[j] * e;
      fminus += ic.displacement[j] * std::conj(e);
      gplus += ic.velocity[j] * e;
      gminus += ic.velocity[j] * std::conj(e);
    }
    amps.plus[i] = dx * (fplus / (4.0 * pi * c) + I * gplus / (4.0 * pi * w * c));
    amps.minus[i] = dx * (fminus / (4.0 * pi * c) + I * gminus / (4.0 * pi * w * c));
  }
  return amps;
}

inline SpectralAmplitudes spectral_amplitudes_mass_spring(const InitialCondition& ic,
                                                          const SpatialGrid& spatial,
                                                          const FrequencyGrid& frequency,
                                                          const StringMedium& medium,
                                                          const MassSpring& scatterer) {
  return spectral_amplitudes(ic, assemble_operator(spatial, frequency, medium, scatterer));
}

inline SpectralAmplitudes spectral_amplitude_anchor(const InitialCondition& ic,
                                                    const SpatialGrid& spatial,
                                                    const FrequencyGrid& frequency,
                                                    const StringMedium& medium,
                                                    const MassAnchor& scatterer) {
  if (spatial.left_boundary() != LeftBoundary::Anchored ||
      std::abs(spatial.x_min() + scatterer.offset) > 1e-12 * scatterer.offset)
    throw ValidationError("anchor amplitudes need a grid starting at the anchor");
  return spectral_amplitudes(ic, assemble_operator(spatial, frequency, medium, scatterer));
}

/// Displacement and velocity at time t on the operator's spatial grid.
inline Snapshot evolve_gem(const GemOperator& op, const SpectralAmplitudes& amps, double t,
                           double tol_im = default_imaginary_tolerance) {
  const auto nw = static_cast<Eigen::Index>(op.frequency.size());
  if (amps.plus.size() != op.frequency.size() ||
      amps.single_family() != op.single_family() ||
      std::abs(amps.grid.dw() - op.frequency.dw()) > 1e-15 * op.frequency.dw())
    throw ValidationError("amplitudes and operator were built on different frequency grids");

  Eigen::VectorXcd phase(nw);
  for (Eigen::Index i = 0; i < nw; ++i)
    phase(i) = std::exp(-I * op.frequency[static_cast<std::size_t>(i)] * t);
  auto weighted = [&](const std::vector<cplx>& a) {
    return Eigen::Map<const Eigen::VectorXcd>(a.data(), nw).cwiseProduct(phase).eval();
  };
  const double dw = op.frequency.dw();
  const Eigen::VectorXcd ap = weighted(amps.plus);
  Eigen::VectorXcd u = dw * (op.U_plus * ap);
  Eigen::VectorXcd v = dw * (op.V_plus * ap);
  if (!op.single_family()) {
    const Eigen::VectorXcd am = weighted(amps.minus);
    u += dw * (op.U_minus * am);
    v += dw * (op.V_minus * am);
  }

  // Size of the individual quadrature terms; the realness check is relative to it.
  const Eigen::VectorXd mag_a = Eigen::Map<const Eigen::VectorXcd>(amps.plus.data(), nw).cwiseAbs();
  Eigen::VectorXd mag_u = op.U_plus.cwiseAbs() * mag_a;
  Eigen::VectorXd mag_v = op.V_plus.cwiseAbs() * mag_a;
  if (!op.single_family()) {
    const Eigen::VectorXd mag_m = Eigen::Map<const Eigen::VectorXcd>(amps.minus.data(), nw).cwiseAbs();
    mag_u += op.U_minus.cwiseAbs() * mag_m;
    mag_v += op.V_minus.cwiseAbs() * mag_m;
  }

  Snapshot snap;
  snap.time = t;
  snap.method = Method::Gem;
  snap.positions.assign(op.spatial.midpoints().begin(), op.spatial.midpoints().end());
  snap.displacement = checked_real_part({u.data(), static_cast<std::size_t>(u.size())}, tol_im,
                                        "GEM displacement", dw * mag_u.maxCoeff());
  snap.velocity = checked_real_part({v.data(), static_cast<std::size_t>(v.size())}, tol_im,
                                    "GEM velocity", dw * mag_v.maxCoeff());
  return snap;
}

/// Displacement at one grid cell for many times; avoids evolving the whole grid.
inline std::vector<double> gem_point_series(const GemOperator& op, const SpectralAmplitudes& amps,
                                            std::size_t cell, std::span<const double> times,
                                            double tol_im = default_imaginary_tolerance) {
  if (cell >= op.spatial.size()) throw ValidationError("probe cell outside the spatial grid");
  const auto row = static_cast<Eigen::Index>(cell);
  const double dw = op.frequency.dw();
  std::vector<cplx> values;
  values.reserve(times.size());
  double scale = 0.0;
  for (std::size_t i = 0; i < op.frequency.size(); ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    scale += std::abs(op.U_plus(row, col) * amps.plus[i]);
    if (!op.single_family()) scale += std::abs(op.U_minus(row, col) * amps.minus[i]);
  }
  for (double t : times) {
    cplx sum{};
    for (std::size_t i = 0; i < op.frequency.size(); ++i) {
      const auto col = static_cast<Eigen::Index>(i);
      const cplx phase = std::exp(-I * op.frequency[i] * t);
      sum += op.U_plus(row, col) * amps.plus[i] * phase;
      if (!op.single_family()) sum += op.U_minus(row, col) * amps.minus[i] * phase;
    }
    values.push_back(dw * sum);
  }
  return checked_real_part(values, tol_im, "GEM point series", dw * scale);
}

/// Closed-form free-string solution 1/2 (f(x-ct) + f(x+ct)) + 1/(2c) int g.
/// For a gaussian packet g = +-c f', so the integral is exact.
inline double dalembert(const InitialCondition& ic, const StringMedium& medium,
                        const ScattererConfig& scatterer, double x, double t) {
  if (has_scatterer(scatterer))
    throw ValidationError("d'Alembert's formula applies only to the free string");
  const auto* packet = std::get_if<GaussianPacket>(&ic.tag);
  if (!packet)
    throw ValidationError("d'Alembert's formula needs a closed-form (gaussian packet) initial state");
  const double c = medium.wave_speed();
  const double behind = packet->displacement(x - c * t);
  const double ahead = packet->displacement(x + c * t);
  double velocity_term = 0.0;
  if (packet->direction == Direction::Left) velocity_term = 0.5 * (ahead - behind);
  else if (packet->direction == Direction::Right) velocity_term = 0.5 * (behind - ahead);
  return 0.5 * (behind + ahead) + velocity_term;
}

inline Snapshot dalembert_snapshot(const InitialCondition& ic, const StringMedium& medium,
                                   const ScattererConfig& scatterer, const SpatialGrid& grid,
                                   double t) {
  Snapshot snap;
  snap.time = t;
  snap.method = Method::Dalembert;
  snap.positions.assign(grid.midpoints().begin(), grid.midpoints().end());
  snap.displacement.reserve(grid.size());
  for (double x : grid.midpoints()) snap.displacement.push_back(dalembert(ic, medium, scatterer, x, t));
  return snap;
}

/// Total energy 1/2 int mu v^2 + T u_x^2 dx + 1/2 M v(0)^2 + 1/2 k_s u(0)^2 with
/// midpoint quadrature and finite-difference slopes. The scatterer cell is split
/// into two half cells with one-sided slopes because u_x jumps there.
inline double energy(const Snapshot& snap, const StringMedium& medium,
                     const ScattererConfig& scatterer, const SpatialGrid& grid) {
  const auto n = grid.size();
  if (snap.displacement.size() != n) throw ValidationError("snapshot does not match the grid");
  if (snap.velocity.size() != n) throw ValidationError("energy needs the velocity field");
  const auto& u = snap.displacement;
  const auto& v = snap.velocity;
  const double dx = grid.dx();
  const double T = medium.tension();
  const double mu = medium.density();
  const auto j0 = grid.j0();

  auto slope = [&](std::size_t j) {
    if (n == 1) return 0.0;
    if (j == 0) {
      // u(x_min) = 0 at an anchor: odd reflection across the boundary.
      if (grid.left_boundary() == LeftBoundary::Anchored) return (u[1] + u[0]) / (2.0 * dx);
      return (u[1] - u[0]) / dx;
    }
    if (j == n - 1) return (u[n - 1] - u[n - 2]) / dx;
    return (u[j + 1] - u[j - 1]) / (2.0 * dx);
  };

  double sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double potential;
    if (j0 && j == *j0 && j > 0 && j + 1 < n) {
      const double left = (u[j] - u[j - 1]) / dx;
      const double right = (u[j + 1] - u[j]) / dx;
      potential = 0.5 * (left * left + right * right);
    } else {
      const double s = slope(j);
      potential = s * s;
    }
    sum += mu * v[j] * v[j] + T * potential;
  }
  double e = 0.5 * sum * dx;
  if (j0) {
    e += 0.5 * point_mass(scatterer) * v[*j0] * v[*j0];
    e += 0.5 * point_spring(scatterer) * u[*j0] * u[*j0];
  }
  return e;
}

} // namespace stringwave
