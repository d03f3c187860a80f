// SPDX-License-Identifier: Apache-2.0
#pragma once

/// Domain types shared by the frequency-domain, GEM and SEM solvers:
/// the string, the scatterer, the spatial and frequency grids, initial data
/// and time-domain snapshots.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "stringwave/error.hpp"

namespace stringwave {

using cplx = std::complex<double>;

inline constexpr double pi = 3.14159265358979323846;
inline constexpr cplx I{0.0, 1.0};

/// A string with constant mass density and tension.
class StringMedium {
public:
  StringMedium(double density, double tension) : density_(density), tension_(tension) {
    if (!(density > 0.0) || !std::isfinite(density))
      throw ValidationError("string density must be positive and finite");
    if (!(tension > 0.0) || !std::isfinite(tension))
      throw ValidationError("string tension must be positive and finite");
  }

  double density() const noexcept { return density_; }
  double tension() const noexcept { return tension_; }
  double wave_speed() const noexcept { return std::sqrt(tension_ / density_); }

private:
  double density_;
  double tension_;
};

struct FreeString {};

/// Point mass at x = 0 attached to a spring.
struct MassSpring {
  double mass = 0.0;
  double spring = 0.0;
};

/// Point mass at x = 0 with the string anchored at x = -offset.
struct MassAnchor {
  double mass = 0.0;
  double offset = 0.0;
};

using ScattererConfig = std::variant<FreeString, MassSpring, MassAnchor>;

inline void validate(const ScattererConfig& scatterer) {
  if (const auto* ms = std::get_if<MassSpring>(&scatterer)) {
    if (!(ms->mass > 0.0) || !std::isfinite(ms->mass))
      throw ValidationError("mass-spring scatterer requires mass > 0");
    if (!(ms->spring >= 0.0) || !std::isfinite(ms->spring))
      throw ValidationError("mass-spring scatterer requires spring >= 0");
  } else if (const auto* ma = std::get_if<MassAnchor>(&scatterer)) {
    if (!(ma->mass > 0.0) || !std::isfinite(ma->mass))
      throw ValidationError("mass-anchor scatterer requires mass > 0");
    if (!(ma->offset > 0.0) || !std::isfinite(ma->offset))
      throw ValidationError("mass-anchor scatterer requires offset L > 0");
  }
}

inline bool has_scatterer(const ScattererConfig& s) noexcept {
  return !std::holds_alternative<FreeString>(s);
}

inline double point_mass(const ScattererConfig& s) noexcept {
  if (const auto* ms = std::get_if<MassSpring>(&s)) return ms->mass;
  if (const auto* ma = std::get_if<MassAnchor>(&s)) return ma->mass;
  return 0.0;
}

inline double point_spring(const ScattererConfig& s) noexcept {
  if (const auto* ms = std::get_if<MassSpring>(&s)) return ms->spring;
  return 0.0;
}

inline std::string scatterer_name(const ScattererConfig& s) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, FreeString>) return "free";
        else if constexpr (std::is_same_v<T, MassSpring>) return "mass_spring";
        else return "mass_anchor";
      },
      s);
}

/// Bounds and cell count requested for a uniform midpoint grid.
struct GridSpec {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t n_cells = 0;
};

enum class LeftBoundary { Open, Anchored };

/// Uniform cell-centred grid on [x_min, x_max]. Midpoints are stored so every
/// consumer sees identical abscissae.
class SpatialGrid {
public:
  SpatialGrid(double x_min, double dx, std::size_t n_cells, std::optional<std::size_t> j0,
              LeftBoundary left = LeftBoundary::Open)
      : x_min_(x_min), dx_(dx), j0_(j0), left_(left) {
    if (n_cells == 0) throw ValidationError("spatial grid needs at least one cell");
    if (!(dx > 0.0) || !std::isfinite(dx) || !std::isfinite(x_min))
      throw ValidationError("spatial grid cell width must be positive and finite");
    if (j0 && *j0 >= n_cells) throw ValidationError("scatterer index outside the spatial grid");
    midpoints_.resize(n_cells);
    for (std::size_t j = 0; j < n_cells; ++j)
      midpoints_[j] = x_min + (static_cast<double>(j) + 0.5) * dx;
    // The scatterer sits exactly on its midpoint, not within rounding of it.
    if (j0) midpoints_[*j0] = 0.0;
  }

  double x_min() const noexcept { return x_min_; }
  double x_max() const noexcept { return x_min_ + static_cast<double>(size()) * dx_; }
  double dx() const noexcept { return dx_; }
  std::size_t size() const noexcept { return midpoints_.size(); }
  std::span<const double> midpoints() const noexcept { return midpoints_; }
  double operator[](std::size_t j) const { return midpoints_[j]; }
  std::optional<std::size_t> j0() const noexcept { return j0_; }
  LeftBoundary left_boundary() const noexcept { return left_; }

private:
  double x_min_;
  double dx_;
  std::optional<std::size_t> j0_;
  LeftBoundary left_;
  std::vector<double> midpoints_;
};

/// Uniform frequency midpoint grid; never contains omega = 0.
class FrequencyGrid {
public:
  FrequencyGrid(double w_min, double dw, std::size_t n_cells) : w_min_(w_min), dw_(dw) {
    if (n_cells == 0) throw ValidationError("frequency grid needs at least one cell");
    if (!(dw > 0.0) || !std::isfinite(dw) || !std::isfinite(w_min))
      throw ValidationError("frequency grid cell width must be positive and finite");
    midpoints_.resize(n_cells);
    for (std::size_t i = 0; i < n_cells; ++i)
      midpoints_[i] = w_min + (static_cast<double>(i) + 0.5) * dw;
    for (double w : midpoints_)
      if (std::abs(w) < 1e-9 * dw) throw ValidationError("frequency grid contains omega = 0");
  }

  double w_min() const noexcept { return w_min_; }
  double w_max() const noexcept { return w_min_ + static_cast<double>(size()) * dw_; }
  double dw() const noexcept { return dw_; }
  std::size_t size() const noexcept { return midpoints_.size(); }
  std::span<const double> midpoints() const noexcept { return midpoints_; }
  double operator[](std::size_t i) const { return midpoints_[i]; }

private:
  double w_min_;
  double dw_;
  std::vector<double> midpoints_;
};

struct GridBuild {
  SpatialGrid spatial;
  FrequencyGrid frequency;
  double spatial_shift = 0.0;   // applied to both spatial bounds
  double frequency_shift = 0.0; // applied to both frequency bounds
  double dx_requested = 0.0;    // differs from spatial.dx() only for anchored grids
  std::vector<std::string> notes;
};

namespace detail {

inline void check_spec(const GridSpec& spec, const char* what) {
  if (spec.n_cells == 0) throw ValidationError(std::string(what) + " grid: n_cells must be >= 1");
  if (!std::isfinite(spec.lower) || !std::isfinite(spec.upper))
    throw ValidationError(std::string(what) + " grid: bounds must be finite");
  if (!(spec.upper > spec.lower))
    throw ValidationError(std::string(what) + " grid: bounds are inverted or empty");
}

} // namespace detail

/// Spatial grid for a scatterer configuration. With a point scatterer the bounds
/// are shifted (by at most dx/2) so that one midpoint lands on x = 0. Anchored
/// grids keep x_min = -L and instead rescale dx minimally.
inline SpatialGrid build_spatial_grid(const GridSpec& spec, const ScattererConfig& scatterer,
                                      double* shift_out = nullptr, double* dx_requested = nullptr) {
  detail::check_spec(spec, "spatial");
  validate(scatterer);
  const auto n = spec.n_cells;
  const double dx = (spec.upper - spec.lower) / static_cast<double>(n);
  if (dx_requested) *dx_requested = dx;
  if (shift_out) *shift_out = 0.0;

  if (const auto* anchor = std::get_if<MassAnchor>(&scatterer)) {
    const double L = anchor->offset;
    if (std::abs(spec.lower + L) > 1e-12 * L)
      throw ValidationError("mass-anchor grid must start at the anchor x_min = -L");
    // Need L = (j0 + 1/2) dx for the mass to sit on a midpoint.
    const double cells_to_mass = std::max(0.0, std::round(L / dx - 0.5));
    const auto j0 = static_cast<std::size_t>(cells_to_mass);
    if (j0 >= n) throw ValidationError("mass-anchor grid does not reach the mass at x = 0");
    const double dx_fit = L / (cells_to_mass + 0.5);
    return SpatialGrid(-L, dx_fit, n, j0, LeftBoundary::Anchored);
  }

  if (!has_scatterer(scatterer)) return SpatialGrid(spec.lower, dx, n, std::nullopt);

  if (!(spec.lower <= 0.0 && 0.0 <= spec.upper))
    throw ValidationError("scatterer position x = 0 lies outside the spatial bounds");
  const double fractional = -spec.lower / dx - 0.5;
  const double nearest = std::clamp(std::round(fractional), 0.0, static_cast<double>(n - 1));
  const auto j0 = static_cast<std::size_t>(nearest);
  const double shift = -(spec.lower + (nearest + 0.5) * dx);
  if (shift_out) *shift_out = shift;
  return SpatialGrid(spec.lower + shift, dx, n, j0);
}

/// Frequency grid whose cell edges are aligned with omega = 0, so 0 is never a
/// midpoint and min |omega_i| >= dw/2. Bounds move by at most dw/2. When that
/// leaves one more cell on one side (odd n over symmetric bounds), the unpaired
/// outer cell is dropped so every midpoint has its negative on the grid.
inline FrequencyGrid build_frequency_grid(const GridSpec& spec, double* shift_out = nullptr,
                                          bool* trimmed_out = nullptr) {
  detail::check_spec(spec, "frequency");
  auto n = spec.n_cells;
  const double dw = (spec.upper - spec.lower) / static_cast<double>(n);
  double shift = 0.0;
  if (spec.lower < 0.0 && spec.upper > 0.0) {
    shift = dw * std::round(spec.lower / dw) - spec.lower;
  } else if (std::abs(spec.lower) < 0.5 * dw || std::abs(spec.upper) < 0.5 * dw) {
    // Grid touching zero from one side: the nearest bound goes onto zero.
    shift = std::abs(spec.lower) < std::abs(spec.upper) ? -spec.lower : -spec.upper;
  }
  if (std::abs(shift) < 1e-14 * dw) shift = 0.0;
  if (shift_out) *shift_out = shift;
  if (trimmed_out) *trimmed_out = false;
  double w_min = spec.lower + shift;
  if (w_min < 0.0 && n >= 3) {
    const auto below = static_cast<std::size_t>(std::llround(-w_min / dw));
    if (below <= n) {
      const auto above = n - below;
      if (below == above + 1) {
        w_min += dw;
        --n;
        if (trimmed_out) *trimmed_out = true;
      } else if (above == below + 1) {
        --n;
        if (trimmed_out) *trimmed_out = true;
      }
    }
  }
  return FrequencyGrid(w_min, dw, n);
}

inline GridBuild build_grids(const GridSpec& spatial, const GridSpec& frequency,
                             const ScattererConfig& scatterer) {
  double xshift = 0.0, wshift = 0.0, dx_req = 0.0;
  bool trimmed = false;
  auto x = build_spatial_grid(spatial, scatterer, &xshift, &dx_req);
  auto w = build_frequency_grid(frequency, &wshift, &trimmed);
  GridBuild out{std::move(x), std::move(w), xshift, wshift, dx_req, {}};
  if (xshift != 0.0)
    out.notes.push_back("spatial bounds shifted by " + std::to_string(xshift) +
                        " m to place a midpoint on the scatterer");
  if (std::abs(out.spatial.dx() - dx_req) > 1e-15 * dx_req)
    out.notes.push_back("anchored grid cell width adjusted from " + std::to_string(dx_req) +
                        " to " + std::to_string(out.spatial.dx()) +
                        " m to place a midpoint on the mass");
  if (wshift != 0.0)
    out.notes.push_back("frequency bounds shifted by " + std::to_string(wshift) +
                        " 1/s to keep omega = 0 off the midpoints");
  if (trimmed)
    out.notes.push_back("frequency grid trimmed to " + std::to_string(out.frequency.size()) +
                        " cells on [" + std::to_string(out.frequency.w_min()) + ", " +
                        std::to_string(out.frequency.w_max()) + "] so midpoints pair as +-omega");
  return out;
}

/// Same alignment and cell width, with extra cells on either side. Used to
/// evaluate fields beyond the window holding the initial data.
inline SpatialGrid extend_grid(const SpatialGrid& grid, std::size_t extra_left,
                               std::size_t extra_right) {
  if (grid.left_boundary() == LeftBoundary::Anchored && extra_left != 0)
    throw ValidationError("cannot extend an anchored grid past the anchor");
  std::optional<std::size_t> j0;
  if (grid.j0()) j0 = *grid.j0() + extra_left;
  return SpatialGrid(grid.x_min() - static_cast<double>(extra_left) * grid.dx(), grid.dx(),
                     grid.size() + extra_left + extra_right, j0, grid.left_boundary());
}

enum class Direction { Left, Right, Static };

/// f(x) = exp(-((x - center)/width)^2) cos(carrier x); g = +c f' (left-travelling),
/// -c f' (right-travelling) or 0 (static).
struct GaussianPacket {
  double center = 0.0;
  double width = 1.0;
  double carrier = 0.0;
  Direction direction = Direction::Static;

  double displacement(double x) const {
    const double s = (x - center) / width;
    return std::exp(-s * s) * std::cos(carrier * x);
  }
  double slope(double x) const {
    const double s = (x - center) / width;
    const double env = std::exp(-s * s);
    return env * (-2.0 * s / width * std::cos(carrier * x) - carrier * std::sin(carrier * x));
  }
  double velocity(double x, double c) const {
    switch (direction) {
    case Direction::Left: return c * slope(x);
    case Direction::Right: return -c * slope(x);
    case Direction::Static: break;
    }
    return 0.0;
  }
};

/// Impulse delivered to the point mass only: g(0) = amplitude, f = 0.
struct PointImpulse {
  double amplitude = 1.0;
};

struct CustomSamples {
  std::vector<double> displacement;
  std::vector<double> velocity;
  std::optional<double> point_displacement;
  std::optional<double> point_velocity;
};

using InitialTag = std::variant<GaussianPacket, PointImpulse, CustomSamples>;

struct InitialCondition {
  std::vector<double> displacement; // f(x_j)
  std::vector<double> velocity;     // g(x_j)
  double point_displacement = 0.0;  // f(0)
  double point_velocity = 0.0;      // g(0)
  InitialTag tag;
};

inline InitialCondition sample_initial_condition(const InitialTag& tag, const SpatialGrid& grid,
                                                 const StringMedium& medium) {
  const auto n = grid.size();
  InitialCondition ic{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), 0.0, 0.0, tag};
  const double c = medium.wave_speed();
  std::visit(
      [&](const auto& t) {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, GaussianPacket>) {
          if (!(t.width > 0.0)) throw ValidationError("gaussian packet width must be positive");
          for (std::size_t j = 0; j < n; ++j) {
            ic.displacement[j] = t.displacement(grid[j]);
            ic.velocity[j] = t.velocity(grid[j], c);
          }
          ic.point_displacement = t.displacement(0.0);
          ic.point_velocity = t.velocity(0.0, c);
        } else if constexpr (std::is_same_v<T, PointImpulse>) {
          ic.point_velocity = t.amplitude;
        } else {
          if (t.displacement.size() != n || t.velocity.size() != n)
            throw ValidationError("custom initial samples must have one value per grid cell (" +
                                  std::to_string(n) + ")");
          ic.displacement = t.displacement;
          ic.velocity = t.velocity;
          const auto j0 = grid.j0();
          ic.point_displacement = t.point_displacement.value_or(j0 ? t.displacement[*j0] : 0.0);
          ic.point_velocity = t.point_velocity.value_or(j0 ? t.velocity[*j0] : 0.0);
        }
      },
      tag);
  return ic;
}

enum class Method { Gem, Sem, Dalembert };

inline std::string method_name(Method m) {
  switch (m) {
  case Method::Gem: return "gem";
  case Method::Sem: return "sem";
  case Method::Dalembert: return "dalembert";
  }
  return "unknown";
}

/// Real displacement (and optionally velocity) on the grid at one time.
struct Snapshot {
  double time = 0.0;
  std::vector<double> positions;
  std::vector<double> displacement;
  std::vector<double> velocity; // empty when not computed
  Method method = Method::Gem;
};

/// Real part of a complex field after checking max|Im| <= tol * max(max|Re|, scale).
/// `scale` is the size of the summed terms, for fields that cancel to ~0.
inline std::vector<double> checked_real_part(std::span<const cplx> values, double tol,
                                             const char* what, double scale = 0.0) {
  double max_re = 0.0, max_im = 0.0;
  for (const auto& z : values) {
    max_re = std::max(max_re, std::abs(z.real()));
    max_im = std::max(max_im, std::abs(z.imag()));
  }
  max_re = std::max(max_re, scale);
  if (max_im > tol * max_re && max_im > 1e-300)
    throw ImaginaryResidueError(std::string(what) + ": imaginary residue " + std::to_string(max_im) +
                                " exceeds " + std::to_string(tol) + " x max real part " +
                                std::to_string(max_re));
  std::vector<double> out(values.size());
  std::transform(values.begin(), values.end(), out.begin(), [](const cplx& z) { return z.real(); });
  return out;
}

} // namespace stringwave
