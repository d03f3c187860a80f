// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "stringwave/gem.hpp"
#include "stringwave/sem.hpp"

using namespace stringwave;

namespace {

const StringMedium unit(1.0, 1.0);
const MassSpring fig1_ms{5.0, 80.0};
const MassAnchor fig4_anchor{1.0, 5.0};

// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
}

// <Phi, Psi> over (-L, 0) by composite Gauss-Legendre, plus the point-mass term.
cplx anchor_normalization_quadrature(const ResonanceMode& m) {
  std::vector<double> gx, gw;
  gauss_legendre(16, gx, gw);
  const double L = fig4_anchor.offset;
  const int panels = 64;
  const double h = L / panels;
  const cplx rate = -I * m.omega, adj_rate = -I * std::conj(m.omega);
  cplx sum{};
  for (int p = 0; p < panels; ++p) {
    const double a = -L + p * h;
    for (std::size_t q = 0; q < gx.size(); ++q) {
      const double x = a + 0.5 * h * (gx[q] + 1.0);
      const cplx integrand = unit.tension() * m.resonant_slope(x) * std::conj(m.absorbing_slope(x)) +
                             unit.density() * rate * m.resonant(x) * std::conj(adj_rate * m.absorbing(x));
      sum += 0.5 * h * gw[q] * integrand;
    }
  }
  return sum + fig4_anchor.mass * rate * m.resonant(0.0) * std::conj(adj_rate * m.absorbing(0.0));
}

AnchorPoleSearch fig4_poles() { return poles_anchor(unit, fig4_anchor, -9, 8); }

} // namespace

TEST(Newton, Quadratic) {
  const auto r = newton_refine([](cplx z) { return z * z - 1.0; }, [](cplx z) { return 2.0 * z; }, 0.9, 1e-15);
  EXPECT_NEAR(std::abs(r.root - 1.0), 0.0, 1e-14);
  const auto exact = newton_refine([](cplx z) { return z * z - 1.0; }, [](cplx z) { return 2.0 * z; }, 1.0);
  EXPECT_EQ(exact.iterations, 0);
}

TEST(Newton, Failures) {
  // Zero derivative at the start.
  EXPECT_THROW(newton_refine([](cplx z) { return z * z + 1.0; }, [](cplx z) { return 2.0 * z; }, 0.0),
               NonConvergenceError);
  // A real iterate can never reach the roots +-i.
  EXPECT_THROW(newton_refine([](cplx z) { return z * z + 1.0; }, [](cplx z) { return 2.0 * z; }, 0.5,
                             1e-12, 50),
               NonConvergenceError);
}

TEST(PolesMassSpring, Fig1ClosedForm) {
  const auto poles = poles_mass_spring(unit, fig1_ms);
  const cplx expected(std::sqrt(399.0) / 5.0, -0.2);
  EXPECT_LT(std::abs(poles[0].omega - expected), 1e-12);
  EXPECT_LT(std::abs(poles[1].omega - cplx(-expected.real(), expected.imag())), 1e-12);
  for (const auto& p : poles) {
    EXPECT_LT(std::abs(mass_spring_denominator(p.omega, unit, fig1_ms)), 1e-12);
    EXPECT_LT(p.omega.imag(), 0.0);
  }
  EXPECT_LT(std::abs(poles[1].omega + std::conj(poles[0].omega)), 1e-15);
  EXPECT_LT(std::abs(poles[0].normalization - cplx(159.6, -7.99)), 0.01);
  EXPECT_LT(std::abs(poles[0].normalization - (5.0 * poles[0].omega * poles[0].omega + 80.0)), 1e-12);
}

TEST(PolesMassSpring, NoSpringAndDegenerate) {
  const auto poles = poles_mass_spring(unit, MassSpring{2.0, 0.0});
  EXPECT_LT(std::abs(poles[0].omega), 1e-15);
  EXPECT_LT(std::abs(poles[1].omega - cplx(0.0, -1.0)), 1e-15); // -2iT/(cM)
  EXPECT_THROW(poles_mass_spring(unit, MassSpring{1.0, 1.0}), NumericalError);
}

TEST(ModesMassSpring, AbsorbingIsConjugateOfResonant) {
  const auto poles = poles_mass_spring(unit, fig1_ms);
  for (const auto& p : poles)
    for (int i = 0; i < 20; ++i) {
      const double x = -9.5 + i;
      EXPECT_EQ(p.absorbing(x), std::conj(p.resonant(x)));
    }
}

TEST(PolesAnchor, InitialGuessAndRefinement) {
  const cplx g0 = anchor_initial_guess(0, unit, fig4_anchor);
  EXPECT_LT(std::abs(g0 - (cplx(0.0, -1.0) + std::sqrt(1.8)) / 7.0), 1e-15);
  EXPECT_NEAR(g0.real(), 0.19166, 1e-5);
  EXPECT_NEAR(g0.imag(), -0.14286, 1e-5);
  const auto r = newton_refine([](cplx k) { return anchor_resonance_function(k, unit, fig4_anchor); },
                               [](cplx k) { return anchor_resonance_slope(k, unit, fig4_anchor); }, pi / 5.0);
  EXPECT_LT(std::abs(anchor_resonance_function(r.root, unit, fig4_anchor)), 1e-10);
}

TEST(PolesAnchor, SlopeMatchesFiniteDifference) {
  for (cplx k : {cplx(0.3, -0.1), cplx(2.0, -0.02), cplx(-1.1, -0.5)}) {
    const double h = 1e-6;
    const cplx fd = (anchor_resonance_function(k + h, unit, fig4_anchor) -
                     anchor_resonance_function(k - h, unit, fig4_anchor)) / (2.0 * h);
    EXPECT_LT(std::abs(fd - anchor_resonance_slope(k, unit, fig4_anchor)), 1e-7);
  }
}

TEST(PolesAnchor, Fig4Truncation) {
  const auto s = fig4_poles();
  ASSERT_EQ(s.modes.size(), 18u);
  EXPECT_TRUE(s.failures.empty());
  EXPECT_TRUE(s.duplicates.empty());
  for (const auto& m : s.modes) {
    EXPECT_LT(m.residual, 1e-10);
    EXPECT_LT(m.k.imag(), 0.0);
    if (m.index >= 3) {
      EXPECT_LT(std::abs(m.k.real() - m.index * pi / 5.0), 0.1);
    }
    // Closed under k -> -conj(k).
    const auto it = std::find_if(s.modes.begin(), s.modes.end(), [&](const ResonanceMode& o) {
      return std::abs(o.k + std::conj(m.k)) < 1e-8;
    });
    EXPECT_NE(it, s.modes.end()) << "j=" << m.index;
  }
  EXPECT_LT(std::abs(s.modes.back().k.real() - 8.0 * pi / 5.0), 0.1);
}

TEST(PolesAnchor, FailuresAreReportedPerIndex) {
  PoleSearchOptions opts;
  opts.max_iterations = 1;
  const auto s = poles_anchor(unit, fig4_anchor, 0, 3, opts);
  EXPECT_FALSE(s.failures.empty());
  EXPECT_LT(s.modes.size(), 4u);
  EXPECT_THROW(poles_anchor(unit, fig4_anchor, 2, 1), ValidationError);
}

TEST(NormalizationAnchor, MatchesQuadrature) {
  for (const auto& m : fig4_poles().modes) {
    const cplx closed = normalization(m, unit, fig4_anchor);
    const cplx brute = anchor_normalization_quadrature(m);
    EXPECT_LT(std::abs(closed - brute), 1e-8 * std::max(1.0, std::abs(closed))) << "j=" << m.index;
  }
}

TEST(Normalization, MassOnlyLimit) {
  ResonanceMode m;
  m.omega = cplx(1.0, -0.5);
  EXPECT_EQ(normalization(m, unit, MassSpring{0.0, 7.0}), cplx(7.0));
  EXPECT_THROW(normalization(m, unit, FreeString{}), ValidationError);
}

TEST(ModalCoefficient, PointImpulseClosedForm) {
  const auto grid = build_spatial_grid({-10.0, 10.0, 800}, fig1_ms);
  const auto ic = sample_initial_condition(PointImpulse{1.0}, grid, unit);
  for (const auto& m : poles_mass_spring(unit, fig1_ms)) {
    const auto c = modal_coefficient(ic, m, unit, fig1_ms, grid);
    const cplx expected = 5.0 * I * m.omega / (5.0 * m.omega * m.omega + 80.0);
    EXPECT_LT(std::abs(c.value - expected), 1e-14);
    EXPECT_TRUE(c.warnings.empty());
  }
}

TEST(ModalCoefficient, PointImpulseMatchesMassOscillator) {
  // The mass obeys M u'' + 2 sqrt(mu T) u' + k_s u = 0 with u(0) = 0, u'(0) = 1.
  const auto grid = build_spatial_grid({-10.0, 10.0, 800}, fig1_ms);
  const auto ic = sample_initial_condition(PointImpulse{1.0}, grid, unit);
  auto arr = poles_mass_spring(unit, fig1_ms);
  std::vector<ResonanceMode> modes(arr.begin(), arr.end());
  attach_coefficients(modes, ic, unit, fig1_ms, grid);
  const double gamma = std::sqrt(unit.density() * unit.tension()) / fig1_ms.mass;
  const double omega = std::sqrt(fig1_ms.spring * fig1_ms.mass - unit.density() * unit.tension()) / fig1_ms.mass;
  for (double t = 0.0; t <= 15.0; t += 0.25) {
    const double exact = std::exp(-gamma * t) * std::sin(omega * t) / omega;
    EXPECT_NEAR(sem_point_value(modes, 0.0, t), exact, 1e-13) << "t=" << t;
  }
}

TEST(ModalCoefficient, ConjugatePairsForRealData) {
  const auto grid = build_spatial_grid({-10.0, 10.0, 800}, fig1_ms);
  const auto ic = sample_initial_condition(GaussianPacket{5.0, 1.0, 4.0, Direction::Left}, grid, unit);
  const auto ms = poles_mass_spring(unit, fig1_ms);
  const cplx a = modal_coefficient(ic, ms[0], unit, fig1_ms, grid).value;
  const cplx b = modal_coefficient(ic, ms[1], unit, fig1_ms, grid).value;
  EXPECT_LT(std::abs(a - std::conj(b)), 1e-10 * std::abs(a));

  const auto agrid = build_spatial_grid({-5.0, 15.0, 800}, fig4_anchor);
  const auto aic = sample_initial_condition(GaussianPacket{-2.5, 1.0, 0.0, Direction::Static}, agrid, unit);
  const auto modes = fig4_poles().modes;
  for (const auto& m : modes) {
    if (m.index < 0) continue;
    const auto& mirror = *std::find_if(modes.begin(), modes.end(),
                                       [&](const ResonanceMode& o) { return o.index == -m.index - 1; });
    const cplx p = modal_coefficient(aic, m, unit, fig4_anchor, agrid).value;
    const cplx q = modal_coefficient(aic, mirror, unit, fig4_anchor, agrid).value;
    EXPECT_LT(std::abs(p - std::conj(q)), 1e-10 * std::max(std::abs(p), 1e-300));
  }
}

TEST(ModalCoefficient, ZeroDataAndTruncationWarning) {
  const auto grid = build_spatial_grid({-10.0, 10.0, 200}, fig1_ms);
  CustomSamples zero{std::vector<double>(200, 0.0), std::vector<double>(200, 0.0), {}, {}};
  const auto ic = sample_initial_condition(zero, grid, unit);
  const auto m = poles_mass_spring(unit, fig1_ms)[0];
  EXPECT_EQ(modal_coefficient(ic, m, unit, fig1_ms, grid).value, cplx(0.0));

  const auto wide = sample_initial_condition(GaussianPacket{9.0, 2.0, 0.0, Direction::Static}, grid, unit);
  EXPECT_FALSE(modal_coefficient(wide, m, unit, fig1_ms, grid).warnings.empty());

  // The anchor end is a real boundary, not a truncation.
  const auto agrid = build_spatial_grid({-5.0, 15.0, 400}, fig4_anchor);
  const auto near_anchor = sample_initial_condition(GaussianPacket{-4.0, 1.0, 0.0, Direction::Static}, agrid, unit);
  const auto am = fig4_poles().modes.front();
  EXPECT_TRUE(modal_coefficient(near_anchor, am, unit, fig4_anchor, agrid).warnings.empty());
}

TEST(EvolveSem, Preconditions) {
  const auto grid = build_spatial_grid({-10.0, 10.0, 200}, fig1_ms);
  const auto none = evolve_sem({}, 2.0, grid);
  for (double u : none.displacement) EXPECT_EQ(u, 0.0);
  auto arr = poles_mass_spring(unit, fig1_ms);
  std::vector<ResonanceMode> modes(arr.begin(), arr.end());
  EXPECT_THROW(evolve_sem(modes, 1.0, grid), ValidationError);
  const auto ic = sample_initial_condition(PointImpulse{1.0}, grid, unit);
  attach_coefficients(modes, ic, unit, fig1_ms, grid);
  EXPECT_THROW(evolve_sem(modes, -1.0, grid), ValidationError);
  EXPECT_NO_THROW(evolve_sem(modes, 1.0, grid));
  modes.pop_back();
  EXPECT_THROW(evolve_sem(modes, 1.0, grid), ImaginaryResidueError);
}

TEST(EvolveSem, AgreesWithGemAtTheMass) {
  const auto grids = build_grids({-10.0, 10.0, 800}, {-20.0, 20.0, 799}, fig1_ms);
  const auto ic = sample_initial_condition(PointImpulse{1.0}, grids.spatial, unit);
  const auto op = assemble_operator(grids.spatial, grids.frequency, unit, fig1_ms);
  const auto amps = spectral_amplitudes(ic, op);
  auto arr = poles_mass_spring(unit, fig1_ms);
  std::vector<ResonanceMode> modes(arr.begin(), arr.end());
  attach_coefficients(modes, ic, unit, fig1_ms, grids.spatial);
  std::vector<double> times;
  for (int i = 0; i <= 140; ++i) times.push_back(1.0 + 0.1 * i);
  const auto gem = gem_point_series(op, amps, *grids.spatial.j0(), times);
  double diff = 0.0, peak = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    diff = std::max(diff, std::abs(sem_point_value(modes, 0.0, times[i]) - gem[i]));
    peak = std::max(peak, std::abs(gem[i]));
  }
  EXPECT_LT(diff / peak, 0.05);
}
