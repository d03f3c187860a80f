// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "stringwave/model.hpp"

using namespace stringwave;

TEST(StringMedium, WaveSpeedIsRecomputed) {
  const StringMedium m(4.0, 9.0);
  EXPECT_EQ(m.wave_speed(), std::sqrt(9.0 / 4.0));
  EXPECT_THROW(StringMedium(0.0, 1.0), ValidationError);
  EXPECT_THROW(StringMedium(1.0, -1.0), ValidationError);
  EXPECT_THROW(StringMedium(NAN, 1.0), ValidationError);
}

TEST(Scatterer, Invariants) {
  EXPECT_NO_THROW(validate(MassSpring{5.0, 0.0}));
  EXPECT_THROW(validate(MassSpring{0.0, 1.0}), ValidationError);
  EXPECT_THROW(validate(MassSpring{1.0, -1.0}), ValidationError);
  EXPECT_THROW(validate(MassAnchor{1.0, 0.0}), ValidationError);
  EXPECT_THROW(validate(MassAnchor{-1.0, 5.0}), ValidationError);
  EXPECT_EQ(point_mass(MassAnchor{2.0, 5.0}), 2.0);
  EXPECT_EQ(point_spring(MassAnchor{2.0, 5.0}), 0.0);
  EXPECT_EQ(scatterer_name(FreeString{}), "free");
}

TEST(SpatialGrid, Fig1Centering) {
  double shift = 0.0;
  const auto g = build_spatial_grid({-10.0, 10.0, 800}, MassSpring{5.0, 80.0}, &shift);
  EXPECT_DOUBLE_EQ(g.dx(), 0.025);
  ASSERT_TRUE(g.j0());
  EXPECT_EQ(*g.j0(), 400u);
  EXPECT_EQ(g[400], 0.0);
  EXPECT_LE(std::abs(shift), 0.5 * g.dx() * (1.0 + 1e-12));
  EXPECT_NEAR(g[401] - g[399], 2.0 * g.dx(), 1e-12);
}

TEST(SpatialGrid, SingleCellIsCentered) {
  double shift = 0.0;
  const auto g = build_spatial_grid({0.0, 1.0, 1}, MassSpring{1.0, 1.0}, &shift);
  EXPECT_EQ(g.size(), 1u);
  EXPECT_EQ(g[0], 0.0);
  EXPECT_DOUBLE_EQ(shift, -0.5);
}

TEST(SpatialGrid, Errors) {
  EXPECT_THROW(build_spatial_grid({-1.0, 1.0, 0}, FreeString{}), ValidationError);
  EXPECT_THROW(build_spatial_grid({1.0, -1.0, 10}, FreeString{}), ValidationError);
  EXPECT_THROW(build_spatial_grid({1.0, 2.0, 10}, MassSpring{1.0, 1.0}), ValidationError);
  EXPECT_THROW(build_spatial_grid({-4.0, 15.0, 800}, MassAnchor{1.0, 5.0}), ValidationError);
}

TEST(SpatialGrid, AnchoredStartsAtAnchor) {
  double requested = 0.0;
  const auto g = build_spatial_grid({-5.0, 15.0, 800}, MassAnchor{1.0, 5.0}, nullptr, &requested);
  EXPECT_DOUBLE_EQ(g.x_min(), -5.0);
  EXPECT_EQ(g.left_boundary(), LeftBoundary::Anchored);
  EXPECT_DOUBLE_EQ(requested, 0.025);
  ASSERT_TRUE(g.j0());
  EXPECT_EQ(g[*g.j0()], 0.0);
  // The mass midpoint sits exactly (j0 + 1/2) cells from the anchor.
  EXPECT_NEAR(-5.0 + (*g.j0() + 0.5) * g.dx(), 0.0, 1e-12);
  for (double x : g.midpoints()) EXPECT_GT(x, -5.0);
  EXPECT_THROW(extend_grid(g, 1, 0), ValidationError);
}

TEST(SpatialGrid, RandomBoundsKeepInvariants) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> lo(-20.0, -0.01), hi(0.01, 20.0);
  std::uniform_int_distribution<int> cells(2, 3000);
  for (int trial = 0; trial < 200; ++trial) {
    const GridSpec spec{lo(rng), hi(rng), static_cast<std::size_t>(cells(rng))};
    double shift = 0.0;
    const auto g = build_spatial_grid(spec, MassSpring{1.0, 1.0}, &shift);
    ASSERT_TRUE(g.j0());
    EXPECT_LT(std::abs(g[*g.j0()]), 1e-12);
    EXPECT_LE(std::abs(shift), 0.5 * g.dx() * (1.0 + 1e-12));
    EXPECT_NEAR(g.dx(), (spec.upper - spec.lower) / spec.n_cells, 1e-15);
  }
}

TEST(FrequencyGrid, Fig1HasNoZeroMidpointAndPairs) {
  const auto w = build_frequency_grid({-20.0, 20.0, 799});
  EXPECT_DOUBLE_EQ(w.dw(), 40.0 / 799.0);
  double min_abs = 1e300;
  for (double x : w.midpoints()) min_abs = std::min(min_abs, std::abs(x));
  EXPECT_GE(min_abs, 0.5 * w.dw() * (1.0 - 1e-12));
  ASSERT_EQ(w.size() % 2, 0u);
  for (std::size_t i = 0; i < w.size(); ++i)
    EXPECT_NEAR(w[i], -w[w.size() - 1 - i], 1e-12);
  EXPECT_LE(std::abs(w.w_min() + 20.0), w.dw());
}

TEST(FrequencyGrid, RandomBoundsAvoidZero) {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> lo(-30.0, -0.1), hi(0.1, 30.0);
  std::uniform_int_distribution<int> cells(3, 2500);
  for (int trial = 0; trial < 200; ++trial) {
    const GridSpec spec{lo(rng), hi(rng), static_cast<std::size_t>(cells(rng))};
    const auto w = build_frequency_grid(spec);
    for (double x : w.midpoints()) ASSERT_GE(std::abs(x), 0.5 * w.dw() * (1.0 - 1e-9));
    EXPECT_LE(std::abs(w.w_min() - spec.lower), 1.5 * w.dw() * (1.0 + 1e-12)); // shift plus one trimmed cell
  }
  EXPECT_THROW(build_frequency_grid({-1.0, 1.0, 0}), ValidationError);
  EXPECT_NO_THROW(FrequencyGrid(-1.0, 1.0, 2));
}

TEST(FrequencyGrid, RejectsZeroMidpoint) {
  EXPECT_THROW(FrequencyGrid(-1.5, 1.0, 3), ValidationError);
}

TEST(InitialCondition, GaussianPacketLeft) {
  const StringMedium m(1.0, 4.0); // c = 2
  const auto g = build_spatial_grid({-10.0, 10.0, 800}, FreeString{});
  const GaussianPacket p{5.0, 1.0, 4.0, Direction::Left};
  const auto ic = sample_initial_condition(p, g, m);
  for (std::size_t j = 0; j < g.size(); j += 37) {
    const double x = g[j];
    EXPECT_DOUBLE_EQ(ic.displacement[j], std::exp(-(x - 5) * (x - 5)) * std::cos(4 * x));
    const double h = 1e-6;
    const double fd = (p.displacement(x + h) - p.displacement(x - h)) / (2 * h);
    EXPECT_NEAR(ic.velocity[j], 2.0 * fd, 1e-7);
  }
  EXPECT_DOUBLE_EQ(ic.point_displacement, std::exp(-25.0));
}

TEST(InitialCondition, PointImpulseAndStatic) {
  const StringMedium m(1.0, 1.0);
  const auto g = build_spatial_grid({-10.0, 10.0, 800}, MassSpring{5.0, 80.0});
  const auto imp = sample_initial_condition(PointImpulse{1.0}, g, m);
  for (std::size_t j = 0; j < g.size(); ++j) {
    EXPECT_EQ(imp.displacement[j], 0.0);
    EXPECT_EQ(imp.velocity[j], 0.0);
  }
  EXPECT_EQ(imp.point_velocity, 1.0);
  const auto st = sample_initial_condition(GaussianPacket{-2.5, 1.0, 0.0, Direction::Static}, g, m);
  for (double v : st.velocity) EXPECT_EQ(v, 0.0);
  EXPECT_DOUBLE_EQ(st.point_displacement, std::exp(-6.25));
}

TEST(InitialCondition, DeterministicAndCustom) {
  const StringMedium m(1.0, 1.0);
  const auto g = build_spatial_grid({-10.0, 10.0, 800}, MassSpring{5.0, 80.0});
  const GaussianPacket p{5.0, 1.0, 4.0, Direction::Left};
  const auto a = sample_initial_condition(p, g, m);
  const auto b = sample_initial_condition(p, g, m);
  EXPECT_EQ(a.displacement, b.displacement);
  EXPECT_EQ(a.velocity, b.velocity);

  CustomSamples c{std::vector<double>(g.size(), 0.0), std::vector<double>(g.size(), 0.0), {}, {}};
  c.displacement[*g.j0()] = 3.0;
  const auto ic = sample_initial_condition(c, g, m);
  EXPECT_EQ(ic.point_displacement, 3.0);
  c.velocity.pop_back();
  EXPECT_THROW(sample_initial_condition(c, g, m), ValidationError);
}

TEST(Snapshot, ImaginaryResidueIsChecked) {
  const std::vector<cplx> ok{{1.0, 1e-9}, {-2.0, 0.0}};
  EXPECT_EQ(checked_real_part(ok, 1e-6, "t"), (std::vector<double>{1.0, -2.0}));
  const std::vector<cplx> bad{{1.0, 1e-3}};
  EXPECT_THROW(checked_real_part(bad, 1e-6, "t"), ImaginaryResidueError);
  EXPECT_NO_THROW(checked_real_part(bad, 1e-6, "t", 1e4));
}

TEST(SpatialGrid, ExtensionKeepsAlignment) {
  const auto g = build_spatial_grid({-10.0, 10.0, 800}, MassSpring{5.0, 80.0});
  const auto e = extend_grid(g, 100, 50);
  EXPECT_EQ(e.size(), 950u);
  EXPECT_EQ(*e.j0(), 500u);
  for (std::size_t j = 0; j < g.size(); ++j) EXPECT_NEAR(e[j + 100], g[j], 1e-12);
}
