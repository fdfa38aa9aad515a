#include "blayer/boundary_layer.hpp"
#include "blayer/errors.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace blayer;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

LinearTensorField laplace2() { return LinearTensorField::isotropic(PeriodicField::scalar_constant(2, 1.0), 1.0); }

LinearTensorField laminate() {
    return LinearTensorField::isotropic(PeriodicField(2, {0.5}, {TrigTerm{{0.25}, {1, 0}, Phase::Cos}}), 0.25);
}

DataPtr field(PeriodicField f) { return std::make_shared<FieldData>(std::move(f)); }

DataPtr trig(double c0, std::vector<TrigTerm> terms) { return field(PeriodicField(2, {c0}, std::move(terms))); }

}  // namespace

TEST(BoundaryLayer, LaplaceOscillatingDataHasZeroLimit) {
    const auto r = boundary_layer_limit(laplace2(), trig(0.0, {{{1.0}, {1, 0}, Phase::Cos}}), make_rational_direction({0, 1}), 0.0,
                                        MeshSpec{1.0 / 16.0, true}, LimitOptions{});
    EXPECT_TRUE(r.converged) << r.diagnostics;
    EXPECT_NEAR(r.value[0], 0.0, 1e-6);
    EXPECT_LE(r.error_bar, 1e-5);
}

TEST(BoundaryLayer, ConstantDataIsItsOwnLimit) {
    for (const auto& A : {laplace2(), laminate()}) {
        const auto r = boundary_layer_limit(A, field(PeriodicField::scalar_constant(2, -1.25)), make_rational_direction({1, 2}), 0.3,
                                            MeshSpec{1.0 / 8.0, false}, LimitOptions{});
        EXPECT_TRUE(r.converged);
        EXPECT_NEAR(r.value[0], -1.25, 1e-9);
    }
}

TEST(BoundaryLayer, DecayRateAxisDirection) {
    auto p = StripProblem::along(make_rational_direction({0, 1}), 0.0, 4.0, MeshSpec{1.0 / 32.0, true}, laplace2(),
                                 trig(0.0, {{{1.0}, {1, 0}, Phase::Cos}}));
    const auto fit = decay_fit(solve(p), 1.0);
    ASSERT_FALSE(fit.degenerate);
    EXPECT_NEAR(fit.rate, kTwoPi, 0.05 * kTwoPi);
}

TEST(BoundaryLayer, DecayRateOblique) {
    // cos 2πy2 restricted to the line ξ·y = s has period √5 along it, so the layer decays at 2π/√5.
    const auto xi = make_rational_direction({1, 2});
    auto p = StripProblem::along(xi, 0.0, 4.0 * xi.period_bound, MeshSpec{1.0 / 16.0, false}, laplace2(),
                                 trig(0.0, {{{1.0}, {0, 1}, Phase::Cos}}));
    const auto fit = decay_fit(solve(p), xi.period_bound);
    ASSERT_FALSE(fit.degenerate);
    const double expected = kTwoPi / std::sqrt(5.0);
    EXPECT_NEAR(fit.rate, expected, 0.05 * expected);
    EXPECT_NEAR(fit.rate_times_M, kTwoPi, 0.05 * kTwoPi);
}

TEST(BoundaryLayer, ConstantDataGivesDegenerateFit) {
    auto p = StripProblem::along(make_rational_direction({0, 1}), 0.0, 4.0, MeshSpec{1.0 / 16.0, true}, laplace2(),
                                 field(PeriodicField::scalar_constant(2, 2.0)));
    EXPECT_TRUE(decay_fit(solve(p), 1.0).degenerate);
}

TEST(DecayFit, ExactExponential) {
    Vec z, osc;
    for (int i = 0; i < 10; ++i) {
        z.push_back(0.5 * i);
        osc.push_back(3.0 * std::exp(-1.7 * z.back()));
    }
    const auto fit = decay_fit(z, osc, 2.0);
    EXPECT_NEAR(fit.rate, 1.7, 1e-12);
    EXPECT_NEAR(fit.C, 3.0, 1e-12);
    EXPECT_NEAR(fit.rate_times_M, 3.4, 1e-12);
    EXPECT_EQ(fit.points, 10);
    EXPECT_LE(fit.residual, 1e-12);
}

TEST(PhiStar, NonResonantDataHasZeroProfile) {
    // cos 2π(y1 + y2) has mean zero on every horizontal line.
    const auto prof = phi_star_profile(laplace2(), trig(0.0, {{{1.0}, {1, 1}, Phase::Cos}}), make_rational_direction({0, 1}),
                                       MeshSpec{1.0 / 16.0, true}, LimitOptions{}, ProfileOptions{8, 1, 0.0});
    ASSERT_EQ(prof.samples.size(), 8u);
    for (const auto& s : prof.samples) EXPECT_NEAR(s.value[0], 0.0, 1e-6);
    EXPECT_NEAR(prof.mean[0], 0.0, 1e-6);
}

TEST(PhiStar, ResonantDataGivesItsLineAverage) {
    // Along ξ = (0,1) the term cos 2πy2 is constant on each boundary line: c*(s) = 0.2 + cos 2πs.
    const auto prof = phi_star_profile(laplace2(), trig(0.2, {{{1.0}, {0, 1}, Phase::Cos}, {{0.5}, {1, 0}, Phase::Sin}}),
                                       make_rational_direction({0, 1}), MeshSpec{1.0 / 16.0, true}, LimitOptions{},
                                       ProfileOptions{16, 1, 0.0});
    for (std::size_t j = 0; j < prof.s.size(); ++j) EXPECT_NEAR(prof.samples[j].value[0], 0.2 + std::cos(kTwoPi * prof.s[j]), 1e-6);
    EXPECT_NEAR(prof.mean[0], 0.2, 1e-6);
    EXPECT_TRUE(prof.converged);
}

TEST(PhiStar, PropertyShiftPeriodicity) {
    const auto xi = make_rational_direction({1, 1});
    const auto data = trig(0.1, {{{1.0}, {1, 1}, Phase::Cos}, {{0.4}, {1, 0}, Phase::Sin}});
    const MeshSpec mesh{1.0 / 16.0, false};
    for (double s : {0.0, 0.17, 0.4}) {
        const auto a = boundary_layer_limit(laminate(), data, xi, s, mesh, LimitOptions{});
        const auto b = boundary_layer_limit(laminate(), data, xi, s + 1.0 / xi.norm, mesh, LimitOptions{});
        EXPECT_LE(std::abs(a.value[0] - b.value[0]), 2.0 * std::max(a.error_bar, b.error_bar) + 1e-12) << "s " << s;
    }
}

TEST(PhiStar, PropertyComparisonMonotone) {
    const auto xi = make_rational_direction({1, 1});
    const MeshSpec mesh{1.0 / 16.0, false};
    const std::vector<TrigTerm> base{{{1.0}, {1, 1}, Phase::Cos}, {{0.4}, {1, 0}, Phase::Sin}};
    auto lower = trig(0.0, base);
    auto bigger = base;
    bigger.push_back({{0.3}, {0, 1}, Phase::Cos});
    auto upper = trig(0.5, bigger);  // upper − lower = 0.5 + 0.3 cos ≥ 0.2
    for (double s : {0.0, 0.3}) {
        const auto a = boundary_layer_limit(laminate(), lower, xi, s, mesh, LimitOptions{});
        const auto b = boundary_layer_limit(laminate(), upper, xi, s, mesh, LimitOptions{});
        EXPECT_LE(a.value[0], b.value[0] + a.error_bar + b.error_bar);
        EXPECT_GE(b.value[0] - a.value[0], 0.2 - a.error_bar - b.error_bar);
    }
    // same check through the kinked planar operator
    const auto kink = MapPtr(KinkedPlaneMap::reduced2d(0.0));
    auto limit_of = [&](double c0) {
        auto p = StripProblem::planar(1.0, 0.0, MeshSpec{1.0 / 16.0, true}, kink,
                                      trig(c0, {{{1.0}, {1, 0}, Phase::Cos}}));
        p.tau = 1.0 / 32.0;
        LimitOptions o;
        o.ladder = {4.0, 8.0};
        return boundary_layer_limit(p, o);
    };
    const auto lo = limit_of(1.0 / 3.0), hi = limit_of(0.6);
    EXPECT_GT(hi.value[0], lo.value[0]);
}

TEST(PhiStar, CoarseAndFineMeshesAgree) {
    const auto xi = make_rational_direction({0, 1});
    const auto data = trig(0.0, {{{1.0}, {1, 0}, Phase::Cos}, {{0.5}, {0, 1}, Phase::Cos}});
    Vec c;
    for (double h : {1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0}) {
        const auto r = boundary_layer_limit(laminate(), data, xi, 0.1, MeshSpec{h, true}, LimitOptions{});
        ASSERT_TRUE(r.converged);
        c.push_back(r.value[0]);
    }
    const double d1 = std::abs(c[0] - c[1]), d2 = std::abs(c[1] - c[2]);
    EXPECT_LT(d2, 1e-2);
    EXPECT_GT(d1 / d2, 3.0);  // second-order differences
}

TEST(PhiStar, DiscretizationCheckEntersErrorBar) {
    LimitOptions o;
    o.discretization_check = true;
    const auto r = boundary_layer_limit(laminate(), trig(0.0, {{{1.0}, {1, 0}, Phase::Cos}, {{0.5}, {0, 1}, Phase::Cos}}),
                                        make_rational_direction({0, 1}), 0.1, MeshSpec{1.0 / 16.0, true}, o);
    EXPECT_GT(r.discretization_error, 0.0);
    EXPECT_GE(r.error_bar, r.discretization_error);
}

TEST(PhiStar, VariableIsotropicCoefficient) {
    const auto A = LinearTensorField::isotropic(PeriodicField(2, {1.0}, {TrigTerm{{0.5}, {1, 0}, Phase::Cos}}), 0.5);
    const auto r = boundary_layer_limit(A, trig(0.0, {{{1.0}, {1, 0}, Phase::Cos}}), make_rational_direction({0, 1}), 0.0,
                                        MeshSpec{1.0 / 16.0, true}, LimitOptions{});
    EXPECT_TRUE(r.converged);
    EXPECT_GT(r.decay_rate, 0.0);
    // c* is a weighted lateral average of the data: it lies strictly inside the data range
    EXPECT_LT(std::abs(r.value[0]), 1.0);
    ASSERT_GE(r.top_oscillation.size(), 2u);
    EXPECT_LT(r.top_oscillation.back(), r.top_oscillation.front());
}

TEST(PhiStar, ExplicitSingleRungLadder) {
    LimitOptions o;
    o.ladder = {8.0};
    const auto r = boundary_layer_limit(laplace2(), trig(0.0, {{{1.0}, {1, 0}, Phase::Cos}}), make_rational_direction({0, 1}), 0.0,
                                        MeshSpec{1.0 / 8.0, true}, o);
    EXPECT_TRUE(r.converged) << r.diagnostics;
    EXPECT_EQ(r.heights_used.size(), 1u);
}
