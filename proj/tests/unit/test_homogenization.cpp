#include "blayer/errors.hpp"
#include "blayer/homogenization.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace blayer;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

LinearTensorField laminate() {
    return LinearTensorField::isotropic(PeriodicField(2, {0.5}, {TrigTerm{{0.25}, {1, 0}, Phase::Cos}}), 0.25);
}

// Harmonic mean of 0.5 + 0.25 cos 2πt: 1/sqrt(0.5² − 0.25²).
double laminate_harmonic() { return std::sqrt(0.25 - 0.0625); }

}  // namespace

TEST(HomogenizeLinear, ConstantTensorIsUnchanged) {
    const std::vector<double> a{2.0, 0.3, 0.3, 1.0};
    const auto A = LinearTensorField::constant(2, 1, a, 0.5);
    const auto h = homogenize_linear(A, CellOptions{1.0 / 16.0});
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(h.A0[i], a[i], 1e-10);
    EXPECT_LE(h.max_corrector_mean, 1e-12);
}

TEST(HomogenizeLinear, LaminateMeans) {
    const auto h = homogenize_linear(laminate(), CellOptions{1.0 / 64.0});
    EXPECT_NEAR(h.at(0, 0, 0, 0), laminate_harmonic(), 1e-3);
    EXPECT_NEAR(h.at(0, 1, 0, 1), 0.5, 1e-3);
    EXPECT_NEAR(h.at(0, 0, 0, 1), 0.0, 1e-10);
    EXPECT_NEAR(h.at(0, 1, 0, 0), 0.0, 1e-10);
    EXPECT_LE(h.max_corrector_mean, 1e-12);
    EXPECT_GE(h.min_eigenvalue(), 0.25);
}

TEST(HomogenizeLinear, StableUnderCellRefinement) {
    const auto a = homogenize_linear(laminate(), CellOptions{1.0 / 32.0});
    const auto b = homogenize_linear(laminate(), CellOptions{1.0 / 64.0});
    for (std::size_t i = 0; i < a.A0.size(); ++i) EXPECT_NEAR(a.A0[i], b.A0[i], 1e-3);
}

TEST(HomogenizeLinear, PropertySymmetricTensorGivesSymmetricA0) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 3; ++trial) {
        const PeriodicField a11(2, {1.0}, {TrigTerm{{0.3 * u(rng)}, {1, 0}, Phase::Cos}, TrigTerm{{0.2 * u(rng)}, {1, 1}, Phase::Sin}});
        const PeriodicField a12(2, {0.2 * u(rng)}, {TrigTerm{{0.1 * u(rng)}, {0, 1}, Phase::Cos}});
        const PeriodicField a22(2, {1.0}, {TrigTerm{{0.3 * u(rng)}, {0, 1}, Phase::Sin}});
        const LinearTensorField A(2, 1, {a11, a12, a12, a22}, 0.2);
        const auto h = homogenize_linear(A, CellOptions{1.0 / 32.0});
        EXPECT_NEAR(h.A0[1], h.A0[2], 1e-10);
        EXPECT_LE(h.max_corrector_mean, 1e-12);
        EXPECT_GE(h.min_eigenvalue(), 0.2 - 1e-9);
        // A⁰ lies between the harmonic and arithmetic bounds in the sense e·A⁰e ≤ mean(e·Ae)
        const auto avg = A.average();
        for (const Vec e : {Vec{1, 0}, Vec{0, 1}, Vec{0.6, 0.8}}) {
            const double q0 = e[0] * e[0] * h.A0[0] + 2 * e[0] * e[1] * h.A0[1] + e[1] * e[1] * h.A0[3];
            const double qa = e[0] * e[0] * avg[0] + 2 * e[0] * e[1] * avg[1] + e[1] * e[1] * avg[3];
            EXPECT_LE(q0, qa + 1e-9);
        }
    }
}

TEST(HomogenizeLinear, DecoupledSystemRepeatsScalar) {
    const auto s = homogenize_linear(laminate(), CellOptions{1.0 / 32.0});
    const auto v = homogenize_linear(LinearTensorField::decoupled(laminate(), 2), CellOptions{1.0 / 32.0});
    ASSERT_EQ(v.components, 2);
    for (int i = 0; i < 2; ++i)
        for (int a = 0; a < 2; ++a)
            for (int j = 0; j < 2; ++j)
                for (int b = 0; b < 2; ++b) EXPECT_NEAR(v.at(i, a, j, b), i == j ? s.at(0, a, 0, b) : 0.0, 1e-10);
}

TEST(HomogenizeLinear, ThreeDimensionalLaminate) {
    const auto A = LinearTensorField::isotropic(PeriodicField(3, {0.5}, {TrigTerm{{0.25}, {0, 0, 1}, Phase::Cos}}), 0.25);
    const auto h = homogenize_linear(A, CellOptions{1.0 / 24.0});
    EXPECT_NEAR(h.at(0, 2, 0, 2), laminate_harmonic(), 2e-3);
    EXPECT_NEAR(h.at(0, 0, 0, 0), 0.5, 1e-10);
    EXPECT_NEAR(h.at(0, 1, 0, 1), 0.5, 1e-10);
}

TEST(HomogenizeNonlinear, QuadraticMapMatchesLinearPath) {
    const auto lin = homogenize_linear(laminate(), CellOptions{1.0 / 32.0});
    const auto map = MapPtr(std::make_shared<LinearMap>(laminate()));
    for (const Vec& p : {Vec{1.0, 0.0}, Vec{0.0, 1.0}, Vec{0.6, -0.8}}) {
        const auto s = homogenize_nonlinear(map, p, CellOptions{1.0 / 32.0});
        for (int a = 0; a < 2; ++a) EXPECT_NEAR(s.flux[a], lin.A0[a * 2] * p[0] + lin.A0[a * 2 + 1] * p[1], 1e-6);
    }
}

TEST(HomogenizeNonlinear, YIndependentMapIsItsOwnHomogenization) {
    const auto m = MapPtr(KinkedPlaneMap::reduced2d(0.0));
    for (const Vec& p : {Vec{0.3, -2.0}, Vec{1.0, 1.0}}) {
        const auto s = homogenize_nonlinear(m, p);
        const Vec a = m->flux(Vec{0.0, 0.0}, p);
        EXPECT_EQ(s.flux, a);
        EXPECT_TRUE(s.corrector.empty());
    }
}

namespace {
// a(y, p) = (1 + ½cos 2πy1)·(p1, (9/8)p2 + (3/8)|p2|): y-dependent and 1-homogeneous.
MapPtr modulated_kink() {
    auto base = KinkedPlaneMap::reduced2d(0.0);
    auto weight = [](std::span<const double> y) { return 1.0 + 0.5 * std::cos(kTwoPi * y[0]); };
    return std::make_shared<FunctionMap>(
        2, "modulated kink",
        [base, weight](std::span<const double> y, std::span<const double> p, std::span<double> out) {
            base->flux(y, p, out);
            out[0] *= weight(y);
            out[1] *= weight(y);
        },
        [base, weight](std::span<const double> y, std::span<const double> p) { return weight(y) * base->potential(y, p); }, true, true,
        0.375);
}
}  // namespace

TEST(HomogenizeNonlinear, PropertyHomogeneityAndMonotonicity) {
    const auto m = modulated_kink();
    const CellOptions opt{1.0 / 16.0};
    std::mt19937_64 rng(23);
    std::normal_distribution<double> g;
    for (int t = 0; t < 4; ++t) {
        const Vec p{g(rng), g(rng)}, q{g(rng), g(rng)};
        const auto ap = homogenize_nonlinear(m, p, opt);
        const auto a2p = homogenize_nonlinear(m, Vec{2 * p[0], 2 * p[1]}, opt);
        const auto aq = homogenize_nonlinear(m, q, opt);
        for (int a = 0; a < 2; ++a) EXPECT_NEAR(a2p.flux[a], 2 * ap.flux[a], 1e-6 * (1 + std::abs(ap.flux[a])));
        const double mono = (ap.flux[0] - aq.flux[0]) * (p[0] - q[0]) + (ap.flux[1] - aq.flux[1]) * (p[1] - q[1]);
        EXPECT_GE(mono, 0.0);
    }
}

TEST(HomogenizedMap, InterpolatesCachedAngles) {
    const auto m = modulated_kink();
    const HomogenizedMap hm(m, Vec{1.0, 0.0}, Vec{0.0, 1.0}, 32, CellOptions{1.0 / 16.0});
    // at a sampled angle the value is the cell solve itself
    const auto direct = homogenize_nonlinear(m, Vec{0.0, 1.0}, CellOptions{1.0 / 16.0});
    const Vec v = hm.flux(Vec{0.0, 0.0}, Vec{0.0, 3.0});
    EXPECT_NEAR(v[1], 3.0 * direct.flux[1], 1e-8);
    EXPECT_GT(hm.cached_samples(), 0u);
    EXPECT_LE(hm.cached_samples(), 32u);
    EXPECT_EQ(hm.flux(Vec{0.0, 0.0}, Vec{0.0, 0.0}), (Vec{0.0, 0.0}));
}

TEST(EffectiveOperator, DispatchesByKind) {
    const auto lin = effective_operator(OperatorSpec(laminate()), CellOptions{1.0 / 32.0});
    ASSERT_TRUE(std::holds_alternative<LinearTensorField>(lin));
    EXPECT_TRUE(std::get<LinearTensorField>(lin).is_constant());
    const auto kink = MapPtr(KinkedPlaneMap::reduced2d(0.0));
    const auto same = effective_operator(OperatorSpec(kink));
    EXPECT_EQ(std::get<MapPtr>(same), kink);
}

TEST(EpsilonStudy, ConstantTensorHasNoHomogenizationError) {
    const auto A = LinearTensorField::isotropic(PeriodicField::scalar_constant(2, 1.0), 1.0);
    const auto data = std::make_shared<FieldData>(PeriodicField(2, {0.0}, {TrigTerm{{1.0}, {1, 0}, Phase::Cos}}));
    const auto st = epsilon_refinement_study(OperatorSpec(A), data, make_rational_direction({0, 1}), {1, 2});
    ASSERT_TRUE(st.complete) << st.failure;
    for (const auto& r : st.rows) EXPECT_LE(r.sup_error, 1e-8);
}

TEST(EpsilonStudy, LaminateErrorDecreases) {
    const auto data = std::make_shared<FieldData>(PeriodicField(2, {0.0}, {TrigTerm{{1.0}, {1, 0}, Phase::Cos}}));
    const auto st = epsilon_refinement_study(OperatorSpec(laminate()), data, make_rational_direction({0, 1}), {2, 4, 8});
    ASSERT_TRUE(st.complete) << st.failure;
    ASSERT_EQ(st.rows.size(), 3u);
    EXPECT_LT(st.rows[1].sup_error, st.rows[0].sup_error);
    EXPECT_LT(st.rows[2].sup_error, st.rows[1].sup_error);
    EXPECT_GT(st.fitted_order, 0.0);
    const std::string csv = epsilon_study_csv(st);
    EXPECT_EQ(csv.rfind("eps,", 0), 0u);
}

TEST(HomogenizedJson, HasTensorAndMetadata) {
    const auto h = homogenize_linear(laminate(), CellOptions{1.0 / 16.0});
    const auto j = homogenized_json(h);
    for (const char* key : {"\"A0\"", "\"components\"", "\"dim\"", "\"h_cell\"", "\"max_corrector_mean\""})
        EXPECT_NE(j.find(key), std::string::npos) << key;
}
