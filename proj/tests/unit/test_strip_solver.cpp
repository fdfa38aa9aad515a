#include "blayer/errors.hpp"
#include "blayer/fe.hpp"
#include "blayer/grid.hpp"
#include "blayer/strip_solver.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace blayer;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

LinearTensorField laplace(int d) {
    std::vector<double> id(static_cast<std::size_t>(d * d), 0.0);
    for (int a = 0; a < d; ++a) id[static_cast<std::size_t>(a * d + a)] = 1.0;
    return LinearTensorField::constant(d, 1, id, 1.0);
}

LinearTensorField laminate() {
    return LinearTensorField::isotropic(PeriodicField(2, {0.5}, {TrigTerm{{0.25}, {1, 0}, Phase::Cos}}), 0.25);
}

DataPtr cos_data(int d, IVec k, double c0 = 0.0) {
    return std::make_shared<FieldData>(PeriodicField(d, {c0}, {TrigTerm{{1.0}, std::move(k), Phase::Cos}}));
}

Vec node_pos(const StructuredGrid& g, std::size_t n) {
    Vec y(static_cast<std::size_t>(g.dim()));
    g.node_position(n, y.data());
    return y;
}

// Dirichlet top at 0: u = cos(2πy1) sinh(2π(R−z))/sinh(2πR).
double dirichlet_error(double h) {
    const double R = 1.0;
    auto p = StripProblem::along(make_rational_direction({0, 1}), 0.0, R, MeshSpec{h, true}, laplace(2), cos_data(2, {1, 0}));
    p.top = TopBoundary::dirichlet({0.0});
    const auto sol = solve(p);
    double err = 0.0;
    for (std::size_t n = 0; n < sol.grid->node_count(); ++n) {
        const Vec y = node_pos(*sol.grid, n);
        const double exact = std::cos(kTwoPi * y[0]) * std::sinh(kTwoPi * (R - y[1])) / std::sinh(kTwoPi * R);
        err = std::max(err, std::abs(sol.at(n) - exact));
    }
    return err;
}

}  // namespace

TEST(StripGrid, AxisDirection) {
    auto p = StripProblem::along(make_rational_direction({0, 1}), 0.0, 4.0, MeshSpec{1.0 / 8.0, true}, laplace(2), cos_data(2, {1, 0}));
    const auto g = build_strip_grid(p);
    EXPECT_EQ(g.cells(0), 8);
    EXPECT_EQ(g.cells(1), 32);
    EXPECT_EQ(g.slice_size(), 8u);
    EXPECT_EQ(g.slice_count(), 33);
}

TEST(StripGrid, DiagonalDirectionIsRotated) {
    const auto xi = make_rational_direction({1, 1});
    auto p = StripProblem::along(xi, 0.0, 4.0 * std::sqrt(2.0), MeshSpec{std::sqrt(2.0) / 16.0, true}, laplace(2), cos_data(2, {1, 0}));
    const auto g = build_strip_grid(p);
    EXPECT_EQ(g.cells(0), 16);
    // node 1 on the bottom slice sits one lateral step along ±(1,-1)/√2 · h
    const Vec y0 = node_pos(g, 0), y1 = node_pos(g, 1);
    EXPECT_NEAR(std::abs(y1[0] - y0[0]), 1.0 / 16.0, 1e-14);
    EXPECT_NEAR(y1[0] - y0[0], -(y1[1] - y0[1]), 1e-14);
}

TEST(StripGrid, CoefficientsPeriodicAcrossLateralIdentification) {
    const auto xi = make_rational_direction({1, 2});
    auto p = StripProblem::along(xi, 0.0, 4.0 * std::sqrt(5.0), MeshSpec{1.0 / 16.0, false}, laminate(), cos_data(2, {1, 0}));
    const auto g = build_strip_grid(p);
    const auto A = laminate();
    const int n0 = g.nodes(0);
    for (int k : {0, 5, 17}) {
        const std::size_t first = g.node_index(0, k);
        const Vec y = node_pos(g, first);
        // one full lateral period further along ℓ = (−2, 1)
        const Vec yl{y[0] - 2.0, y[1] + 1.0};
        EXPECT_NEAR(A.evaluate(y)[0], A.evaluate(yl)[0], 1e-13);
        // the last lateral node sits one step before the periodic copy of node 0
        const Vec ylast = node_pos(g, g.node_index(n0 - 1, k));
        const Vec step{ylast[0] - node_pos(g, g.node_index(n0 - 2, k))[0], ylast[1] - node_pos(g, g.node_index(n0 - 2, k))[1]};
        EXPECT_NEAR(std::abs(ylast[0] + step[0] - y[0]), 2.0, 1e-12);
        EXPECT_NEAR(std::abs(ylast[1] + step[1] - y[1]), 1.0, 1e-12);
    }
}

TEST(StripGrid, StrictMeshRejectsNonDividingSpacing) {
    auto p = StripProblem::along(make_rational_direction({1, 1}), 0.0, 8.0, MeshSpec{1.0 / 16.0, true}, laplace(2), cos_data(2, {1, 0}));
    EXPECT_THROW(build_strip_grid(p), InvalidMesh);
    p.height = 4.0;
    p.frame = StripFrame::from_direction(make_rational_direction({0, 1}), 0.0);
    p.mesh.h = 0.3;
    EXPECT_THROW(build_strip_grid(p), InvalidMesh);
}

TEST(SolveLinear, ClosedFormDirichletStripConvergesAtSecondOrder) {
    const double e1 = dirichlet_error(1.0 / 8.0);
    const double e2 = dirichlet_error(1.0 / 16.0);
    const double e3 = dirichlet_error(1.0 / 32.0);
    EXPECT_LT(e3, 2e-3);
    EXPECT_GE(std::log2(e1 / e2), 1.9);
    EXPECT_GE(std::log2(e2 / e3), 1.9);
}

TEST(SolveLinear, ConstantDataReproducedExactly) {
    for (const auto& A : {laplace(2), laminate()}) {
        auto p = StripProblem::along(make_rational_direction({1, 2}), 0.2, 4.0 * std::sqrt(5.0), MeshSpec{1.0 / 8.0, false}, A,
                                     std::make_shared<FieldData>(PeriodicField::scalar_constant(2, 0.7)));
        p.solver.linear_tolerance = 1e-14;
        const auto sol = solve(p);
        for (double v : sol.values) EXPECT_NEAR(v, 0.7, 1e-12);
    }
}

TEST(SolveLinear, DecoupledSystemMatchesScalar) {
    const auto xi = make_rational_direction({0, 1});
    const auto data1 = PeriodicField(2, {0.0}, {TrigTerm{{1.0}, {1, 0}, Phase::Cos}});
    auto scalar = StripProblem::along(xi, 0.0, 4.0, MeshSpec{1.0 / 16.0, true}, laminate(), std::make_shared<FieldData>(data1));
    const auto s = solve(scalar);
    const auto data2 = PeriodicField(2, {0.0, 0.0}, {TrigTerm{{1.0, 1.0}, {1, 0}, Phase::Cos}});
    auto system = StripProblem::along(xi, 0.0, 4.0, MeshSpec{1.0 / 16.0, true}, LinearTensorField::decoupled(laminate(), 2),
                                      std::make_shared<FieldData>(data2));
    const auto v = solve(system);
    ASSERT_EQ(v.components(), 2);
    for (std::size_t n = 0; n < s.grid->node_count(); ++n) {
        EXPECT_NEAR(v.at(n, 0), s.at(n), 1e-9);
        EXPECT_NEAR(v.at(n, 1), s.at(n), 1e-9);
    }
}

TEST(SolveLinear, DiscreteResidualOfSolveIsSmall) {
    auto p = StripProblem::along(make_rational_direction({1, 1}), 0.0, 4.0 * std::sqrt(2.0), MeshSpec{1.0 / 16.0, false}, laminate(),
                                 cos_data(2, {1, 1}));
    p.solver.linear_tolerance = 1e-12;
    const auto sol = solve(p);
    EXPECT_LE(discrete_residual(sol).interior_sup, 1e-9);
    // bottom nodes reproduce the data exactly
    for (std::size_t n = 0; n < sol.grid->slice_size(); ++n) {
        const Vec y = node_pos(*sol.grid, n);
        EXPECT_NEAR(sol.at(n), std::cos(kTwoPi * (y[0] + y[1])), 1e-14);
    }
}

TEST(SolveLinear, PerturbationRaisesResidualProportionally) {
    auto p = StripProblem::along(make_rational_direction({0, 1}), 0.0, 4.0, MeshSpec{1.0 / 16.0, true}, laminate(), cos_data(2, {1, 0}));
    const auto sol = solve(p);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Vec noise(sol.values.size(), 0.0);
    for (std::size_t i = sol.grid->slice_size(); i < noise.size(); ++i) noise[i] = u(rng);
    auto perturbed = [&](double amp) {
        Vec v = sol.values;
        for (std::size_t i = 0; i < v.size(); ++i) v[i] += amp * noise[i];
        return discrete_residual(p, *sol.grid, v).l2;
    };
    const double r1 = perturbed(1e-4), r2 = perturbed(2e-4);
    EXPECT_GT(r1, 1e-6);
    EXPECT_NEAR(r2 / r1, 2.0, 0.01);
}

TEST(SolveLinear, PropertyDiscreteMaximumPrinciple) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 6; ++trial) {
        const int d = trial < 4 ? 2 : 3;
        std::vector<TrigTerm> terms;
        for (int t = 0; t < 3; ++t) {
            IVec k(static_cast<std::size_t>(d), 0);
            for (auto& c : k) c = static_cast<int>(std::floor(3 * (u(rng) + 1) / 2));
            terms.push_back({{u(rng)}, k, t % 2 ? Phase::Sin : Phase::Cos});
        }
        const PeriodicField data(d, {u(rng)}, terms);
        const auto xi = d == 2 ? make_rational_direction({0, 1}) : make_rational_direction({0, 0, 1});
        const OperatorSpec op = trial % 2 ? OperatorSpec(laplace(d)) : OperatorSpec(d == 2 ? laminate() : laplace(d));
        auto p = StripProblem::along(xi, 0.13 * trial, 4.0, MeshSpec{d == 2 ? 1.0 / 16.0 : 1.0 / 8.0, false}, op,
                                     std::make_shared<FieldData>(data));
        const auto sol = solve(p);
        double bmax = -1e300, bmin = 1e300, imax = -1e300, imin = 1e300;
        const std::size_t ns = sol.grid->slice_size();
        for (std::size_t n = 0; n < sol.grid->node_count(); ++n) {
            if (n < ns) {
                bmax = std::max(bmax, sol.at(n));
                bmin = std::min(bmin, sol.at(n));
            } else {
                imax = std::max(imax, sol.at(n));
                imin = std::min(imin, sol.at(n));
            }
        }
        EXPECT_LE(imax, bmax + 1e-10) << "trial " << trial;
        EXPECT_GE(imin, bmin - 1e-10) << "trial " << trial;
    }
}

TEST(SolveLinear, SystemLinfBoundStableUnderRefinement) {
    // Two coupled components: A^{αα}_{01} = A^{αα}_{10} = 0.3.
    std::vector<double> a(16, 0.0);
    for (int i = 0; i < 2; ++i)
        for (int al = 0; al < 2; ++al) {
            a[(i * 2 + al) * 4 + (i * 2 + al)] = 1.0;
            a[(i * 2 + al) * 4 + ((1 - i) * 2 + al)] = 0.3;
        }
    const auto A = LinearTensorField::constant(2, 2, a, 0.7);
    const auto data = std::make_shared<FieldData>(
        PeriodicField(2, {0.0, 0.0}, {TrigTerm{{1.0, -0.5}, {1, 0}, Phase::Cos}, TrigTerm{{0.2, 0.4}, {2, 0}, Phase::Sin}}));
    auto ratio = [&](double h) {
        auto p = StripProblem::along(make_rational_direction({0, 1}), 0.0, 4.0, MeshSpec{h, true}, A, data);
        const auto sol = solve(p);
        double su = 0.0, sd = 0.0;
        for (std::size_t n = 0; n < sol.grid->node_count(); ++n)
            for (int c = 0; c < 2; ++c) {
                su = std::max(su, std::abs(sol.at(n, c)));
                if (n < sol.grid->slice_size()) sd = std::max(sd, std::abs(sol.at(n, c)));
            }
        return su / sd;
    };
    const double c1 = ratio(1.0 / 16.0), c2 = ratio(1.0 / 32.0);
    EXPECT_TRUE(std::isfinite(c1));
    EXPECT_LT(c1, 10.0);
    EXPECT_NEAR(c1, c2, 0.05 * c2);
}

TEST(SolveLinear, ShiftByLatticePeriodIsExact) {
    const auto xi = make_rational_direction({1, 2});
    const auto data = std::make_shared<FieldData>(
        PeriodicField(2, {0.1}, {TrigTerm{{1.0}, {1, 0}, Phase::Cos}, TrigTerm{{0.4}, {1, 1}, Phase::Sin}}));
    const double R = 4.0 * xi.period_bound;
    auto p0 = StripProblem::along(xi, 0.1, R, MeshSpec{1.0 / 8.0, false}, laminate(), data);
    auto p1 = StripProblem::along(xi, 0.1 + 1.0 / xi.norm, R, MeshSpec{1.0 / 8.0, false}, laminate(), data);
    const auto s0 = solve(p0), s1 = solve(p1);
    ASSERT_EQ(s0.values.size(), s1.values.size());
    for (std::size_t i = 0; i < s0.values.size(); ++i) EXPECT_NEAR(s0.values[i], s1.values[i], 1e-12);
}

TEST(SolveLinear, LateralShiftGivesIndexShift) {
    const auto xi = make_rational_direction({0, 1});
    const PeriodicField f(2, {0.0}, {TrigTerm{{1.0}, {1, 0}, Phase::Cos}, TrigTerm{{0.3}, {2, 0}, Phase::Sin}});
    const std::vector<double> shift{3.0 / 16.0, 0.0};
    auto p0 = StripProblem::along(xi, 0.0, 4.0, MeshSpec{1.0 / 16.0, true}, laplace(2), std::make_shared<FieldData>(f));
    auto p1 = StripProblem::along(xi, 0.0, 4.0, MeshSpec{1.0 / 16.0, true}, laplace(2), std::make_shared<FieldData>(f.shifted(shift)));
    const auto s0 = solve(p0), s1 = solve(p1);
    const auto& g = *s0.grid;
    const int n0 = g.nodes(0);
    // the lateral axis may run along −e1
    const int step = g.edge(0)[0] > 0 ? 3 : n0 - 3;
    for (int k = 0; k < g.slice_count(); ++k)
        for (int i = 0; i < n0; ++i) EXPECT_NEAR(s1.at(g.node_index(i, k)), s0.at(g.node_index((i + step) % n0, k)), 1e-11);
}

TEST(SolveNonlinear, QuadraticPotentialMatchesLinear) {
    const auto xi = make_rational_direction({1, 1});
    const auto data = cos_data(2, {1, 0});
    const MeshSpec mesh{1.0 / 16.0, false};
    const double R = 4.0 * xi.period_bound;
    auto pl = StripProblem::along(xi, 0.0, R, mesh, laminate(), data);
    auto pn = StripProblem::along(xi, 0.0, R, mesh, MapPtr(std::make_shared<LinearMap>(laminate())), data);
    const auto sl = solve(pl);
    const auto sn = solve(pn);
    ASSERT_FALSE(sn.energy_trace.empty());
    for (std::size_t i = 0; i < sl.values.size(); ++i) EXPECT_NEAR(sl.values[i], sn.values[i], 1e-8);
}

TEST(SolveNonlinear, PropertyEnergyDescent) {
    for (double tau : {1.0 / 16.0, 1.0 / 64.0}) {
        auto p = StripProblem::planar(1.0, 3.0, MeshSpec{1.0 / 16.0, true}, MapPtr(KinkedPlaneMap::reduced2d(0.0)),
                                      std::make_shared<FieldData>(PeriodicField(2, {1.0 / 3.0}, {TrigTerm{{1.0}, {1, 0}, Phase::Cos}})));
        p.tau = tau;
        const auto sol = solve(p);
        ASSERT_GE(sol.energy_trace.size(), 2u);
        for (std::size_t i = 1; i < sol.energy_trace.size(); ++i) EXPECT_LE(sol.energy_trace[i], sol.energy_trace[i - 1]);
        EXPECT_LE(discrete_residual(sol).interior_sup, 1e-5);
    }
}

TEST(SolveNonlinear, PropertyEnergyGradientMatchesFiniteDifferences) {
    auto p = StripProblem::planar(1.0, 2.0, MeshSpec{1.0 / 8.0, true}, MapPtr(KinkedPlaneMap::reduced2d(0.0)),
                                  std::make_shared<FieldData>(PeriodicField(2, {1.0 / 3.0}, {TrigTerm{{1.0}, {1, 0}, Phase::Cos}})));
    p.tau = 0.1;
    const auto grid = build_strip_grid(p);
    const auto mat = make_material(p);
    ASSERT_TRUE(mat->has_energy());
    FeSpace space(grid, 1, TopCondition::Neumann);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Vec v(space.dofs());
    for (auto& x : v) x = u(rng);
    Vec r(space.dofs());
    space.assemble(*mat, v, &r, nullptr, nullptr);
    std::uniform_int_distribution<std::size_t> pick(space.free_begin(), space.free_begin() + space.free_dofs() - 1);
    const double h = 1e-5;
    for (int t = 0; t < 100; ++t) {
        const std::size_t k = pick(rng);
        long double ep = 0, em = 0;
        Vec w = v;
        w[k] += h;
        space.assemble(*mat, w, nullptr, nullptr, &ep);
        w[k] -= 2 * h;
        space.assemble(*mat, w, nullptr, nullptr, &em);
        const double fd = static_cast<double>((ep - em) / (2 * h));
        EXPECT_LE(std::abs(fd - r[k]), 1e-6 * std::max(1.0, std::abs(r[k]))) << "dof " << k;
    }
}

TEST(SolveNonlinear, Kinked3dClosedFormResidualSecondOrder) {
    // u = (1/3 + cos 2πy1) e^{−2πz} solves the three-dimensional kinked equation.
    // The sup norm carries a sizeable h⁴ term at h = 1/16, so it is checked one level finer.
    auto residual = [](double h) {
        auto p = StripProblem::along(make_rational_direction({0, 0, 1}), 0.0, 1.0, MeshSpec{h, true}, MapPtr(std::make_shared<KinkedMap3d>()),
                                     cos_data(3, {1, 0, 0}, 1.0 / 3.0));
        const auto g = build_strip_grid(p);
        Vec v(g.node_count());
        for (std::size_t n = 0; n < g.node_count(); ++n) {
            const Vec y = node_pos(g, n);
            v[n] = (1.0 / 3.0 + std::cos(kTwoPi * y[0])) * std::exp(-kTwoPi * y[2]);
        }
        return discrete_residual(p, g, v);
    };
    const auto r1 = residual(1.0 / 16.0), r2 = residual(1.0 / 32.0), r3 = residual(1.0 / 64.0);
    EXPECT_GE(std::log2(r1.l2 / r2.l2), 1.8);
    EXPECT_GE(std::log2(r2.l2 / r3.l2), 1.8);
    EXPECT_GE(std::log2(r2.interior_sup / r3.interior_sup), 1.8);
}

TEST(SolutionCsv, HeaderAndRows) {
    auto p = StripProblem::along(make_rational_direction({0, 1}), 0.0, 4.0, MeshSpec{1.0 / 4.0, true}, laplace(2), cos_data(2, {1, 0}));
    const auto sol = solve(p);
    std::ostringstream os;
    write_solution_csv(sol, os);
    const std::string s = os.str();
    EXPECT_NE(s.find("# operator_hash: "), std::string::npos);
    EXPECT_NE(s.find("node,i0,i1,y0,y1,z,u0\n"), std::string::npos);
    std::size_t lines = 0;
    for (char c : s) lines += c == '\n';
    EXPECT_GE(lines, sol.grid->node_count() + 1);
}
