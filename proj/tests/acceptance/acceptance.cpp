// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "blayer/boundary_layer.hpp"
#include "blayer/cli.hpp"
#include "blayer/errors.hpp"
#include "blayer/fe.hpp"
#include "blayer/homogenization.hpp"
#include "blayer/second_cell.hpp"
#include "blayer/strip_solver.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace blayer;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * kPi;

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    std::string name;
    double budget_seconds;
    std::function<Outcome()> run;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

DataPtr field(int d, double c0, std::vector<TrigTerm> terms) {
    return std::make_shared<FieldData>(PeriodicField(d, {c0}, std::move(terms)));
}

LinearTensorField laplace(int d) { return LinearTensorField::isotropic(PeriodicField::scalar_constant(d, 1.0), 1.0); }

LinearTensorField laminate(int d) {
    IVec k(static_cast<std::size_t>(d), 0);
    k[0] = 1;
    return LinearTensorField::isotropic(PeriodicField(d, {0.5}, {TrigTerm{{0.25}, k, Phase::Cos}}), 0.25);
}

double laminate_harmonic() { return std::sqrt(0.25 - 0.0625); }

// Least-squares slope of log r against log h.
double fitted_order(const Vec& h, const Vec& r) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) {
        const double x = std::log(h[i]), y = std::log(r[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

SecondCellData kinked_profile() {
    // Data 1/3 + cos 2πy3 is constant on every plane y3 = s, so φ*(e3, s) is the data itself.
    return second_cell_data([](double t) { return 1.0 / 3.0 + std::cos(kTwoPi * t); }, 1.0, "1/3 + cos 2pi t");
}

const OperatorSpec& kinked_map() {
    static const OperatorSpec op(MapPtr(std::make_shared<KinkedMap3d>()));
    return op;
}

// Shared between criterion 3 and the jump contrast in criterion 9.
struct KinkedLimits {
    DirectionalLimit e1, e2;
    bool ready = false;
};
KinkedLimits& kinked_limits() {
    static KinkedLimits k;
    if (!k.ready) {
        SecondCellOptions opt;
        opt.tau = 1.0 / 32.0;
        const auto xi = make_rational_direction({0, 0, 1});
        k.e1 = directional_limit(xi, Vec{1, 0, 0}, kinked_profile(), kinked_map(), opt);
        k.e2 = directional_limit(xi, Vec{0, 1, 0}, kinked_profile(), kinked_map(), opt);
        k.ready = true;
    }
    return k;
}

// ---------------------------------------------------------------------------

Outcome closed_form_residual() {
    Vec hs{1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0}, l2, sup;
    for (double h : hs) {
        auto p = StripProblem::along(make_rational_direction({0, 0, 1}), 0.0, 1.0, MeshSpec{h, true}, kinked_map(),
                                     field(3, 1.0 / 3.0, {{{1.0}, {1, 0, 0}, Phase::Cos}}));
        const auto g = build_strip_grid(p);
        Vec v(g.node_count());
        double y[3];
        for (std::size_t n = 0; n < g.node_count(); ++n) {
            g.node_position(n, y);
            v[n] = (1.0 / 3.0 + std::cos(kTwoPi * y[0])) * std::exp(-kTwoPi * y[2]);
        }
        const auto r = discrete_residual(p, g, v);
        l2.push_back(r.l2);
        sup.push_back(r.interior_sup);
    }
    const double order = fitted_order(hs, l2);
    const double sup_fine = std::log2(sup[1] / sup[2]);
    return {order >= 1.8, fmt("fitted order (l2 residual) %.3f >= 1.8; residuals %.3e %.3e %.3e; sup-norm orders %.3f %.3f", order,
                              l2[0], l2[1], l2[2], std::log2(sup[0] / sup[1]), sup_fine)};
}

Outcome e1_limit() {
    LimitOptions lim;
    lim.ladder = {8.0};
    const auto r = boundary_layer_limit(kinked_map(), field(3, 1.0 / 3.0, {{{1.0}, {1, 0, 0}, Phase::Cos}}),
                                        make_rational_direction({0, 0, 1}), 0.0, MeshSpec{1.0 / 32.0, true}, lim, 1.0 / 32.0);
    const double c = r.value[0];
    return {std::abs(c) <= 5e-3 && r.converged, fmt("|c*| = %.3e <= 5e-3 (h=1/32, R=8, tau=1/32, error bar %.1e)", std::abs(c), r.error_bar)};
}

Outcome e2_gap() {
    LimitOptions lim;
    lim.tolerance = 1e-6;
    const double h = 1.0 / 32.0, tau = 1.0 / 32.0;
    const auto a = gap_certificate(kinked_profile(), h, tau, lim);
    const auto b = gap_certificate(kinked_profile(), h, tau / 2, lim);
    const auto c = gap_certificate(kinked_profile(), h / 2, tau / 2, lim);
    const double lo = std::min({a.delta_hat, b.delta_hat, c.delta_hat});
    const double hi = std::max({a.delta_hat, b.delta_hat, c.delta_hat});
    const double spread = (hi - lo) / hi;
    const auto& k = kinked_limits();
    const double jump = k.e2.L[0] - k.e1.L[0];
    const double err = k.e1.error_bar + k.e2.error_bar;
    const bool ok = lo > 0.0 && spread <= 0.2 && jump - err >= lo;
    return {ok, fmt("delta_hat %.4f / %.4f / %.4f (rel spread %.3f <= 0.2); L(e3,e2) - L(e3,e1) = %.4f +- %.1e >= delta_hat; "
                    "min ordering %.1e",
                    a.delta_hat, b.delta_hat, c.delta_hat, spread, jump, err, c.min_ordering)};
}

Outcome subsolution() {
    const int n = 256;
    double worst_off_axis = -INFINITY, max_all = -INFINITY, max_direct = -INFINITY;
    for (int i = 0; i < n; ++i) {
        const double y = kTwoPi * i / (n - 1);
        const bool on_axis = i == 0 || i == n - 1;
        for (int j = 0; j < n; ++j) {
            const double z = 4.0 * j / (n - 1);
            const double r = subsolution_residual_formula(y, z);
            max_all = std::max(max_all, r);
            max_direct = std::max(max_direct, subsolution_residual_direct(y, z));
            if (!on_axis) worst_off_axis = std::max(worst_off_axis, r);
        }
    }
    const bool ok = max_all <= 0.0 && worst_off_axis < 0.0 && subsolution_residual_formula(0.0, 0.0) == 0.0;
    return {ok, fmt("max residual %.3e <= 0, off y=0 max %.3e < 0 (direct differentiation max %.3e)", max_all, worst_off_axis,
                    max_direct)};
}

Outcome average_formula_check() {
    std::string detail;
    bool ok = true;
    {
        const auto eff = effective_operator(OperatorSpec(laminate(2)), CellOptions{1.0 / 64.0});
        const auto data = field(2, 0.0, {{{1.0}, {1, 0}, Phase::Cos}, {{0.5}, {0, 1}, Phase::Cos}});
        SecondCellOptions opt;
        opt.mesh = MeshSpec{1.0 / 32.0, false};
        for (const IVec& v : {IVec{0, 1}, IVec{1, 1}, IVec{1, 2}}) {
            const auto xi = make_rational_direction(v);
            const auto prof = phi_star_profile(laminate(2), data, xi, MeshSpec{1.0 / 16.0, false}, LimitOptions{}, ProfileOptions{16, 1, 0.0});
            const auto scd = second_cell_data(prof, Interpolation::CubicSpline);
            const auto dl = directional_limit(xi, Vec{-xi.xi_hat[1], xi.xi_hat[0]}, scd, eff, opt);
            const double diff = std::abs(dl.L[0] - average_formula(scd)[0]);
            ok = ok && diff <= 2.0 * dl.error_bar;
            detail += fmt("(%lld,%lld): |L-avg| %.1e <= %.1e; ", static_cast<long long>(v[0]), static_cast<long long>(v[1]), diff,
                          2.0 * dl.error_bar);
        }
    }
    {
        const auto xi = make_rational_direction({0, 0, 1});
        const auto data = field(3, 0.0, {{{1.0}, {1, 0, 0}, Phase::Cos}, {{0.5}, {0, 0, 1}, Phase::Cos}, {{0.3}, {1, 0, 1}, Phase::Sin}});
        const auto prof = phi_star_profile(laminate(3), data, xi, MeshSpec{1.0 / 8.0, true}, LimitOptions{}, ProfileOptions{16, 1, 0.0});
        const auto scd = second_cell_data(prof, Interpolation::CubicSpline);
        const auto eff = effective_operator(OperatorSpec(laminate(3)), CellOptions{1.0 / 24.0});
        SecondCellOptions opt;
        opt.mesh = MeshSpec{1.0 / 32.0, false};
        const auto sp = eta_independence_check(xi, scd, eff, {{1, 0, 0}, {0, 1, 0}, {std::sqrt(0.5), std::sqrt(0.5), 0}}, opt);
        ok = ok && sp.spread <= 2.0 * sp.max_error;
        detail += fmt("3D eta-spread %.1e <= %.1e", sp.spread, 2.0 * sp.max_error);
    }
    return {ok, detail};
}

Outcome decay_rates() {
    auto p1 = StripProblem::along(make_rational_direction({0, 1}), 0.0, 4.0, MeshSpec{1.0 / 32.0, true}, laplace(2),
                                  field(2, 0.0, {{{1.0}, {1, 0}, Phase::Cos}}));
    const auto f1 = decay_fit(solve(p1), 1.0);
    const auto xi = make_rational_direction({1, 2});
    auto p2 = StripProblem::along(xi, 0.0, 4.0 * xi.period_bound, MeshSpec{1.0 / 32.0, false}, laplace(2),
                                  field(2, 0.0, {{{1.0}, {0, 1}, Phase::Cos}}));
    const auto f2 = decay_fit(solve(p2), xi.period_bound);
    const double e1 = std::abs(f1.rate / kTwoPi - 1.0);
    const double e2 = std::abs(f2.rate / (kTwoPi / std::sqrt(5.0)) - 1.0);
    return {!f1.degenerate && !f2.degenerate && e1 <= 0.05 && e2 <= 0.05,
            fmt("xi=(0,1): rate %.4f vs 2pi (%.2f%%); xi=(1,2): rate %.4f vs 2pi/sqrt5 (%.2f%%)", f1.rate, 100 * e1, f2.rate, 100 * e2)};
}

Outcome laminate_a0() {
    const auto h = homogenize_linear(laminate(2), CellOptions{1.0 / 64.0});
    const double d1 = std::abs(h.at(0, 0, 0, 0) - laminate_harmonic());
    const double d2 = std::abs(h.at(0, 1, 0, 1) - 0.5);
    const double off = std::max(std::abs(h.at(0, 0, 0, 1)), std::abs(h.at(0, 1, 0, 0)));
    return {d1 <= 1e-3 && d2 <= 1e-3 && off <= 1e-3,
            fmt("A0 = [%.6f %.1e; %.1e %.6f], harmonic %.6f, arithmetic 0.5", h.at(0, 0, 0, 0), h.at(0, 0, 0, 1), h.at(0, 1, 0, 0),
                h.at(0, 1, 0, 1), laminate_harmonic())};
}

Outcome epsilon_refinement() {
    const auto st = epsilon_refinement_study(OperatorSpec(laminate(2)), field(2, 0.0, {{{1.0}, {1, 0}, Phase::Cos}}),
                                             make_rational_direction({0, 1}), {4, 8, 16});
    if (!st.complete) return {false, "study incomplete: " + st.failure};
    bool ok = st.rows.size() == 3;
    std::string detail;
    for (const auto& r : st.rows) {
        detail += fmt("eps=1/%g err %.3e ", 1.0 / r.eps, r.sup_error);
        if (r.ratio > 0.0) {
            detail += fmt("(ratio %.3f) ", r.ratio);
            ok = ok && r.ratio <= 0.75;
        }
    }
    return {ok, detail + fmt("; fitted order %.3f", st.fitted_order)};
}

// ---------------------------------------------------------------------------
// Property summary

bool maximum_principle(std::string& d) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst = -INFINITY;
    for (int t = 0; t < 4; ++t) {
        const auto data = field(2, u(rng), {{{u(rng)}, {1, 0}, Phase::Cos}, {{u(rng)}, {2, 0}, Phase::Sin}, {{u(rng)}, {1, 1}, Phase::Cos}});
        auto p = StripProblem::along(make_rational_direction({0, 1}), 0.1 * t, 4.0, MeshSpec{1.0 / 16.0, true}, laminate(2), data);
        const auto sol = solve(p);
        double bmax = -INFINITY, bmin = INFINITY, imax = -INFINITY, imin = INFINITY;
        for (std::size_t n = 0; n < sol.grid->node_count(); ++n) {
            const double v = sol.at(n);
            if (n < sol.grid->slice_size()) {
                bmax = std::max(bmax, v);
                bmin = std::min(bmin, v);
            } else {
                imax = std::max(imax, v);
                imin = std::min(imin, v);
            }
        }
        worst = std::max({worst, imax - bmax, bmin - imin});
    }
    d += fmt("max principle overshoot %.1e; ", worst);
    return worst <= 1e-10;
}

StripProblem kinked_planar(double tau) {
    auto p = StripProblem::planar(1.0, 3.0, MeshSpec{1.0 / 16.0, true}, MapPtr(KinkedPlaneMap::reduced2d(0.0)),
                                  field(2, 1.0 / 3.0, {{{1.0}, {1, 0}, Phase::Cos}}));
    p.tau = tau;
    return p;
}

bool energy_descent(std::string& d) {
    const auto sol = solve(kinked_planar(1.0 / 32.0));
    bool ok = sol.energy_trace.size() >= 2;
    for (std::size_t i = 1; i < sol.energy_trace.size(); ++i) ok = ok && sol.energy_trace[i] <= sol.energy_trace[i - 1];
    d += fmt("energy descent over %zu steps %s; ", sol.energy_trace.size(), ok ? "monotone" : "NOT monotone");
    return ok;
}

bool gradient_check(std::string& d) {
    const auto p = kinked_planar(0.1);
    const auto grid = build_strip_grid(p);
    const auto mat = make_material(p);
    FeSpace space(grid, 1, TopCondition::Neumann);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Vec v(space.dofs());
    for (auto& x : v) x = u(rng);
    Vec r(space.dofs());
    space.assemble(*mat, v, &r, nullptr, nullptr);
    std::uniform_int_distribution<std::size_t> pick(space.free_begin(), space.free_begin() + space.free_dofs() - 1);
    double worst = 0.0;
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
        worst = std::max(worst, std::abs(fd - r[k]) / std::max(1.0, std::abs(r[k])));
    }
    d += fmt("gradient vs FD %.1e; ", worst);
    return worst <= 1e-6;
}

bool periodicity(std::string& d) {
    const auto xi = make_rational_direction({1, 1});
    const auto data = field(2, 0.1, {{{1.0}, {1, 1}, Phase::Cos}, {{0.4}, {1, 0}, Phase::Sin}});
    double worst = -INFINITY;
    for (double s : {0.0, 0.25}) {
        const auto a = boundary_layer_limit(laminate(2), data, xi, s, MeshSpec{1.0 / 16.0, false}, LimitOptions{});
        const auto b = boundary_layer_limit(laminate(2), data, xi, s + 1.0 / xi.norm, MeshSpec{1.0 / 16.0, false}, LimitOptions{});
        worst = std::max(worst, std::abs(a.value[0] - b.value[0]) - (a.error_bar + b.error_bar));
    }
    d += fmt("periodicity excess %.1e; ", worst);
    return worst <= 0.0;
}

bool monotonicity(std::string& d) {
    const auto rep = validate_operator(*KinkedPlaneMap::reduced2d(0.0), 10000, 1.0, 6);
    d += fmt("lambda_hat %.4f; ", rep.lambda_hat);
    return rep.lambda_hat >= 0.74 && rep.lambda_hat <= 0.76;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

bool determinism(std::string& d) {
    const fs::path base = fs::temp_directory_path() / "blayer_acceptance_determinism";
    fs::remove_all(base);
    std::ostringstream sink;
    bool ok = true;
    for (const char* sub : {"a", "b"}) {
        const std::vector<std::string> args{"decay-fit", "--out", (base / sub).string(), "--seed", "7"};
        ok = ok && run_cli(args, sink, sink) == kExitOk;
    }
    int compared = 0;
    if (ok) {
        for (const auto& e : fs::directory_iterator(base / "a")) {
            const auto name = e.path().filename();
            if (name == "manifest.json") continue;  // carries wall-clock timings
            ok = ok && slurp(e.path()) == slurp(base / "b" / name);
            ++compared;
        }
    }
    fs::remove_all(base);
    d += fmt("CLI outputs identical across runs (%d files); ", compared);
    return ok && compared > 0;
}

bool sweep_contrast(std::string& d) {
    PredictionSettings s;
    s.Q = 4;
    s.profile_mesh = MeshSpec{1.0 / 16.0, false};
    s.profile_samples = 8;
    s.second_cell.mesh = MeshSpec{1.0 / 16.0, false};
    s.cell = CellOptions{1.0 / 32.0};
    const PhiStarPredictor pred(OperatorSpec(laminate(2)), field(2, 0.0, {{{1.0}, {1, 0}, Phase::Cos}, {{0.5}, {0, 1}, Phase::Cos}}), s);
    std::vector<Vec> dirs;
    for (int k = 1; k <= 4; ++k) {
        dirs.push_back({1.0, static_cast<double>(k)});
        dirs.push_back({-1.0, static_cast<double>(k)});
    }
    const auto rep = continuity_sweep(pred, dirs);
    const auto& k = kinked_limits();
    const double jump = k.e2.L[0] - k.e1.L[0] - k.e1.error_bar - k.e2.error_bar;
    d += fmt("linear sweep alpha_hat %.3f over %d pairs; kinked jump beyond error bars %.4f", rep.fit.alpha, rep.fit.pairs, jump);
    return !rep.fit.degenerate && rep.fit.alpha > 0.0 && jump > 0.0;
}

Outcome properties() {
    std::string d;
    bool ok = true;
    for (auto* f : {maximum_principle, energy_descent, gradient_check, periodicity, monotonicity, determinism, sweep_contrast}) {
        ok = f(d) && ok;
    }
    return {ok, d};
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "closed-form residual order", 120, closed_form_residual},
        {2, "e1 boundary layer limit", 300, e1_limit},
        {3, "e2 gap certificate", 600, e2_gap},
        {4, "subsolution residual sign", 1, subsolution},
        {5, "linear average formula", 900, average_formula_check},
        {6, "exponential decay rates", 120, decay_rates},
        {7, "homogenized laminate", 60, laminate_a0},
        {8, "epsilon refinement", 600, epsilon_refinement},
        {9, "property suites", 600, properties},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = secs <= c.budget_seconds;
        const bool pass = o.pass && in_time;
        failures += !pass;
        std::printf("%s criterion %d (%s): %s [%.2f s, budget %.0f s%s]\n", pass ? "PASS" : "FAIL", c.id, c.name.c_str(), o.detail.c_str(),
                    secs, c.budget_seconds, in_time ? "" : ", over budget");
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
