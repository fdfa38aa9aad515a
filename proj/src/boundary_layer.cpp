#include "blayer/boundary_layer.hpp"

#include "blayer/errors.hpp"
#include "blayer/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace blayer {

namespace {

double max_of(const Vec& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, x);
    return m;
}

}  // namespace

DecayFit decay_fit(const Vec& heights, const Vec& oscillations, double M, double floor) {
    if (heights.size() != oscillations.size()) throw InvalidInput("decay_fit: size mismatch");
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < heights.size(); ++i) {
        if (oscillations[i] > floor && oscillations[i] > 0.0) pts.emplace_back(heights[i], std::log(oscillations[i]));
    }
    DecayFit fit;
    fit.points = static_cast<int>(pts.size());
    if (pts.size() < 3) return fit;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(pts.size());
    for (const auto& [x, y] : pts) {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double den = n * sxx - sx * sx;
    if (!(std::abs(den) > 0.0)) return fit;
    const double slope = (n * sxy - sx * sy) / den;
    const double icpt = (sy - slope * sx) / n;
    double rss = 0.0;
    for (const auto& [x, y] : pts) rss += (y - icpt - slope * x) * (y - icpt - slope * x);
    fit.rate = -slope;
    fit.rate_times_M = -slope * M;
    fit.C = std::exp(icpt);
    fit.residual = std::sqrt(rss / n);
    fit.degenerate = false;
    return fit;
}

DecayFit decay_fit(const StripSolution& solution, double M) {
    const int top = solution.top_slice();
    const double R = solution.grid->height();
    const double osc0 = max_of(solution.slice_oscillation(0));
    Vec z, osc;
    for (int k = 0; k <= top; ++k) {
        const double zk = solution.grid->slice_height(k);
        if (zk < 0.5 * M - 1e-12 || zk > R - M + 1e-12) continue;
        z.push_back(zk);
        osc.push_back(max_of(solution.slice_oscillation(k)));
    }
    return decay_fit(z, osc, M, 1e-8 * osc0);
}

BoundaryLayerResult boundary_layer_limit(const StripProblem& base, const LimitOptions& options) {
    if (!(options.tolerance > 0.0)) throw InvalidInput("boundary layer limit: tolerance must be positive");
    const double M = base.frame.M;
    Vec ladder = options.ladder;
    if (ladder.empty()) {
        for (double R = 4.0 * M; R <= 64.0 * M * (1.0 + 1e-12); R *= 2.0) ladder.push_back(R);
    }
    // An explicit ladder shorter than min_rungs is taken as the caller's choice.
    const std::size_t min_rungs = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, options.min_rungs)), ladder.size());
    BoundaryLayerResult res;
    std::shared_ptr<const StripSolution> last;
    std::ostringstream diag;
    for (std::size_t j = 0; j < ladder.size(); ++j) {
        StripProblem p = base;
        p.height = ladder[j];
        auto sol = std::make_shared<const StripSolution>(solve(p));
        const int top = sol->top_slice();
        res.heights_used.push_back(ladder[j]);
        res.rung_values.push_back(sol->slice_mean(top));
        res.top_oscillation.push_back(max_of(sol->slice_oscillation(top)));
        last = sol;
        if (j + 1 >= min_rungs && res.top_oscillation.back() <= options.tolerance) {
            res.converged = true;
            break;
        }
    }
    const std::size_t n = res.rung_values.size();
    res.value = res.rung_values.back();
    double delta = 0.0;
    if (n >= 2) {
        for (std::size_t i = 0; i < res.value.size(); ++i) {
            delta = std::max(delta, std::abs(res.rung_values[n - 1][i] - res.rung_values[n - 2][i]));
        }
    }
    res.error_bar = res.top_oscillation.back() + delta;
    if (options.discretization_check) {
        StripProblem coarse = base;
        coarse.height = res.heights_used.back();
        coarse.mesh.h *= 2.0;
        try {
            const StripSolution sc = solve(coarse);
            const Vec vc = sc.slice_mean(sc.top_slice());
            for (std::size_t i = 0; i < vc.size(); ++i) {
                res.discretization_error = std::max(res.discretization_error, std::abs(res.value[i] - vc[i]));
            }
            res.error_bar += res.discretization_error;
        } catch (const InvalidMesh& e) {
            diag << "discretization check skipped: " << e.what() << "; ";
        }
    }
    res.fit = decay_fit(*last, M);
    res.decay_rate = res.fit.degenerate ? 0.0 : res.fit.rate;
    std::ostringstream tail;
    if (!res.converged) {
        tail << "top-slice oscillation " << res.top_oscillation.back() << " above tolerance " << options.tolerance
             << " at R = " << res.heights_used.back();
    } else if (res.fit.degenerate) {
        tail << "decay fit degenerate (" << res.fit.points << " usable slices)";
    }
    res.diagnostics = diag.str() + tail.str();
    if (options.keep_solution) res.solution = last;
    return res;
}

BoundaryLayerResult boundary_layer_limit(const OperatorSpec& op, DataPtr data, const RationalDirection& xi, double s,
                                         const MeshSpec& mesh, const LimitOptions& options, double tau) {
    StripProblem p = StripProblem::along(xi, s, 4.0 * xi.period_bound, mesh, op, std::move(data));
    p.tau = tau;
    return boundary_layer_limit(p, options);
}

PeriodicInterpolant PhiStarProfile::interpolant(Interpolation kind) const {
    std::vector<Vec> values;
    values.reserve(samples.size());
    for (const auto& r : samples) values.push_back(r.value);
    return PeriodicInterpolant(period(), std::move(values), kind);
}

PhiStarProfile phi_star_profile(const OperatorSpec& op, DataPtr data, const RationalDirection& xi, const MeshSpec& mesh,
                                const LimitOptions& limit, const ProfileOptions& options) {
    if (options.sample_count < 8) throw InvalidInput("phi_star_profile: at least 8 samples");
    PhiStarProfile prof;
    prof.xi = xi;
    const int n = options.sample_count;
    for (int j = 0; j < n; ++j) prof.s.push_back(j / (n * xi.norm));
    prof.samples.resize(n);
    parallel_for(static_cast<std::size_t>(n), options.threads, [&](std::size_t j) {
        prof.samples[j] = boundary_layer_limit(op, data, xi, prof.s[j], mesh, limit, options.tau);
    });
    const int N = static_cast<int>(prof.samples.front().value.size());
    prof.mean.assign(N, 0.0);
    for (const auto& r : prof.samples) {
        for (int i = 0; i < N; ++i) prof.mean[i] += r.value[i] / n;
        prof.max_error = std::max(prof.max_error, r.error_bar);
        prof.converged = prof.converged && r.converged;
    }
    return prof;
}

}  // namespace blayer
