#include "blayer/nonlinear.hpp"

#include "blayer/errors.hpp"
#include "blayer/krylov.hpp"

#include <algorithm>
#include <cmath>

namespace blayer {

double sup_norm(const Vec& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

namespace {

struct State {
    Vec u;
    Vec g;  ///< free part of the residual
    long double energy = 0.0L;
};

int krylov_cap(const StructuredGrid& grid) {
    return std::max(200, static_cast<int>(20.0 * std::sqrt(static_cast<double>(grid.node_count()))));
}

}  // namespace

NonlinearOutcome minimize_energy(const FeSpace& space, const Material& mat, const FeSpace::Preconditioner& prec, Vec& u,
                                 double tol, double scale, int max_iterations) {
    if (!mat.has_energy()) throw InvalidInput("minimize_energy: material has no energy");
    auto evaluate = [&](State& st) {
        Vec r;
        space.assemble(mat, st.u, &r, nullptr, &st.energy);
        st.g = space.restrict_free(r);
    };
    State st;
    st.u = std::move(u);
    evaluate(st);

    NonlinearOutcome out;
    out.trace.push_back(static_cast<double>(st.energy));
    auto done = [&](int it) {
        out.iterations = it;
        out.residual = sup_norm(st.g) / scale;
        out.energy = st.energy;
        u = std::move(st.u);
        return out;
    };

    Vec z, d, z_new;
    prec.apply(st.g, z);
    d = z;
    for (auto& v : d) v = -v;
    double gz = dot(st.g, z);
    double alpha_prev = 1.0;
    for (int it = 0; it < max_iterations; ++it) {
        if (sup_norm(st.g) <= tol * scale) return done(it);
        double slope0 = dot(st.g, d);
        if (!(slope0 < 0.0)) {
            d = z;
            for (auto& v : d) v = -v;
            slope0 = -gz;
        }
        if (!(slope0 < 0.0)) return done(it);  // gradient invisible to the preconditioner: stationary

        State trial;
        auto probe = [&](double a) {
            trial.u = st.u;
            space.add_free(d, trial.u, a);
            evaluate(trial);
            return dot(trial.g, d);
        };
        double a_lo = 0.0, f_lo = slope0;
        double a_hi = alpha_prev, f_hi = probe(a_hi);
        int expand = 0;
        while (f_hi < 0.0 && std::abs(f_hi) > 0.1 * std::abs(slope0) && expand++ < 40) {
            a_lo = a_hi;
            f_lo = f_hi;
            a_hi *= 2.0;
            f_hi = probe(a_hi);
        }
        double a = a_hi, fa = f_hi;
        int side = 0;
        for (int k = 0; k < 40 && std::abs(fa) > 0.1 * std::abs(slope0); ++k) {
            if (f_hi < 0.0) break;  // expansion exhausted
            a = a_hi - f_hi * (a_hi - a_lo) / (f_hi - f_lo);
            if (!(a > a_lo && a < a_hi)) a = 0.5 * (a_lo + a_hi);
            fa = probe(a);
            if (fa > 0.0) {
                a_hi = a;
                f_hi = fa;
                if (side == -1) f_lo *= 0.5;
                side = -1;
            } else {
                a_lo = a;
                f_lo = fa;
                if (side == 1) f_hi *= 0.5;
                side = 1;
            }
        }
        if (std::abs(fa) > 0.1 * std::abs(slope0)) throw SolverFailure("energy minimization: line search failed", out.trace);
        // `trial` holds the last probe, which is the accepted step `a`.
        const long double slack = 1e-13L * std::abs(st.energy) + 1e-300L;
        if (trial.energy > st.energy + slack) {
            throw InternalConsistency("energy minimization: energy increased along a descent direction");
        }
        alpha_prev = a;
        st = std::move(trial);
        out.trace.push_back(static_cast<double>(st.energy));

        prec.apply(st.g, z_new);
        const double gz_new = dot(st.g, z_new);
        const double beta = std::max(0.0, (gz_new - dot(st.g, z)) / gz);
        for (std::size_t k = 0; k < d.size(); ++k) d[k] = -z_new[k] + beta * d[k];
        z.swap(z_new);
        gz = gz_new;
    }
    throw SolverFailure("energy minimization: iteration budget exhausted", out.trace);
}

NonlinearOutcome newton_krylov(const FeSpace& space, const Material& mat, const FeSpace::Preconditioner& prec, Vec& u,
                               double tol, double scale, int max_iterations, int restart) {
    auto evaluate = [&](State& st) {
        Vec r;
        space.assemble(mat, st.u, &r, nullptr, nullptr);
        st.g = space.restrict_free(r);
    };
    State st;
    st.u = std::move(u);
    evaluate(st);

    CsrMatrix J = space.make_matrix();
    GmresOptions opt;
    opt.tolerance = 1e-6;
    opt.max_iterations = krylov_cap(space.grid());
    opt.restart = restart;
    auto l2 = [](const Vec& v) { return std::sqrt(dot(v, v)); };

    NonlinearOutcome out;
    out.trace.push_back(sup_norm(st.g) / scale);
    for (int it = 0; it < max_iterations; ++it) {
        if (sup_norm(st.g) <= tol * scale) {
            out.iterations = it;
            out.residual = sup_norm(st.g) / scale;
            u = std::move(st.u);
            return out;
        }
        space.assemble(mat, st.u, nullptr, &J, nullptr);
        Vec b = st.g;
        for (auto& v : b) v = -v;
        Vec delta(b.size(), 0.0);
        const auto res = gmres([&](const Vec& in, Vec& o) { o.resize(in.size()); J.multiply(in, o); },
                               [&](const Vec& in, Vec& o) { prec.apply(in, o); }, b, delta, opt);
        if (!res.converged && res.relative_residual > 1e-2) {
            throw SolverFailure("Newton step: Krylov iteration stagnated", res.trace);
        }
        const double r0 = l2(st.g);
        double a = 1.0;
        State trial;
        bool accepted = false;
        for (int k = 0; k < 30; ++k) {
            trial.u = st.u;
            space.add_free(delta, trial.u, a);
            evaluate(trial);
            if (l2(trial.g) <= (1.0 - 1e-4 * a) * r0) {
                accepted = true;
                break;
            }
            a *= 0.5;
        }
        if (!accepted) throw SolverFailure("Newton step: backtracking failed", out.trace);
        st = std::move(trial);
        out.trace.push_back(sup_norm(st.g) / scale);
    }
    throw SolverFailure("Newton iteration budget exhausted", out.trace);
}

}  // namespace blayer
