#include "blayer/krylov.hpp"

#include <cmath>

namespace blayer {

namespace {

double norm2(const Vec& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

}  // namespace

KrylovResult gmres(const LinearOperator& apply, const LinearOperator& precondition, const Vec& b, Vec& x,
                   const GmresOptions& options) {
    const std::size_t n = b.size();
    KrylovResult res;
    const double bnorm = norm2(b);
    if (x.size() != n) x.assign(n, 0.0);
    if (bnorm == 0.0) {
        x.assign(n, 0.0);
        res.converged = true;
        return res;
    }
    const int m = std::max(1, options.restart);
    std::vector<Vec> V(m + 1, Vec(n));
    std::vector<Vec> H(m + 1, Vec(m, 0.0));
    Vec cs(m), sn(m), g(m + 1), w(n), z(n), ax(n);

    auto preconditioned = [&](const Vec& in, Vec& out) {
        if (precondition) {
            precondition(in, out);
        } else {
            out = in;
        }
    };

    while (res.iterations < options.max_iterations) {
        apply(x, ax);
        for (std::size_t i = 0; i < n; ++i) V[0][i] = b[i] - ax[i];
        double beta = norm2(V[0]);
        res.relative_residual = beta / bnorm;
        if (res.relative_residual <= options.tolerance) {
            res.converged = true;
            return res;
        }
        for (auto& v : V[0]) v /= beta;
        std::fill(g.begin(), g.end(), 0.0);
        g[0] = beta;

        int j = 0;
        for (; j < m && res.iterations < options.max_iterations; ++j) {
            preconditioned(V[j], z);
            apply(z, w);
            for (int i = 0; i <= j; ++i) {
                double h = 0.0;
                for (std::size_t k = 0; k < n; ++k) h += w[k] * V[i][k];
                H[i][j] = h;
                for (std::size_t k = 0; k < n; ++k) w[k] -= h * V[i][k];
            }
            const double hn = norm2(w);
            H[j + 1][j] = hn;
            if (hn > 0.0) {
                for (std::size_t k = 0; k < n; ++k) V[j + 1][k] = w[k] / hn;
            }
            for (int i = 0; i < j; ++i) {
                const double t = cs[i] * H[i][j] + sn[i] * H[i + 1][j];
                H[i + 1][j] = -sn[i] * H[i][j] + cs[i] * H[i + 1][j];
                H[i][j] = t;
            }
            const double r = std::hypot(H[j][j], H[j + 1][j]);
            cs[j] = r == 0.0 ? 1.0 : H[j][j] / r;
            sn[j] = r == 0.0 ? 0.0 : H[j + 1][j] / r;
            H[j][j] = r;
            H[j + 1][j] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] = cs[j] * g[j];
            ++res.iterations;
            res.relative_residual = std::abs(g[j + 1]) / bnorm;
            res.trace.push_back(res.relative_residual);
            if (res.relative_residual <= options.tolerance || hn == 0.0) {
                ++j;
                break;
            }
        }
        // Back substitution for the j-dimensional least-squares solution.
        Vec y(j, 0.0);
        for (int i = j - 1; i >= 0; --i) {
            double s = g[i];
            for (int k = i + 1; k < j; ++k) s -= H[i][k] * y[k];
            y[i] = H[i][i] == 0.0 ? 0.0 : s / H[i][i];
        }
        std::fill(w.begin(), w.end(), 0.0);
        for (int i = 0; i < j; ++i) {
            for (std::size_t k = 0; k < n; ++k) w[k] += y[i] * V[i][k];
        }
        preconditioned(w, z);
        for (std::size_t k = 0; k < n; ++k) x[k] += z[k];
        if (res.relative_residual <= options.tolerance) {
            // Confirm against the true residual; the recurrence can drift.
            apply(x, ax);
            double s = 0.0;
            for (std::size_t k = 0; k < n; ++k) s += (b[k] - ax[k]) * (b[k] - ax[k]);
            res.relative_residual = std::sqrt(s) / bnorm;
            if (res.relative_residual <= options.tolerance) {
                res.converged = true;
                return res;
            }
        }
    }
    return res;
}

}  // namespace blayer
