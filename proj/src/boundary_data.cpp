#include "blayer/boundary_data.hpp"

#include "blayer/errors.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace blayer {

PeriodicInterpolant::PeriodicInterpolant(double period, std::vector<Vec> samples, Interpolation kind)
    : period_(period), samples_(std::move(samples)), kind_(kind) {
    if (!(period_ > 0.0)) throw InvalidInput("interpolant: period must be positive");
    const std::size_t n = samples_.size();
    if (n < 3) throw InvalidInput("interpolant: at least 3 samples");
    const std::size_t N = samples_.front().size();
    for (const auto& s : samples_) {
        if (s.size() != N || N == 0) throw InvalidInput("interpolant: inconsistent sample sizes");
    }
    if (kind_ != Interpolation::CubicSpline) return;

    // Periodic cubic spline: M_{j-1} + 4 M_j + M_{j+1} = 6 (f_{j+1} - 2 f_j + f_{j-1}) / h².
    const double h = period_ / static_cast<double>(n);
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < n; ++j) {
        A(j, j) = 4.0;
        A(j, (j + 1) % n) += 1.0;
        A(j, (j + n - 1) % n) += 1.0;
    }
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
    second_.assign(n, Vec(N, 0.0));
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(n));
    for (std::size_t c = 0; c < N; ++c) {
        for (std::size_t j = 0; j < n; ++j) {
            rhs(j) = 6.0 * (samples_[(j + 1) % n][c] - 2.0 * samples_[j][c] + samples_[(j + n - 1) % n][c]) / (h * h);
        }
        const Eigen::VectorXd m = lu.solve(rhs);
        for (std::size_t j = 0; j < n; ++j) second_[j][c] = m(j);
    }
}

void PeriodicInterpolant::evaluate(double t, std::span<double> out) const {
    const std::size_t n = samples_.size();
    const double h = period_ / static_cast<double>(n);
    double x = std::fmod(t, period_);
    if (x < 0.0) x += period_;
    auto j = static_cast<std::size_t>(std::floor(x / h));
    if (j >= n) j = n - 1;
    const double a = (x - j * h) / h;  // local coordinate in [0,1]
    const std::size_t k = (j + 1) % n;
    for (std::size_t c = 0; c < samples_[j].size(); ++c) {
        const double f0 = samples_[j][c], f1 = samples_[k][c];
        double v = (1.0 - a) * f0 + a * f1;
        if (kind_ == Interpolation::CubicSpline) {
            const double m0 = second_[j][c], m1 = second_[k][c];
            v += h * h / 6.0 * (((1.0 - a) * (1.0 - a) * (1.0 - a) - (1.0 - a)) * m0 + (a * a * a - a) * m1);
        }
        out[c] = v;
    }
}

Vec PeriodicInterpolant::evaluate(double t) const {
    Vec out(components());
    evaluate(t, out);
    return out;
}

}  // namespace blayer
