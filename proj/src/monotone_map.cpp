#include "blayer/monotone_map.hpp"

#include "blayer/errors.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace blayer {

// ---------------------------------------------------------------------------
// MonotoneMap defaults

void MonotoneMap::jacobian(std::span<const double> y, std::span<const double> p, std::span<double> out) const {
    const int d = dim();
    double pp[3], fp[3], fm[3];
    for (int j = 0; j < d; ++j) {
        const double h = 1e-6 * std::max(1.0, std::abs(p[j]));
        for (int k = 0; k < d; ++k) pp[k] = p[k];
        pp[j] = p[j] + h;
        flux(y, std::span<const double>(pp, d), std::span<double>(fp, d));
        pp[j] = p[j] - h;
        flux(y, std::span<const double>(pp, d), std::span<double>(fm, d));
        for (int i = 0; i < d; ++i) out[i * d + j] = (fp[i] - fm[i]) / (2.0 * h);
    }
}

double MonotoneMap::potential(std::span<const double>, std::span<const double>) const {
    throw InvalidInput("operator '" + name() + "' has no potential");
}

MapPtr MonotoneMap::smoothed(double) const { return shared_from_this(); }

MapPtr MonotoneMap::restrict_to_plane(const Vec& b0, const Vec& b1, double) const {
    return std::make_shared<ProjectedMap>(shared_from_this(), b0, b1);
}

MapPtr MonotoneMap::rescaled(std::int64_t m) const {
    if (!depends_on_y() || m == 1) return shared_from_this();
    return std::make_shared<RescaledMap>(shared_from_this(), m);
}

Vec MonotoneMap::flux(const Vec& y, const Vec& p) const {
    Vec out(dim());
    flux(std::span<const double>(y), std::span<const double>(p), std::span<double>(out));
    return out;
}

// ---------------------------------------------------------------------------
// LinearMap

LinearMap::LinearMap(LinearTensorField A) : A_(std::move(A)) {
    if (A_.components() != 1) throw InvalidInput("LinearMap needs a scalar (N = 1) tensor");
    symmetric_ = A_.is_symmetric();
}

void LinearMap::flux(std::span<const double> y, std::span<const double> p, std::span<double> out) const {
    const int d = A_.dim();
    double a[9];
    A_.evaluate(y, std::span<double>(a, d * d));
    for (int i = 0; i < d; ++i) {
        double s = 0.0;
        for (int j = 0; j < d; ++j) s += a[i * d + j] * p[j];
        out[i] = s;
    }
}

void LinearMap::jacobian(std::span<const double> y, std::span<const double>, std::span<double> out) const {
    A_.evaluate(y, out.first(A_.dim() * A_.dim()));
}

double LinearMap::potential(std::span<const double> y, std::span<const double> p) const {
    if (!symmetric_) return MonotoneMap::potential(y, p);
    const int d = A_.dim();
    double a[9];
    A_.evaluate(y, std::span<double>(a, d * d));
    double s = 0.0;
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) s += p[i] * a[i * d + j] * p[j];
    }
    return 0.5 * s;
}

MapPtr LinearMap::rescaled(std::int64_t m) const {
    if (m == 1 || A_.is_constant()) return shared_from_this();
    return std::make_shared<LinearMap>(A_.rescaled(m));
}

// ---------------------------------------------------------------------------
// KinkedMap3d

double KinkedMap3d::f(double p1, double p3) { return (std::sqrt(8.0 * p1 * p1 + 9.0 * p3 * p3) + p3) / 8.0; }

void KinkedMap3d::flux(std::span<const double>, std::span<const double> p, std::span<double> out) const {
    out[0] = p[0];
    out[1] = p[1];
    out[2] = p[2] + f(p[0], p[2]);
}

void KinkedMap3d::jacobian(std::span<const double>, std::span<const double> p, std::span<double> out) const {
    for (int k = 0; k < 9; ++k) out[k] = 0.0;
    out[0] = 1.0;
    out[4] = 1.0;
    const double s = std::sqrt(8.0 * p[0] * p[0] + 9.0 * p[2] * p[2]);
    double d1 = 0.0, d3 = 1.0 / 8.0;
    // at p1 = p3 = 0 the map is not differentiable; use the one-sided slope along e3
    if (s > 0.0) {
        d1 = p[0] / s;
        d3 = (9.0 * p[2] / s + 1.0) / 8.0;
    }
    out[6] = d1;
    out[8] = 1.0 + d3;
}

MapPtr KinkedMap3d::restrict_to_plane(const Vec& b0, const Vec& b1, double tau) const {
    if (std::abs(b0[0]) < 1e-14 && std::abs(b1[0]) < 1e-14) {
        // p1 ≡ 0: f(0, p3) = (3|p3| + p3)/8 and B is orthonormal, so the
        // projected map is p2 + c[(1/8)(c·p2) + (3/8)|c·p2|] with c = Bᵀ e3.
        return std::make_shared<KinkedPlaneMap>(Vec{b0[2], b1[2]}, tau);
    }
    return MonotoneMap::restrict_to_plane(b0, b1, tau);
}

// ---------------------------------------------------------------------------
// KinkedPlaneMap

KinkedPlaneMap::KinkedPlaneMap(Vec c, double tau) : c_(std::move(c)), tau_(tau) {
    if (c_.size() != 2) throw InvalidInput("KinkedPlaneMap: direction must be two-dimensional");
    if (tau_ < 0.0) throw InvalidInput("KinkedPlaneMap: smoothing width must be nonnegative");
}

double KinkedPlaneMap::huber(double t, double tau) {
    const double a = std::abs(t);
    if (tau <= 0.0) return a;
    return a <= tau ? t * t / (2.0 * tau) : a - 0.5 * tau;
}

double KinkedPlaneMap::huber_slope(double t, double tau) {
    if (tau <= 0.0 || std::abs(t) >= tau) return t > 0.0 ? 1.0 : (t < 0.0 ? -1.0 : 0.0);
    return t / tau;
}

double KinkedPlaneMap::huber_integral(double t, double tau) {
    const double a = std::abs(t);
    const double sgn = t < 0.0 ? -1.0 : 1.0;
    if (tau <= 0.0) return sgn * 0.5 * a * a;
    if (a <= tau) return sgn * a * a * a / (6.0 * tau);
    return sgn * (0.5 * a * a - 0.5 * tau * a + tau * tau / 6.0);
}

void KinkedPlaneMap::flux(std::span<const double>, std::span<const double> p, std::span<double> out) const {
    const double t = c_[0] * p[0] + c_[1] * p[1];
    const double g = t / 8.0 + 3.0 / 8.0 * huber(t, tau_);
    out[0] = p[0] + c_[0] * g;
    out[1] = p[1] + c_[1] * g;
}

void KinkedPlaneMap::jacobian(std::span<const double>, std::span<const double> p, std::span<double> out) const {
    const double t = c_[0] * p[0] + c_[1] * p[1];
    const double gp = 1.0 / 8.0 + 3.0 / 8.0 * huber_slope(t, tau_);
    out[0] = 1.0 + c_[0] * c_[0] * gp;
    out[1] = c_[0] * c_[1] * gp;
    out[2] = out[1];
    out[3] = 1.0 + c_[1] * c_[1] * gp;
}

double KinkedPlaneMap::potential(std::span<const double>, std::span<const double> p) const {
    const double t = c_[0] * p[0] + c_[1] * p[1];
    return 0.5 * (p[0] * p[0] + p[1] * p[1]) + t * t / 16.0 + 3.0 / 8.0 * huber_integral(t, tau_);
}

// ---------------------------------------------------------------------------
// ProjectedMap

ProjectedMap::ProjectedMap(MapPtr base, Vec b0, Vec b1) : base_(std::move(base)), b0_(std::move(b0)), b1_(std::move(b1)) {
    const int d = base_->dim();
    if (static_cast<int>(b0_.size()) != d || static_cast<int>(b1_.size()) != d) {
        throw InvalidInput("ProjectedMap: basis vectors have the wrong dimension");
    }
}

void ProjectedMap::lift(std::span<const double> x, std::span<double> y) const {
    for (std::size_t i = 0; i < b0_.size(); ++i) y[i] = b0_[i] * x[0] + b1_[i] * x[1];
}

void ProjectedMap::flux(std::span<const double> y, std::span<const double> p, std::span<double> out) const {
    const int d = base_->dim();
    double yy[3], pp[3], aa[3];
    lift(y, std::span<double>(yy, d));
    lift(p, std::span<double>(pp, d));
    base_->flux(std::span<const double>(yy, d), std::span<const double>(pp, d), std::span<double>(aa, d));
    out[0] = 0.0;
    out[1] = 0.0;
    for (int i = 0; i < d; ++i) {
        out[0] += b0_[i] * aa[i];
        out[1] += b1_[i] * aa[i];
    }
}

void ProjectedMap::jacobian(std::span<const double> y, std::span<const double> p, std::span<double> out) const {
    const int d = base_->dim();
    double yy[3], pp[3], J[9];
    lift(y, std::span<double>(yy, d));
    lift(p, std::span<double>(pp, d));
    base_->jacobian(std::span<const double>(yy, d), std::span<const double>(pp, d), std::span<double>(J, d * d));
    const Vec* B[2] = {&b0_, &b1_};
    for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
            double s = 0.0;
            for (int i = 0; i < d; ++i) {
                for (int j = 0; j < d; ++j) s += (*B[a])[i] * J[i * d + j] * (*B[b])[j];
            }
            out[a * 2 + b] = s;
        }
    }
}

double ProjectedMap::potential(std::span<const double> y, std::span<const double> p) const {
    const int d = base_->dim();
    double yy[3], pp[3];
    lift(y, std::span<double>(yy, d));
    lift(p, std::span<double>(pp, d));
    return base_->potential(std::span<const double>(yy, d), std::span<const double>(pp, d));
}

// ---------------------------------------------------------------------------
// RescaledMap

namespace {
void scale_point(std::span<const double> y, std::int64_t m, double* out) {
    for (std::size_t i = 0; i < y.size(); ++i) out[i] = static_cast<double>(m) * y[i];
}
}  // namespace

void RescaledMap::flux(std::span<const double> y, std::span<const double> p, std::span<double> out) const {
    double yy[3];
    scale_point(y, m_, yy);
    base_->flux(std::span<const double>(yy, y.size()), p, out);
}

void RescaledMap::jacobian(std::span<const double> y, std::span<const double> p, std::span<double> out) const {
    double yy[3];
    scale_point(y, m_, yy);
    base_->jacobian(std::span<const double>(yy, y.size()), p, out);
}

double RescaledMap::potential(std::span<const double> y, std::span<const double> p) const {
    double yy[3];
    scale_point(y, m_, yy);
    return base_->potential(std::span<const double>(yy, y.size()), p);
}

// ---------------------------------------------------------------------------
// FunctionMap

FunctionMap::FunctionMap(int dim, std::string name, FluxFn flux, PotentialFn potential, bool homogeneous,
                         bool depends_on_y, double lambda)
    : dim_(dim),
      name_(std::move(name)),
      flux_(std::move(flux)),
      potential_(std::move(potential)),
      homogeneous_(homogeneous),
      depends_on_y_(depends_on_y),
      lambda_(lambda) {}

void FunctionMap::flux(std::span<const double> y, std::span<const double> p, std::span<double> out) const {
    flux_(y, p, out);
}

double FunctionMap::potential(std::span<const double> y, std::span<const double> p) const {
    if (!potential_) return MonotoneMap::potential(y, p);
    return potential_(y, p);
}

// ---------------------------------------------------------------------------
// Sampled checks

namespace {

void random_in_ball(std::mt19937_64& rng, int d, double radius, double* out) {
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double n2 = 0.0;
    for (int i = 0; i < d; ++i) {
        out[i] = g(rng);
        n2 += out[i] * out[i];
    }
    const double r = radius * std::pow(u(rng), 1.0 / d) / std::sqrt(n2);
    for (int i = 0; i < d; ++i) out[i] *= r;
}

}  // namespace

MonotonicityReport validate_operator(const MonotoneMap& op, int sample_count, double radius, std::uint64_t seed) {
    if (sample_count < 1000) throw InvalidInput("validate_operator: at least 1000 samples required");
    const int d = op.dim();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    MonotonicityReport rep;
    rep.lambda_hat = std::numeric_limits<double>::infinity();
    rep.lipschitz_hat = 0.0;
    double y[3], p[3], q[3], ap[3], aq[3];
    for (int n = 0; n < sample_count; ++n) {
        for (int i = 0; i < d; ++i) y[i] = uni(rng);
        random_in_ball(rng, d, radius, p);
        random_in_ball(rng, d, radius, q);
        std::span<const double> ys(y, d);
        op.flux(ys, std::span<const double>(p, d), std::span<double>(ap, d));
        op.flux(ys, std::span<const double>(q, d), std::span<double>(aq, d));
        double num = 0.0, den = 0.0, da = 0.0;
        for (int i = 0; i < d; ++i) {
            num += (ap[i] - aq[i]) * (p[i] - q[i]);
            den += (p[i] - q[i]) * (p[i] - q[i]);
            da += (ap[i] - aq[i]) * (ap[i] - aq[i]);
        }
        if (den < 1e-24) continue;
        const double mono = num / den;
        if (mono < rep.lambda_hat) {
            rep.lambda_hat = mono;
            rep.worst_p.assign(p, p + d);
            rep.worst_q.assign(q, q + d);
        }
        rep.lipschitz_hat = std::max(rep.lipschitz_hat, std::sqrt(da / den));
    }
    rep.samples = sample_count;
    if (!(rep.lambda_hat > 0.0)) {
        throw OperatorInvalid("operator '" + op.name() + "' violates monotonicity", rep.worst_p, rep.worst_q);
    }
    return rep;
}

double homogeneity_check(const MonotoneMap& op, int sample_count, std::uint64_t seed) {
    const int d = op.dim();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::uniform_real_distribution<double> logt(std::log(0.1), std::log(10.0));
    double worst = 0.0;
    double y[3], p[3], tp[3], a[3], at[3];
    for (int n = 0; n < sample_count; ++n) {
        for (int i = 0; i < d; ++i) y[i] = uni(rng);
        random_in_ball(rng, d, 1.0, p);
        const double t = std::exp(logt(rng));
        for (int i = 0; i < d; ++i) tp[i] = t * p[i];
        std::span<const double> ys(y, d);
        op.flux(ys, std::span<const double>(p, d), std::span<double>(a, d));
        op.flux(ys, std::span<const double>(tp, d), std::span<double>(at, d));
        double diff = 0.0, pn = 0.0;
        for (int i = 0; i < d; ++i) {
            diff += (at[i] - t * a[i]) * (at[i] - t * a[i]);
            pn += p[i] * p[i];
        }
        worst = std::max(worst, std::sqrt(diff) / (t * std::sqrt(pn) + 1e-300));
    }
    return worst;
}

double potential_gradient_consistency(const MonotoneMap& op, int sample_count, double h, double radius, std::uint64_t seed) {
    if (!op.has_potential()) throw InvalidInput("potential_gradient_consistency: operator has no potential");
    const int d = op.dim();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    double worst = 0.0;
    double y[3], p[3], a[3], pp[3];
    for (int n = 0; n < sample_count; ++n) {
        for (int i = 0; i < d; ++i) y[i] = uni(rng);
        random_in_ball(rng, d, radius, p);
        std::span<const double> ys(y, d);
        op.flux(ys, std::span<const double>(p, d), std::span<double>(a, d));
        for (int j = 0; j < d; ++j) {
            for (int i = 0; i < d; ++i) pp[i] = p[i];
            pp[j] = p[j] + h;
            const double fp = op.potential(ys, std::span<const double>(pp, d));
            pp[j] = p[j] - h;
            const double fm = op.potential(ys, std::span<const double>(pp, d));
            worst = std::max(worst, std::abs((fp - fm) / (2.0 * h) - a[j]));
        }
    }
    return worst;
}

double kinked_identity_defect(int sample_count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    double worst = 0.0;
    for (int n = 0; n < sample_count; ++n) {
        const double p1 = g(rng), p3 = g(rng);
        const double f = KinkedMap3d::f(p1, p3);
        const double scale = p1 * p1 + p3 * p3;
        worst = std::max(worst, std::abs(8.0 * f * f - 2.0 * p3 * f - scale) / scale);
    }
    return worst;
}

}  // namespace blayer
