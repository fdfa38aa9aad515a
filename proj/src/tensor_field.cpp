#include "blayer/tensor_field.hpp"

#include "blayer/errors.hpp"

#include <Eigen/Dense>

#include <random>

namespace blayer {

LinearTensorField::LinearTensorField(int dim, int components, std::vector<PeriodicField> entries, double lambda)
    : dim_(dim), n_(components), entries_(std::move(entries)), lambda_(lambda) {
    if (dim_ < 1 || dim_ > 3) throw InvalidInput("tensor field: dimension must be 1..3");
    if (n_ < 1) throw InvalidInput("tensor field: needs at least one component");
    if (static_cast<int>(entries_.size()) != size() * size()) throw InvalidInput("tensor field: wrong number of entries");
    for (const auto& e : entries_) {
        if (e.dim() != dim_ || e.components() != 1) throw InvalidInput("tensor field: entries must be scalar fields of matching dimension");
    }
}

LinearTensorField LinearTensorField::isotropic(const PeriodicField& a, double lambda) {
    const int d = a.dim();
    std::vector<PeriodicField> e;
    e.reserve(d * d);
    for (int r = 0; r < d; ++r) {
        for (int c = 0; c < d; ++c) e.push_back(r == c ? a : PeriodicField::scalar_constant(d, 0.0));
    }
    return LinearTensorField(d, 1, std::move(e), lambda);
}

LinearTensorField LinearTensorField::constant(int dim, int components, std::span<const double> values, double lambda) {
    const int s = dim * components;
    if (static_cast<int>(values.size()) != s * s) throw InvalidInput("constant tensor: wrong number of values");
    std::vector<PeriodicField> e;
    e.reserve(values.size());
    for (double v : values) e.push_back(PeriodicField::scalar_constant(dim, v));
    return LinearTensorField(dim, components, std::move(e), lambda);
}

LinearTensorField LinearTensorField::decoupled(const LinearTensorField& scalar, int components) {
    if (scalar.components() != 1) throw InvalidInput("decoupled: base tensor must be scalar");
    const int d = scalar.dim();
    const int s = d * components;
    std::vector<PeriodicField> e;
    e.reserve(s * s);
    for (int r = 0; r < s; ++r) {
        for (int c = 0; c < s; ++c) {
            const int i = r / d, al = r % d, j = c / d, be = c % d;
            e.push_back(i == j ? scalar.entry(al, be) : PeriodicField::scalar_constant(d, 0.0));
        }
    }
    return LinearTensorField(d, components, std::move(e), scalar.lambda());
}

void LinearTensorField::evaluate(std::span<const double> y, std::span<double> out) const {
    for (std::size_t k = 0; k < entries_.size(); ++k) {
        const auto& f = entries_[k];
        out[k] = f.is_constant() ? f.constant_term()[0] : f.evaluate_scalar(y);
    }
}

std::vector<double> LinearTensorField::evaluate(std::span<const double> y) const {
    std::vector<double> out(entries_.size());
    evaluate(y, out);
    return out;
}

bool LinearTensorField::is_constant() const noexcept {
    for (const auto& e : entries_) {
        if (!e.is_constant()) return false;
    }
    return true;
}

bool LinearTensorField::is_symmetric() const {
    const int s = size();
    for (int r = 0; r < s; ++r) {
        for (int c = r + 1; c < s; ++c) {
            const auto& a = entry(r, c);
            const auto& b = entry(c, r);
            if (a.constant_term() != b.constant_term() || a.terms().size() != b.terms().size()) return false;
            for (std::size_t t = 0; t < a.terms().size(); ++t) {
                const auto& ta = a.terms()[t];
                const auto& tb = b.terms()[t];
                if (ta.coef != tb.coef || ta.freq != tb.freq || ta.phase != tb.phase) return false;
            }
        }
    }
    return true;
}

LinearTensorField LinearTensorField::rescaled(std::int64_t m) const {
    std::vector<PeriodicField> e;
    e.reserve(entries_.size());
    for (const auto& f : entries_) e.push_back(f.rescaled(m));
    return LinearTensorField(dim_, n_, std::move(e), lambda_);
}

LinearTensorField LinearTensorField::shifted(std::span<const double> shift) const {
    std::vector<PeriodicField> e;
    e.reserve(entries_.size());
    for (const auto& f : entries_) e.push_back(f.shifted(shift));
    return LinearTensorField(dim_, n_, std::move(e), lambda_);
}

std::vector<double> LinearTensorField::average() const {
    std::vector<double> out(entries_.size());
    for (std::size_t k = 0; k < entries_.size(); ++k) out[k] = entries_[k].constant_term()[0];
    return out;
}

EllipticityReport validate_tensor(const LinearTensorField& A, int sample_count, std::uint64_t seed) {
    const int s = A.size();
    const int d = A.dim();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    EllipticityReport rep;
    rep.lambda_hat = std::numeric_limits<double>::infinity();
    rep.upper_hat = -std::numeric_limits<double>::infinity();
    std::vector<double> y(d), vals(s * s);
    for (int n = 0; n < sample_count; ++n) {
        for (auto& v : y) v = uni(rng);
        A.evaluate(y, vals);
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> M(vals.data(), s, s);
        const Eigen::MatrixXd sym = 0.5 * (M + M.transpose());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
        const double lo = es.eigenvalues().minCoeff();
        const double hi = es.eigenvalues().maxCoeff();
        if (lo < rep.lambda_hat) {
            rep.lambda_hat = lo;
            rep.worst_y = y;
        }
        rep.upper_hat = std::max(rep.upper_hat, hi);
    }
    rep.samples = sample_count;
    if (!(rep.lambda_hat > 0.0)) {
        throw OperatorInvalid("tensor field is not elliptic at a sampled point", rep.worst_y, {});
    }
    return rep;
}

}  // namespace blayer
