#include "blayer/field.hpp"

#include "blayer/errors.hpp"

#include <cmath>
#include <numbers>

namespace blayer {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double freq_norm(const IVec& k) {
    double s = 0.0;
    for (auto c : k) s += static_cast<double>(c) * static_cast<double>(c);
    return std::sqrt(s);
}

double coef_sup(const Vec& c) {
    double m = 0.0;
    for (double x : c) m = std::max(m, std::abs(x));
    return m;
}
}  // namespace

PeriodicField::PeriodicField(int dim, Vec constant, std::vector<TrigTerm> terms)
    : dim_(dim), constant_(std::move(constant)), terms_(std::move(terms)) {
    if (dim_ < 1 || dim_ > 3) throw InvalidInput("periodic field: dimension must be 1, 2 or 3");
    if (constant_.empty()) throw InvalidInput("periodic field: needs at least one component");
    for (const auto& t : terms_) {
        if (static_cast<int>(t.freq.size()) != dim_) throw InvalidInput("periodic field: frequency has wrong dimension");
        if (t.coef.size() != constant_.size()) throw InvalidInput("periodic field: coefficient has wrong component count");
    }
}

PeriodicField PeriodicField::constant(int dim, Vec value) { return PeriodicField(dim, std::move(value), {}); }

void PeriodicField::evaluate(std::span<const double> y, std::span<double> out) const {
    const std::size_t n = constant_.size();
    for (std::size_t c = 0; c < n; ++c) out[c] = constant_[c];
    for (const auto& t : terms_) {
        double arg = 0.0;
        for (int a = 0; a < dim_; ++a) arg += static_cast<double>(t.freq[a]) * y[a];
        // reduce before scaling so that integer shifts of y are exact up to rounding of arg
        arg -= std::floor(arg);
        const double v = (t.phase == Phase::Cos) ? std::cos(kTwoPi * arg) : std::sin(kTwoPi * arg);
        for (std::size_t c = 0; c < n; ++c) out[c] += t.coef[c] * v;
    }
}

Vec PeriodicField::evaluate(std::span<const double> y) const {
    Vec out(constant_.size());
    evaluate(y, out);
    return out;
}

double PeriodicField::evaluate_scalar(std::span<const double> y) const {
    double out[8];
    if (constant_.size() > 8) throw InvalidInput("evaluate_scalar on a field with many components");
    evaluate(y, std::span<double>(out, constant_.size()));
    return out[0];
}

Vec PeriodicField::derivative(std::span<const double> y, std::span<const int> order) const {
    if (static_cast<int>(order.size()) != dim_) throw InvalidInput("derivative: multi-index has wrong dimension");
    int total = 0;
    for (int o : order) {
        if (o < 0) throw InvalidInput("derivative: negative order");
        total += o;
    }
    if (total > 5) throw InvalidInput("derivative: total order above 5");
    if (total == 0) return evaluate(y);

    Vec out(constant_.size(), 0.0);
    for (const auto& t : terms_) {
        double scale = 1.0;
        for (int a = 0; a < dim_; ++a) scale *= std::pow(kTwoPi * static_cast<double>(t.freq[a]), order[a]);
        if (scale == 0.0) continue;
        double arg = 0.0;
        for (int a = 0; a < dim_; ++a) arg += static_cast<double>(t.freq[a]) * y[a];
        arg -= std::floor(arg);
        const double th = kTwoPi * arg;
        // d^j/dθ^j of cos θ cycles cos, -sin, -cos, sin; sin is cos shifted by one step back.
        const int shift = (t.phase == Phase::Cos ? total : total + 3) % 4;
        double v = 0.0;
        switch (shift) {
            case 0: v = std::cos(th); break;
            case 1: v = -std::sin(th); break;
            case 2: v = -std::cos(th); break;
            default: v = std::sin(th); break;
        }
        for (std::size_t c = 0; c < out.size(); ++c) out[c] += t.coef[c] * scale * v;
    }
    return out;
}

double PeriodicField::cm_norm_bound(int m) const {
    double s = coef_sup(constant_);
    for (const auto& t : terms_) {
        const double w = kTwoPi * freq_norm(t.freq);
        s += coef_sup(t.coef) * std::max(1.0, std::pow(w, m));
    }
    return s;
}

double PeriodicField::gradient_bound() const {
    double s = 0.0;
    for (const auto& t : terms_) s += coef_sup(t.coef) * kTwoPi * freq_norm(t.freq);
    return s;
}

double PeriodicField::sup_bound() const {
    double s = coef_sup(constant_);
    for (const auto& t : terms_) s += coef_sup(t.coef);
    return s;
}

PeriodicField PeriodicField::rescaled(std::int64_t m) const {
    if (m < 1) throw InvalidInput("rescaled: factor must be a positive integer");
    std::vector<TrigTerm> terms = terms_;
    for (auto& t : terms) {
        for (auto& k : t.freq) k *= m;
    }
    return PeriodicField(dim_, constant_, std::move(terms));
}

PeriodicField PeriodicField::shifted(std::span<const double> shift) const {
    std::vector<TrigTerm> terms;
    for (const auto& t : terms_) {
        double arg = 0.0;
        for (int a = 0; a < dim_; ++a) arg += static_cast<double>(t.freq[a]) * shift[a];
        arg -= std::floor(arg);
        const double c = std::cos(kTwoPi * arg), s = std::sin(kTwoPi * arg);
        TrigTerm tc{t.coef, t.freq, Phase::Cos}, ts{t.coef, t.freq, Phase::Sin};
        // cos(θ+φ) = cosθ cosφ − sinθ sinφ ; sin(θ+φ) = sinθ cosφ + cosθ sinφ
        for (std::size_t i = 0; i < t.coef.size(); ++i) {
            if (t.phase == Phase::Cos) {
                tc.coef[i] = t.coef[i] * c;
                ts.coef[i] = -t.coef[i] * s;
            } else {
                tc.coef[i] = t.coef[i] * s;
                ts.coef[i] = t.coef[i] * c;
            }
        }
        terms.push_back(std::move(tc));
        terms.push_back(std::move(ts));
    }
    return PeriodicField(dim_, constant_, std::move(terms));
}

}  // namespace blayer
