#include "blayer/lattice.hpp"

#include "blayer/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <regex>
#include <sstream>

namespace blayer {

namespace {

struct ExtGcd {
    std::int64_t g, x, y;
};

// g = a x + b y, g >= 0
ExtGcd ext_gcd(std::int64_t a, std::int64_t b) {
    std::int64_t old_r = a, r = b, old_s = 1, s = 0, old_t = 0, t = 1;
    while (r != 0) {
        const std::int64_t q = old_r / r;
        std::int64_t tmp = old_r - q * r;
        old_r = r;
        r = tmp;
        tmp = old_s - q * s;
        old_s = s;
        s = tmp;
        tmp = old_t - q * t;
        old_t = t;
        t = tmp;
    }
    if (old_r < 0) return {-old_r, -old_s, -old_t};
    return {old_r, old_s, old_t};
}

std::int64_t idot(const IVec& a, const IVec& b) {
    std::int64_t s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// Flips v so its first nonzero component is positive.
template <typename V>
void orient(V& v) {
    for (auto c : v) {
        if (c > 0) return;
        if (c < 0) {
            for (auto& x : v) x = -x;
            return;
        }
    }
}

}  // namespace

std::int64_t gcd(std::int64_t a, std::int64_t b) {
    a = std::llabs(a);
    b = std::llabs(b);
    while (b != 0) {
        const std::int64_t t = a % b;
        a = b;
        b = t;
    }
    return a;
}

double norm(const Vec& v) { return std::sqrt(dot(v, v)); }

double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

Vec to_real(const IVec& v) { return Vec(v.begin(), v.end()); }

Vec normalized(const Vec& v) {
    const double n = norm(v);
    Vec out(v);
    for (auto& x : out) x /= n;
    return out;
}

void gauss_reduce(IVec& a, IVec& b) {
    if (idot(a, a) > idot(b, b)) std::swap(a, b);
    for (;;) {
        const std::int64_t aa = idot(a, a);
        const std::int64_t ab = idot(a, b);
        // nearest integer to ab/aa
        const auto q = static_cast<std::int64_t>(std::llround(static_cast<double>(ab) / static_cast<double>(aa)));
        for (std::size_t i = 0; i < a.size(); ++i) b[i] -= q * a[i];
        if (idot(b, b) >= aa) break;
        std::swap(a, b);
    }
}

RationalDirection make_rational_direction(const IVec& v) {
    const int d = static_cast<int>(v.size());
    if (d != 2 && d != 3) throw InvalidInput("rational direction must have dimension 2 or 3");
    std::int64_t g = 0;
    for (auto c : v) g = gcd(g, c);
    if (g == 0) throw InvalidInput("rational direction: zero vector");

    RationalDirection r;
    r.xi.resize(d);
    for (int i = 0; i < d; ++i) r.xi[i] = v[i] / g;
    r.norm = std::sqrt(static_cast<double>(idot(r.xi, r.xi)));
    r.xi_hat.resize(d);
    for (int i = 0; i < d; ++i) r.xi_hat[i] = static_cast<double>(r.xi[i]) / r.norm;

    if (d == 2) {
        r.periods.push_back({-r.xi[1], r.xi[0]});
        const auto e = ext_gcd(r.xi[0], r.xi[1]);
        r.bezout = {e.x, e.y};
    } else {
        const std::int64_t a = r.xi[0], b = r.xi[1], c = r.xi[2];
        IVec u, w;
        if (a == 0 && b == 0) {
            u = {1, 0, 0};
            w = {0, 1, 0};
            r.bezout = {0, 0, c};  // c = ±1
        } else {
            const auto e = ext_gcd(a, b);  // a x + b y = g1
            u = {b / e.g, -a / e.g, 0};
            w = {c * e.x, c * e.y, -e.g};
            // |u × w| = |xi| so {u, w} is a basis of the orthogonal sublattice.
            const auto f = ext_gcd(e.g, c);  // g1 s + c t = 1
            r.bezout = {f.x * e.x, f.x * e.y, f.y};
        }
        gauss_reduce(u, w);
        orient(u);
        orient(w);
        r.periods = {u, w};
    }
    r.period_bound = 0.0;
    for (const auto& l : r.periods) {
        r.period_bound = std::max(r.period_bound, std::sqrt(static_cast<double>(idot(l, l))));
    }
    return r;
}

Vec canonical_orthogonal(const RationalDirection& xi) {
    Vec e = normalized(to_real(xi.periods.front()));
    orient(e);
    return e;
}

DirectionalApproach decompose_direction(const Vec& n, const RationalDirection& xi) {
    if (static_cast<int>(n.size()) != xi.dim()) throw InvalidInput("decompose_direction: dimension mismatch");
    if (std::abs(norm(n) - 1.0) > 1e-9) throw InvalidInput("decompose_direction: n is not a unit vector");

    DirectionalApproach out;
    out.n = n;
    out.xi = xi;
    const double c = std::clamp(dot(n, xi.xi_hat), -1.0, 1.0);
    const int d = xi.dim();
    // sin from the orthogonal component keeps small angles accurate
    Vec perp(d);
    for (int i = 0; i < d; ++i) perp[i] = c * xi.xi_hat[i] - n[i];
    const double s = norm(perp);
    out.epsilon = std::atan2(s, c);
    if (s < 1e-14) {
        out.eta = canonical_orthogonal(xi);
    } else {
        out.eta = perp;
        for (auto& x : out.eta) x /= s;
    }
    return out;
}

DiophantineApprox dirichlet_approximate(const Vec& n, std::int64_t Q) {
    if (Q < 1) throw InvalidInput("dirichlet_approximate: Q must be >= 1");
    const int d = static_cast<int>(n.size());
    if (d < 2) throw InvalidInput("dirichlet_approximate: dimension must be >= 2");

    DiophantineApprox best;
    best.n = n;
    best.Q = Q;
    best.error = std::numeric_limits<double>::infinity();
    IVec cand(d);
    for (std::int64_t k = 1; k <= Q; ++k) {
        bool nonzero = false;
        double err2 = 0.0;
        for (int i = 0; i < d; ++i) {
            cand[i] = std::llround(static_cast<double>(k) * n[i]);
            nonzero = nonzero || cand[i] != 0;
            const double diff = n[i] - static_cast<double>(cand[i]) / static_cast<double>(k);
            err2 += diff * diff;
        }
        if (!nonzero) continue;
        const double err = std::sqrt(err2);
        if (err < best.error * (1.0 - 1e-12)) {
            best.error = err;
            best.k = k;
            best.xi = cand;
        }
    }
    best.constant = best.error * static_cast<double>(best.k) *
                    std::pow(static_cast<double>(Q), 1.0 / static_cast<double>(d - 1));
    return best;
}

DirectionSpec parse_direction(const std::string& text) {
    static const std::regex re(R"(^\s*(rational|unit)\s*:\s*\[([^\]]*)\]\s*$)");
    std::smatch m;
    if (!std::regex_match(text, m, re)) {
        throw InvalidInput("direction literal must look like 'rational: [p,q]' or 'unit: [x,y]', got '" + text + "'");
    }
    std::vector<std::string> parts;
    std::stringstream ss(m[2].str());
    std::string item;
    while (std::getline(ss, item, ',')) parts.push_back(item);
    if (parts.size() != 2 && parts.size() != 3) throw InvalidInput("direction literal needs 2 or 3 components");

    if (m[1] == "rational") {
        IVec v;
        for (const auto& p : parts) {
            std::size_t pos = 0;
            const std::string t = std::regex_replace(p, std::regex(R"(^\s+|\s+$)"), "");
            const long long x = std::stoll(t, &pos);
            if (pos != t.size()) throw InvalidInput("non-integer component in rational direction: '" + p + "'");
            v.push_back(x);
        }
        return v;
    }
    Vec v;
    for (const auto& p : parts) v.push_back(std::stod(p));
    const double len = norm(v);
    if (len == 0.0) throw InvalidInput("unit direction literal is zero");
    // Already unit: keep the bits so printed literals parse back unchanged.
    if (std::abs(len - 1.0) <= 4e-16) return v;
    return normalized(v);
}

std::string format_direction(const DirectionSpec& spec) {
    std::ostringstream os;
    os.precision(17);
    if (const auto* iv = std::get_if<IVec>(&spec)) {
        os << "rational: [";
        for (std::size_t i = 0; i < iv->size(); ++i) os << (i ? "," : "") << (*iv)[i];
    } else {
        const auto& v = std::get<Vec>(spec);
        os << "unit: [";
        for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
    }
    os << "]";
    return os.str();
}

Vec direction_unit_vector(const DirectionSpec& spec) {
    if (const auto* iv = std::get_if<IVec>(&spec)) return normalized(to_real(*iv));
    return normalized(std::get<Vec>(spec));
}

}  // namespace blayer
