#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace blayer {

using IVec = std::vector<std::int64_t>;
using Vec = std::vector<double>;

/// Irreducible lattice direction together with an integer basis of the
/// sublattice orthogonal to it.
struct RationalDirection {
    IVec xi;                   ///< gcd(xi) == 1
    Vec xi_hat;                ///< xi / |xi|
    double norm = 0.0;         ///< |xi|
    std::vector<IVec> periods; ///< d-1 vectors spanning Z^d ∩ xi^⊥
    double period_bound = 0.0; ///< max_j |periods[j]|
    IVec bezout;               ///< some z with z·xi == 1

    int dim() const noexcept { return static_cast<int>(xi.size()); }
};

/// n = cos(epsilon) xi_hat - sin(epsilon) eta with eta ⊥ xi.
struct DirectionalApproach {
    Vec n;
    RationalDirection xi;
    double epsilon = 0.0;
    Vec eta;
};

struct DiophantineApprox {
    Vec n;
    IVec xi;       ///< unreduced numerator, xi/k ≈ n
    std::int64_t k = 1;
    std::int64_t Q = 1;
    double error = 0.0;      ///< |n - xi/k|
    double constant = 0.0;   ///< error * k * Q^{1/(d-1)}, the empirical Dirichlet constant
};

std::int64_t gcd(std::int64_t a, std::int64_t b);

/// Reduces `v` by its gcd and builds the orthogonal period basis.
/// Throws InvalidInput on the zero vector or d ∉ {2,3}.
RationalDirection make_rational_direction(const IVec& v);

/// Throws InvalidInput if |n| differs from 1 by more than 1e-9.
DirectionalApproach decompose_direction(const Vec& n, const RationalDirection& xi);

/// Best approximation n ≈ xi/k over 1 ≤ k ≤ Q. For a fixed k the optimal
/// numerator is the componentwise rounding of k·n; ties go to the smaller k.
DiophantineApprox dirichlet_approximate(const Vec& n, std::int64_t Q);

/// Lagrange (Gauss) reduction of a rank-2 integer lattice basis in place.
void gauss_reduce(IVec& a, IVec& b);

/// Fixed unit vector orthogonal to xi whose first nonzero component is positive.
Vec canonical_orthogonal(const RationalDirection& xi);

double norm(const Vec& v);
double dot(const Vec& a, const Vec& b);
Vec to_real(const IVec& v);
Vec normalized(const Vec& v);

/// Direction literal from a config string: "rational: [p,q,r]" or "unit: [x,y,z]".
/// A "unit" literal is normalized after parsing.
using DirectionSpec = std::variant<IVec, Vec>;
DirectionSpec parse_direction(const std::string& text);
std::string format_direction(const DirectionSpec& spec);
/// Unit vector for either alternative.
Vec direction_unit_vector(const DirectionSpec& spec);

}  // namespace blayer
