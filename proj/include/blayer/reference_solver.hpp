#pragma once

#include "blayer/grid.hpp"

#include <complex>
#include <memory>
#include <span>
#include <vector>

namespace blayer {

enum class TopCondition { Neumann, Dirichlet };

/// Exact solver for the Q1 discretization of −∇·(C∇u) with a constant
/// symmetric d×d tensor C on a structured grid. Lateral (periodic) axes are
/// diagonalized by a DFT; the normal axis leaves one tridiagonal system per
/// lateral mode. On a torus every axis is transformed and the zero mode is
/// set to 0.
///
/// Unknowns are the free nodes: slices 1..K (Neumann top) or 1..K-1
/// (Dirichlet top) of a strip, every node of a torus.
///
/// Not safe for concurrent calls on one instance (owns scratch buffers).
class ReferenceSolver {
public:
    ReferenceSolver(const StructuredGrid& grid, std::span<const double> C, TopCondition top);
    ~ReferenceSolver();
    ReferenceSolver(const ReferenceSolver&) = delete;
    ReferenceSolver& operator=(const ReferenceSolver&) = delete;

    std::size_t size() const noexcept { return rows_ * lateral_; }

    /// x = K⁻¹ rhs on the free nodes.
    void solve(std::span<const double> rhs, std::span<double> x) const;

    /// Discrete C-harmonic function with the given bottom slice (and top slice
    /// for a Dirichlet top). Returns values on every node of the strip.
    std::vector<double> extend(std::span<const double> bottom, std::span<const double> top = {}) const;

private:
    using cplx = std::complex<double>;
    void transform(bool forward) const;
    void solve_modes() const;

    const StructuredGrid* grid_;
    TopCondition top_;
    bool torus_;
    std::size_t lateral_ = 0;  ///< nodes per slice (all nodes on a torus)
    std::size_t rows_ = 0;     ///< free slices (1 on a torus)
    // Per mode: lower/upper couplings, interior and top-row diagonals.
    std::vector<cplx> lower_, upper_, diag_, diag_top_;
    // Thomas factors, rows_ × lateral_.
    std::vector<cplx> cprime_, inv_den_;
    struct Plans;
    std::unique_ptr<Plans> plans_;
};

}  // namespace blayer
