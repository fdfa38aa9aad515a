#pragma once

#include "blayer/lattice.hpp"

#include <functional>

namespace blayer {

using LinearOperator = std::function<void(const Vec& x, Vec& y)>;

struct GmresOptions {
    double tolerance = 1e-10;  ///< relative to |b|
    int max_iterations = 1000;
    int restart = 50;
};

struct KrylovResult {
    int iterations = 0;
    double relative_residual = 0.0;
    bool converged = false;
    Vec trace;  ///< relative residual per iteration
};

/// Restarted GMRES with right preconditioning. `x` holds the initial guess on
/// entry. `precondition` may be empty.
KrylovResult gmres(const LinearOperator& apply, const LinearOperator& precondition, const Vec& b, Vec& x,
                   const GmresOptions& options);

}  // namespace blayer
