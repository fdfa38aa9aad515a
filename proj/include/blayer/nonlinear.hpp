#pragma once

#include "blayer/fe.hpp"

namespace blayer {

struct NonlinearOutcome {
    int iterations = 0;
    double residual = 0.0;        ///< final sup-norm of the free residual divided by `scale`
    long double energy = 0.0L;    ///< discrete energy (energy path only)
    Vec trace;                    ///< energies (energy path) or scaled residuals (Newton path)
};

/// Minimizes the discrete energy over the free dofs of `u` by preconditioned
/// nonlinear conjugate gradients (Polak-Ribière+) with a secant line search.
/// Stops when |∇E|_∞ ≤ tol·scale. Throws SolverFailure when the budget runs
/// out and InternalConsistency if an accepted step raises the energy.
NonlinearOutcome minimize_energy(const FeSpace& space, const Material& mat, const FeSpace::Preconditioner& prec, Vec& u,
                                 double tol, double scale, int max_iterations);

/// Damped Newton-Krylov on the Galerkin residual, for maps without a potential.
NonlinearOutcome newton_krylov(const FeSpace& space, const Material& mat, const FeSpace::Preconditioner& prec, Vec& u,
                               double tol, double scale, int max_iterations, int restart);

double sup_norm(const Vec& v);

}  // namespace blayer
