#pragma once

#include "blayer/boundary_data.hpp"
#include "blayer/strip_solver.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace blayer {

/// Least-squares fit osc(z) ≈ C e^{−rate·z}.
struct DecayFit {
    double C = 0.0;
    double rate = 0.0;        ///< per unit height (c/M in the tail bound C e^{−cR/M})
    double rate_times_M = 0.0;
    double residual = 0.0;    ///< RMS of the log-scale residuals
    int points = 0;
    bool degenerate = true;
};

/// Fit on (height, oscillation) pairs. Pairs with oscillation ≤ floor are dropped.
DecayFit decay_fit(const Vec& heights, const Vec& oscillations, double M, double floor = 0.0);
/// Fit on the slice oscillations of one solve, over heights in [M/2, R − M] with
/// oscillation above 1e-8 of the bottom oscillation.
DecayFit decay_fit(const StripSolution& solution, double M);

struct LimitOptions {
    double tolerance = 1e-6;     ///< target top-slice oscillation
    Vec ladder;                  ///< explicit heights; empty means 4M·2^j up to 64M
    int min_rungs = 2;           ///< capped at the length of an explicit ladder
    bool keep_solution = false;  ///< keep the largest solve in the result
    /// Re-solve the last rung on a mesh of twice the width and add |c*_h − c*_2h| to the
    /// error bar. This bounds the error of c*_h whenever the scheme converges monotonically
    /// at first order or better.
    bool discretization_check = false;
};

struct BoundaryLayerResult {
    Vec value;                ///< c*, N components
    double decay_rate = 0.0;  ///< per unit height
    double error_bar = 0.0;   ///< top-slice oscillation + |c*(R_last) − c*(R_prev)| + discretization estimate
    double discretization_error = 0.0;
    Vec heights_used;
    Vec top_oscillation;      ///< per rung, max over components
    std::vector<Vec> rung_values;
    DecayFit fit;
    bool converged = false;
    std::string diagnostics;
    std::shared_ptr<const StripSolution> solution;
};

/// Ladder of strip solves on the problem's frame. `base.height` is ignored.
/// Never throws on non-convergence: the result carries converged = false.
BoundaryLayerResult boundary_layer_limit(const StripProblem& base, const LimitOptions& options);

BoundaryLayerResult boundary_layer_limit(const OperatorSpec& op, DataPtr data, const RationalDirection& xi, double s,
                                         const MeshSpec& mesh, const LimitOptions& options, double tau = 0.0);

struct PhiStarProfile {
    RationalDirection xi;
    Vec s;                                    ///< s_j = j / (n |ξ|)
    std::vector<BoundaryLayerResult> samples;
    Vec mean;                                 ///< periodic trapezoid average of the samples
    double max_error = 0.0;                   ///< max sample error bar
    bool converged = true;

    double period() const { return 1.0 / xi.norm; }
    /// Interpolant of s ↦ c*(s) over one period.
    PeriodicInterpolant interpolant(Interpolation kind) const;
};

struct ProfileOptions {
    int sample_count = 16;
    int threads = 1;
    double tau = 0.0;
};

PhiStarProfile phi_star_profile(const OperatorSpec& op, DataPtr data, const RationalDirection& xi, const MeshSpec& mesh,
                                const LimitOptions& limit, const ProfileOptions& options);

}  // namespace blayer
