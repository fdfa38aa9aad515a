#pragma once

#include "blayer/boundary_layer.hpp"
#include "blayer/homogenization.hpp"

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace blayer {

/// Boundary data t ↦ φ*(ξ, t) of the planar problem, with its error budget.
struct SecondCellData {
    double period = 1.0;                ///< 1/|ξ|
    DataPtr data;                       ///< evaluated at (t, r) through t only
    double profile_error = 0.0;         ///< largest error bar of the sampled limits
    double interpolation_error = 0.0;   ///< estimated interpolation error
    Vec mean;                           ///< period average of the samples

    double error() const { return profile_error + interpolation_error; }
};

/// Interpolates a sampled profile. Cubic splines for linear problems; nonlinear
/// profiles may be less smooth and use piecewise-linear interpolation.
/// The interpolation error is estimated by rebuilding the interpolant from every
/// other sample and comparing at the skipped ones, divided by the asymptotic
/// refinement factor (16 for cubic, 4 for linear).
SecondCellData second_cell_data(const PhiStarProfile& profile, Interpolation kind);
/// Data from a known profile g(t) on [0, period).
SecondCellData second_cell_data(std::function<double(double)> profile, double period, const std::string& label);

struct DirectionalLimit {
    Vec L;
    Vec eta;
    double error_bar = 0.0;
    BoundaryLayerResult strip;   ///< the planar boundary-layer solve
};

/// Operator of the planar problem in coordinates (t, r) = (x·η, x·ξ̂).
/// Linear tensors are projected blockwise (BᵀA_{ij}B with B = [η ξ̂]); maps use
/// restrict_to_plane, which may return a kinked map smoothed to width tau.
OperatorSpec planar_operator(const OperatorSpec& effective, const Vec& eta, const Vec& xi_hat, double tau);

struct SecondCellOptions {
    MeshSpec mesh{1.0 / 32.0, false};
    LimitOptions limit = with_mesh_check();
    double tau = 0.0;

    static LimitOptions with_mesh_check() {
        LimitOptions o;
        o.discretization_check = true;
        return o;
    }
};

/// L(ξ, η): limit far from the boundary of the planar problem with lateral period 1/|ξ|.
DirectionalLimit directional_limit(const RationalDirection& xi, const Vec& eta, const SecondCellData& data,
                                   const OperatorSpec& effective, const SecondCellOptions& options);

struct EtaSpread {
    std::vector<DirectionalLimit> limits;
    double spread = 0.0;         ///< max pairwise |L(η_a) − L(η_b)|
    double max_error = 0.0;
};

EtaSpread eta_independence_check(const RationalDirection& xi, const SecondCellData& data, const OperatorSpec& effective,
                                 const std::vector<Vec>& etas, const SecondCellOptions& options);

/// Period average of the profile: the linear-case value of every L(ξ, η).
Vec average_formula(const SecondCellData& data, int samples = 256);

// ---------------------------------------------------------------------------
// Predictions near rational directions

struct PredictionSettings {
    std::int64_t Q = 4;                 ///< denominator budget of the rational approximation
    MeshSpec profile_mesh{1.0 / 16.0, false};
    LimitOptions profile_limit;
    int profile_samples = 16;
    SecondCellOptions second_cell;
    CellOptions cell;
    double c_hat = 1.0;                 ///< constant of the approximation term, times sup|∇φ|
    double alpha = 0.5;                 ///< exponent of the approximation term
    /// When positive, the constant is fitted per ξ instead: the rational directions
    /// ζ_k = kξ + p (p a lattice period of ξ^⊥, k = 1..steps) approach ξ̂, and the
    /// constant is max_k max_s |φ*(ζ_k, s) − L(ξ, η_k)| / (|ξ| ε_k)^α.
    int calibration_steps = 0;
    int threads = 1;
};

struct Prediction {
    Vec n;
    Vec value;
    double error_bar = 0.0;
    IVec xi;                   ///< reduced approximant
    std::int64_t k = 1;        ///< denominator of n ≈ xi_raw / k
    double epsilon = 0.0;      ///< angle between n and ξ̂
    Vec eta;
    double approximation_term = 0.0;   ///< Ĉ(|ξ|ε)^α, included in error_bar
    double c_hat = 0.0;                ///< Ĉ used for this row
    std::string provenance;    ///< "rational" when n = ξ̂, otherwise "approximation"
    bool ok = true;
    std::string message;
};

/// Runs the profile and second-cell pipeline near rational directions. Profiles and
/// the effective operator are computed once per direction and shared across threads.
class PhiStarPredictor {
public:
    PhiStarPredictor(OperatorSpec op, DataPtr data, PredictionSettings settings);

    Prediction predict(const Vec& n) const;
    /// Profile of ξ, computed on first use.
    const PhiStarProfile& profile(const RationalDirection& xi) const;
    const OperatorSpec& effective() const;
    const PredictionSettings& settings() const noexcept { return settings_; }
    /// Ĉ for ξ: fitted when calibration_steps > 0, else c_hat·sup|∇φ|.
    double approximation_constant(const RationalDirection& xi) const;

private:
    struct Entry {
        std::once_flag once;
        std::unique_ptr<PhiStarProfile> profile;
    };
    struct Calibration {
        std::once_flag once;
        double value = 0.0;
    };
    SecondCellData data_for(const PhiStarProfile& prof) const;
    OperatorSpec op_;
    DataPtr data_;
    PredictionSettings settings_;
    bool linear_;
    double gradient_bound_;
    mutable std::once_flag effective_once_;
    mutable std::unique_ptr<OperatorSpec> effective_;
    mutable std::mutex mutex_;
    mutable std::map<IVec, std::shared_ptr<Entry>> profiles_;
    mutable std::map<IVec, std::shared_ptr<Calibration>> calibrations_;
};

Prediction predict_phi_star(const Vec& n, const OperatorSpec& op, DataPtr data, const PredictionSettings& settings);

struct HolderFit {
    double C = 0.0;
    double alpha = 0.0;
    int pairs = 0;
    bool degenerate = true;
};

struct SweepReport {
    std::vector<Prediction> rows;
    HolderFit fit;
    /// Largest |Δφ*| − (e_a + e_b) over pairs: a jump that survives the error bars.
    double max_excess_jump = 0.0;
    double jump_separation = 0.0;   ///< |n_a − n_b| of that pair
    std::string notice;
};

/// Predictions for every direction (rows in input order), then a fit of
/// log|Δφ*| against log|Δn| over pairs whose difference exceeds their error bars.
SweepReport continuity_sweep(const PhiStarPredictor& predictor, const std::vector<Vec>& directions);

std::string sweep_csv(const SweepReport& report);
std::string sweep_json(const SweepReport& report);

// ---------------------------------------------------------------------------
// The kinked example: w = (1/3 + cos y) e^{−z} in 2π-periodic variables

/// Residual expression of w under the reduced kinked map as printed with the
/// example: [(−4/9 − cos(y)/3)·1{cos y < 0} + (cos y − 1)/4·1{cos y > 0}] e^{−z}.
double subsolution_residual_formula(double y, double z);
/// −∇·a(∇w) computed directly from a(p) = (p_y, p_z + f(0, p_z)).
double subsolution_residual_direct(double y, double z);

struct ResidualScan {
    double max_formula = 0.0;
    double max_direct = 0.0;
    int samples = 0;
};
/// Max of both residual expressions over [0, 2π] × [0, z_max] on an n × n grid.
ResidualScan subsolution_scan(int n, double z_max = 4.0);

struct GapCertificate {
    double delta_hat = 0.0;      ///< min over t of (v − w) on the line z = 1 (2π-periodic units)
    double worst_t = 0.0;        ///< t ∈ [0, 1) where the minimum is attained
    double min_ordering = 0.0;   ///< min over nodes of v − w (comparison check)
    double limit = 0.0;          ///< L(e3, e2) of the same solve
    double limit_error = 0.0;
    double h = 0.0, tau = 0.0;
};

/// Solves the e2-approach problem for the kinked example on a planar strip
/// (t, r) with data 1/3 + cos 2πt and compares with w(t, r) = (1/3 + cos 2πt)e^{−2πr}.
/// The line z = 1 is r = 1/(2π); values there come from cubic interpolation in r.
GapCertificate gap_certificate(const SecondCellData& data, double h, double tau, const LimitOptions& limit);

}  // namespace blayer
