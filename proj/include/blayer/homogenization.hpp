#pragma once

#include "blayer/boundary_data.hpp"
#include "blayer/monotone_map.hpp"
#include "blayer/strip_solver.hpp"
#include "blayer/tensor_field.hpp"

#include <array>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

namespace blayer {

/// Cell-problem settings. h_cell = 0 picks the default for the dimension.
struct CellOptions {
    double h_cell = 0.0;
    int threads = 1;
    double linear_tolerance = 1e-11;
    double nonlinear_tolerance = 1e-9;
    int max_iterations = 400;
};

/// 1/64 in two dimensions, 1/24 in three.
double default_cell_spacing(int dim);

/// Effective constant tensor A⁰ and the periodic correctors that produce it.
struct HomogenizedTensor {
    int dim = 0;
    int components = 0;
    double h_cell = 0.0;
    int cells = 0;                     ///< torus cells per axis
    Vec A0;                            ///< (N·d)² row-major, same layout as LinearTensorField
    std::vector<Vec> correctors;       ///< χ^{jβ} at index j·d+β, N values per torus node
    double max_corrector_mean = 0.0;   ///< largest |nodal mean| after the gauge
    double lambda = 0.0;               ///< ellipticity constant inherited from A

    double at(int i, int a, int j, int b) const { return A0[(i * dim + a) * (components * dim) + j * dim + b]; }
    LinearTensorField as_field() const;
    /// Smallest eigenvalue of sym(A⁰) as a (N·d)×(N·d) matrix.
    double min_eigenvalue() const;
};

/// Solves the N·d corrector problems −∇·(A(∇χ^{jβ} + e_{jβ})) = 0 on the unit torus
/// with the zero-mean gauge and averages the resulting fluxes.
HomogenizedTensor homogenize_linear(const LinearTensorField& A, const CellOptions& options = {});

struct EffectiveMapSample {
    Vec p;
    Vec flux;              ///< a⁰(p): cell average of a(y, p + ∇χ_p)
    double energy = 0.0;   ///< cell average of F(y, p + ∇χ_p), NaN without a potential
    Vec corrector;         ///< χ_p on the torus nodes (empty when a does not depend on y)
    int iterations = 0;
    double residual = 0.0;
};

/// Effective flux at one gradient. y-independent maps return a(p) directly.
EffectiveMapSample homogenize_nonlinear(const MapPtr& a, const Vec& p, const CellOptions& options = {});

/// Plane-restricted effective map q ↦ Bᵀ a⁰(B q) for a 1-homogeneous y-dependent map.
/// Values on the unit circle are cell solves at angles 2πk/n, computed on demand
/// and cached by k; other directions use 4-point periodic Lagrange interpolation
/// in the angle and homogeneity in |q|.
class HomogenizedMap final : public MonotoneMap {
public:
    HomogenizedMap(MapPtr base, Vec b0, Vec b1, int angular_samples = 64, CellOptions options = {});

    int dim() const override { return 2; }
    std::string name() const override { return "homogenized(" + base_->name() + ")"; }
    using MonotoneMap::flux;
    void flux(std::span<const double> y, std::span<const double> p, std::span<double> out) const override;
    bool is_homogeneous() const override { return true; }
    bool depends_on_y() const override { return false; }
    double declared_lambda() const override { return base_->declared_lambda(); }
    MapPtr rescaled(std::int64_t) const override { return shared_from_this(); }

    /// Number of angular samples solved so far.
    std::size_t cached_samples() const;

private:
    std::array<double, 2> sample(int k) const;

    MapPtr base_;
    Vec b0_, b1_;
    int n_;
    CellOptions options_;
    mutable std::shared_mutex mutex_;
    mutable std::map<int, std::array<double, 2>> cache_;
};

/// Constant-coefficient effective operator in the form the strip solver takes.
/// Linear tensors go through homogenize_linear; y-independent maps are returned
/// as they are; other maps must be two-dimensional and become a HomogenizedMap.
OperatorSpec effective_operator(const OperatorSpec& op, const CellOptions& options = {});

struct EpsilonRow {
    double eps = 0.0;
    double h = 0.0;
    double sup_error = 0.0;   ///< max over strip nodes of |u^ε − u⁰|
    double order = 0.0;       ///< log2 of the error ratio to the previous row (0 on the first)
    double ratio = 0.0;       ///< error / previous error (0 on the first)
};

struct EpsilonStudy {
    std::vector<EpsilonRow> rows;
    double fitted_order = 0.0;   ///< least-squares slope of log error against log ε
    double max_ratio = 0.0;
    bool complete = true;        ///< false when a solve failed; rows then hold the finished part
    std::string failure;
};

struct EpsilonOptions {
    double h_over_eps = 1.0 / 8.0;  ///< mesh width relative to ε
    double height = 2.0;            ///< strip height in units of the period bound
    double tau = 0.0;
};

/// Compares the strip solve with coefficients oscillating at scale ε = 1/m against the
/// solve with the effective operator on the same mesh, for each m in `scales`.
/// The effective operator is computed on a cell mesh of width h/ε so both solves
/// resolve one coefficient period with the same number of cells.
EpsilonStudy epsilon_refinement_study(const OperatorSpec& op, DataPtr data, const RationalDirection& xi,
                                      const std::vector<std::int64_t>& scales, const EpsilonOptions& options = {});

std::string epsilon_study_csv(const EpsilonStudy& study);
/// A⁰ as JSON: {"A0": [[...]], "components", "dim", "h_cell", "max_corrector_mean"}.
std::string homogenized_json(const HomogenizedTensor& h);

}  // namespace blayer
