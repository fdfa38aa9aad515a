#pragma once

#include "blayer/field.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace blayer {

/// Periodic coefficient tensor A^{αβ}_{ij}(y) of the linear system
///   −∂_α (A^{αβ}_{ij} ∂_β u^j) = 0,   i, j < N,  α, β < d.
///
/// Evaluated as a dense (N·d)×(N·d) matrix with row index i·d+α and column
/// index j·d+β.
class LinearTensorField {
public:
    LinearTensorField() = default;
    /// entries must hold (N·d)^2 scalar fields in the layout described above.
    LinearTensorField(int dim, int components, std::vector<PeriodicField> entries, double lambda);

    /// a(y)·I for N = 1.
    static LinearTensorField isotropic(const PeriodicField& a, double lambda);
    /// Constant tensor (row-major (N·d)^2 values).
    static LinearTensorField constant(int dim, int components, std::span<const double> values, double lambda);
    /// Block-diagonal system: each component sees the same scalar tensor.
    static LinearTensorField decoupled(const LinearTensorField& scalar, int components);

    int dim() const noexcept { return dim_; }
    int components() const noexcept { return n_; }
    int size() const noexcept { return n_ * dim_; }
    double lambda() const noexcept { return lambda_; }
    const PeriodicField& entry(int row, int col) const { return entries_[row * size() + col]; }

    /// Writes the (N·d)^2 matrix at y.
    void evaluate(std::span<const double> y, std::span<double> out) const;
    std::vector<double> evaluate(std::span<const double> y) const;

    bool is_constant() const noexcept;
    /// Structural symmetry A^{αβ}_{ij} = A^{βα}_{ji}, checked on the coefficient lists.
    bool is_symmetric() const;

    LinearTensorField rescaled(std::int64_t m) const;
    LinearTensorField shifted(std::span<const double> shift) const;

    /// Cell average of the tensor (exact: the constant terms).
    std::vector<double> average() const;

private:
    int dim_ = 0;
    int n_ = 0;
    std::vector<PeriodicField> entries_;
    double lambda_ = 0.0;
};

struct EllipticityReport {
    double lambda_hat = 0.0;   ///< min over samples of the smallest eigenvalue of sym(A)
    double upper_hat = 0.0;    ///< max over samples of the largest eigenvalue of sym(A)
    std::vector<double> worst_y;
    int samples = 0;
};

/// Samples y uniformly in the unit cell and bounds the quadratic form ξᵀAξ.
/// Throws OperatorInvalid if the lower bound is not positive.
EllipticityReport validate_tensor(const LinearTensorField& A, int sample_count, std::uint64_t seed);

}  // namespace blayer
