#pragma once

#include "blayer/lattice.hpp"

#include <array>
#include <span>
#include <vector>

namespace blayer {

enum class Phase { Cos, Sin };

/// One term coef · trig(2π k·y) of a periodic trigonometric polynomial.
struct TrigTerm {
    Vec coef;    ///< N components
    IVec freq;   ///< k ∈ Z^d
    Phase phase = Phase::Cos;
};

/// Z^d-periodic trigonometric polynomial with values in R^N:
///   f(y) = c + Σ_t coef_t · trig_t(2π k_t · y).
/// Derivatives of any order are exact.
class PeriodicField {
public:
    PeriodicField() = default;
    PeriodicField(int dim, Vec constant, std::vector<TrigTerm> terms = {});

    static PeriodicField constant(int dim, Vec value);
    static PeriodicField scalar_constant(int dim, double value) { return constant(dim, {value}); }

    int dim() const noexcept { return dim_; }
    int components() const noexcept { return static_cast<int>(constant_.size()); }
    const Vec& constant_term() const noexcept { return constant_; }
    const std::vector<TrigTerm>& terms() const noexcept { return terms_; }

    /// Value at y (size dim()) written to out (size components()).
    void evaluate(std::span<const double> y, std::span<double> out) const;
    Vec evaluate(std::span<const double> y) const;
    double evaluate_scalar(std::span<const double> y) const;

    /// Mixed partial derivative ∂^order f(y). Total order must be ≤ 5.
    Vec derivative(std::span<const double> y, std::span<const int> order) const;

    /// Upper bound on ‖f‖_{C^m} from the coefficients: |c| + Σ |coef|·max_{j≤m} (2π|k|)^j.
    double cm_norm_bound(int m) const;
    /// Upper bound on sup|∇f|.
    double gradient_bound() const;
    /// Upper bound on sup|f|.
    double sup_bound() const;

    /// f(m·y). Used for the oscillating coefficients A(y/ε) with ε = 1/m.
    PeriodicField rescaled(std::int64_t m) const;
    /// f(y + shift). Phases are folded back into cos/sin pairs.
    PeriodicField shifted(std::span<const double> shift) const;

    bool is_constant() const noexcept { return terms_.empty(); }

private:
    int dim_ = 0;
    Vec constant_;
    std::vector<TrigTerm> terms_;
};

}  // namespace blayer
