#pragma once

#include "blayer/grid.hpp"
#include "blayer/monotone_map.hpp"
#include "blayer/reference_solver.hpp"
#include "blayer/sparse.hpp"
#include "blayer/tensor_field.hpp"

#include <memory>
#include <optional>
#include <vector>

namespace blayer {

/// Pointwise constitutive law σ(y, G) for N-component fields, with
/// G and σ stored as N·d arrays (index i·d+α).
class Material {
public:
    virtual ~Material() = default;
    virtual int dim() const = 0;
    virtual int components() const = 0;
    /// σ(y, G), and ∂σ/∂G ((N·d)² row-major) when `tangent` is non-null.
    virtual void eval(const double* y, const double* grad, double* flux, double* tangent) const = 0;
    virtual bool has_energy() const { return false; }
    virtual double energy(const double* y, const double* grad) const;
    /// Volume source g with −∇·σ = g. Absent by default.
    virtual bool has_volume_source() const { return false; }
    virtual void volume_source(const double* y, double* out) const;
    /// Symmetric d×d reference tensor for each component, used for preconditioning.
    virtual std::vector<Vec> reference_tensors() const = 0;
};

/// σ = A(y) G + f(y) with optional volume source g(y).
class LinearMaterial final : public Material {
public:
    explicit LinearMaterial(LinearTensorField A, std::optional<PeriodicField> flux_source = std::nullopt,
                            std::optional<PeriodicField> volume_source = std::nullopt);
    int dim() const override { return A_.dim(); }
    int components() const override { return A_.components(); }
    void eval(const double* y, const double* grad, double* flux, double* tangent) const override;
    bool has_energy() const override { return symmetric_ && !f_ && !g_; }
    double energy(const double* y, const double* grad) const override;
    bool has_volume_source() const override { return g_.has_value(); }
    void volume_source(const double* y, double* out) const override;
    std::vector<Vec> reference_tensors() const override;

private:
    LinearTensorField A_;
    std::optional<PeriodicField> f_, g_;
    bool symmetric_;
    bool constant_;
    Vec cached_;
};

/// σ = a(y, G) for a scalar monotone map.
class MapMaterial final : public Material {
public:
    explicit MapMaterial(MapPtr op);
    int dim() const override { return op_->dim(); }
    int components() const override { return 1; }
    void eval(const double* y, const double* grad, double* flux, double* tangent) const override;
    bool has_energy() const override { return op_->has_potential(); }
    double energy(const double* y, const double* grad) const override;
    std::vector<Vec> reference_tensors() const override;

private:
    MapPtr op_;
};

/// Q1 function space on a structured grid with the dof layout dof = node·N + i.
/// On a strip the free nodes are the slices above the Dirichlet bottom (and
/// below a Dirichlet top); on a torus every node is free.
class FeSpace {
public:
    FeSpace(const StructuredGrid& grid, int components, TopCondition top);

    const StructuredGrid& grid() const noexcept { return *grid_; }
    const Q1Kernel& kernel() const noexcept { return kernel_; }
    int components() const noexcept { return n_; }
    TopCondition top() const noexcept { return top_; }
    std::size_t dofs() const noexcept { return grid_->node_count() * n_; }
    std::size_t free_begin() const noexcept { return free_begin_ * n_; }
    std::size_t free_dofs() const noexcept { return (free_end_ - free_begin_) * n_; }

    /// Empty matrix with the free-free sparsity pattern.
    CsrMatrix make_matrix() const;

    /// Full residual r_k = Σ ∫ σ(∇u)·∇φ_k − ∫ g φ_k (all dofs), optional tangent on the
    /// free block, optional discrete energy Σ ∫ F(y, ∇u).
    void assemble(const Material& mat, const Vec& u, Vec* residual, CsrMatrix* tangent, long double* energy) const;

    /// Domain average of σ(y, ∇u), N·d entries, by the same quadrature as assemble().
    Vec average_flux(const Material& mat, const Vec& u) const;

    Vec restrict_free(const Vec& full) const;
    void add_free(const Vec& free, Vec& full, double scale = 1.0) const;

    /// Per-component reference preconditioner on the free block.
    class Preconditioner {
    public:
        Preconditioner(const FeSpace& space, const std::vector<Vec>& tensors);
        void apply(const Vec& r, Vec& z) const;
        /// Harmonic extension of component i from the given bottom and top slices.
        std::vector<double> extend(int component, std::span<const double> bottom, std::span<const double> top) const;

    private:
        const FeSpace* space_;
        std::vector<std::unique_ptr<ReferenceSolver>> solvers_;
        mutable Vec in_, out_;
    };

private:
    const StructuredGrid* grid_;
    Q1Kernel kernel_;
    int n_;
    TopCondition top_;
    std::size_t free_begin_, free_end_;  ///< node range
};

}  // namespace blayer
