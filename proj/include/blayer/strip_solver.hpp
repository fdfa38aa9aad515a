#pragma once

#include "blayer/boundary_data.hpp"
#include "blayer/fe.hpp"
#include "blayer/grid.hpp"
#include "blayer/monotone_map.hpp"
#include "blayer/tensor_field.hpp"

#include <iosfwd>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <variant>

namespace blayer {

struct TopBoundary {
    enum class Kind { NeumannZero, DirichletConstant };
    Kind kind = Kind::NeumannZero;
    Vec value;  ///< N components, Dirichlet only

    static TopBoundary neumann() { return {}; }
    static TopBoundary dirichlet(Vec v) { return {Kind::DirichletConstant, std::move(v)}; }
};

using OperatorSpec = std::variant<LinearTensorField, MapPtr>;

struct SolverOptions {
    double linear_tolerance = 1e-10;     ///< relative Krylov residual
    double nonlinear_tolerance = 1e-8;   ///< sup-norm of the energy gradient relative to the data scale
    int max_nonlinear_iterations = 400;
    int restart = 50;
};

/// Cell problem on the truncated strip {s < y·ξ̂ < s + R} (or a planar frame).
struct StripProblem {
    StripFrame frame;
    std::optional<RationalDirection> xi;  ///< set when the frame comes from a lattice direction
    double shift = 0.0;
    double height = 0.0;
    MeshSpec mesh;
    TopBoundary top;
    OperatorSpec op;
    DataPtr data;
    double tau = 0.0;  ///< kink smoothing width for nonlinear maps (0 keeps the map as given)
    std::optional<PeriodicField> flux_source;    ///< f in −∇·(A∇u) = ∇·f + g (linear only)
    std::optional<PeriodicField> volume_source;  ///< g
    SolverOptions solver;

    static StripProblem along(const RationalDirection& xi, double s, double R, MeshSpec mesh, OperatorSpec op, DataPtr data);
    static StripProblem planar(double period, double R, MeshSpec mesh, OperatorSpec op, DataPtr data);

    int components() const;
    bool is_linear() const { return std::holds_alternative<LinearTensorField>(op); }
    std::string describe_operator() const;
};

struct StripSolution {
    std::shared_ptr<const StructuredGrid> grid;
    StripProblem problem;
    Vec values;  ///< node·N + i
    double residual_norm = 0.0;
    int iterations = 0;
    double energy = std::numeric_limits<double>::quiet_NaN();
    Vec energy_trace;

    int components() const { return problem.components(); }
    double at(std::size_t node, int component = 0) const { return values[node * components() + component]; }
    /// Lateral mean of slice k per component.
    Vec slice_mean(int k) const;
    /// max − min over slice k per component.
    Vec slice_oscillation(int k) const;
    int top_slice() const { return grid->slice_count() - 1; }
};

StructuredGrid build_strip_grid(const StripProblem& problem);

StripSolution solve_linear(const StripProblem& problem);
StripSolution solve_nonlinear(const StripProblem& problem);
/// Dispatches on the operator kind.
StripSolution solve(const StripProblem& problem);

struct ResidualNorms {
    double interior_sup = 0.0;  ///< max |r_k| / cell volume over nodes off the boundary slices
    double l2 = 0.0;            ///< (Σ r_k² / cell volume)^{1/2} over the same nodes
};

/// Discrete operator applied to `values` (every node, boundary slices excluded from the norms).
ResidualNorms discrete_residual(const StripProblem& problem, const StructuredGrid& grid, const Vec& values);
ResidualNorms discrete_residual(const StripSolution& solution);

/// Material the solver uses for the problem's operator (including smoothing).
std::unique_ptr<Material> make_material(const StripProblem& problem);

/// Header lines ("# key: value") followed by a CSV node table.
void write_solution_csv(const StripSolution& solution, std::ostream& out);

}  // namespace blayer
