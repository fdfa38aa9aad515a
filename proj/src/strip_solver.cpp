#include "blayer/strip_solver.hpp"

#include "blayer/errors.hpp"
#include "blayer/io.hpp"
#include "blayer/krylov.hpp"
#include "blayer/nonlinear.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace blayer {

StripProblem StripProblem::along(const RationalDirection& xi, double s, double R, MeshSpec mesh, OperatorSpec op,
                                 DataPtr data) {
    StripProblem p;
    p.frame = StripFrame::from_direction(xi, s);
    p.xi = xi;
    p.shift = s;
    p.height = R;
    p.mesh = mesh;
    p.op = std::move(op);
    p.data = std::move(data);
    return p;
}

StripProblem StripProblem::planar(double period, double R, MeshSpec mesh, OperatorSpec op, DataPtr data) {
    StripProblem p;
    p.frame = StripFrame::planar(period);
    p.height = R;
    p.mesh = mesh;
    p.op = std::move(op);
    p.data = std::move(data);
    return p;
}

int StripProblem::components() const {
    if (const auto* A = std::get_if<LinearTensorField>(&op)) return A->components();
    return 1;
}

std::string StripProblem::describe_operator() const {
    if (const auto* A = std::get_if<LinearTensorField>(&op)) {
        return "linear(N=" + std::to_string(A->components()) + ",d=" + std::to_string(A->dim()) + ")";
    }
    return std::get<MapPtr>(op)->name();
}

// ---------------------------------------------------------------------------

namespace {

int operator_dim(const OperatorSpec& op) {
    if (const auto* A = std::get_if<LinearTensorField>(&op)) return A->dim();
    const auto& m = std::get<MapPtr>(op);
    if (!m) throw InvalidInput("strip problem: null operator");
    return m->dim();
}

TopCondition top_condition(const StripProblem& p) {
    return p.top.kind == TopBoundary::Kind::DirichletConstant ? TopCondition::Dirichlet : TopCondition::Neumann;
}

void check_problem(const StripProblem& p) {
    if (!p.data) throw InvalidInput("strip problem: missing boundary data");
    if (!(p.height > 0.0)) throw InvalidInput("strip problem: height must be positive");
    if (operator_dim(p.op) != p.frame.dim) throw InvalidInput("strip problem: operator dimension does not match the frame");
    if (p.data->components() != p.components()) throw InvalidInput("strip problem: data has the wrong number of components");
    if (p.top.kind == TopBoundary::Kind::DirichletConstant && static_cast<int>(p.top.value.size()) != p.components()) {
        throw InvalidInput("strip problem: Dirichlet top value has the wrong number of components");
    }
    if (p.tau < 0.0) throw InvalidInput("strip problem: smoothing width must be nonnegative");
}

MapPtr effective_map(const StripProblem& p) {
    if (const auto* A = std::get_if<LinearTensorField>(&p.op)) {
        if (A->components() != 1) throw InvalidInput("nonlinear solve: systems need the linear solver");
        return std::make_shared<LinearMap>(*A);
    }
    MapPtr m = std::get<MapPtr>(p.op);
    if (p.tau > 0.0 && m->smoothing() != p.tau) m = m->smoothed(p.tau);
    return m;
}

/// Dirichlet values on the boundary slices, zero in the interior.
Vec make_lift(const StripProblem& p, const StructuredGrid& grid) {
    const int N = p.components();
    Vec u(grid.node_count() * N, 0.0);
    double y[3];
    for (std::size_t node = 0; node < grid.slice_size(); ++node) {
        grid.node_position(node, y);
        p.data->evaluate(std::span<const double>(y, grid.dim()), std::span<double>(&u[node * N], N));
    }
    if (p.top.kind == TopBoundary::Kind::DirichletConstant) {
        const std::size_t first = grid.node_count() - grid.slice_size();
        for (std::size_t node = first; node < grid.node_count(); ++node) {
            for (int i = 0; i < N; ++i) u[node * N + i] = p.top.value[i];
        }
    }
    return u;
}

int krylov_cap(const StructuredGrid& grid) {
    return std::max(200, static_cast<int>(20.0 * std::sqrt(static_cast<double>(grid.node_count()))));
}

/// Overwrites the interior of `u` with the reference-operator extension of its boundary slices.
void harmonic_guess(const FeSpace& space, const FeSpace::Preconditioner& prec, Vec& u) {
    const auto& grid = space.grid();
    const int N = space.components();
    const std::size_t L = grid.slice_size();
    const bool dir_top = space.top() == TopCondition::Dirichlet;
    Vec bottom(L), top(dir_top ? L : 0);
    for (int i = 0; i < N; ++i) {
        for (std::size_t k = 0; k < L; ++k) bottom[k] = u[k * N + i];
        if (dir_top) {
            const std::size_t first = grid.node_count() - L;
            for (std::size_t k = 0; k < L; ++k) top[k] = u[(first + k) * N + i];
        }
        const auto ext = prec.extend(i, bottom, top);
        for (std::size_t node = 0; node < grid.node_count(); ++node) u[node * N + i] = ext[node];
    }
}

}  // namespace

StructuredGrid build_strip_grid(const StripProblem& problem) {
    check_problem(problem);
    return StructuredGrid::strip(problem.frame, problem.mesh, problem.height);
}

std::unique_ptr<Material> make_material(const StripProblem& problem) {
    if (const auto* A = std::get_if<LinearTensorField>(&problem.op)) {
        return std::make_unique<LinearMaterial>(*A, problem.flux_source, problem.volume_source);
    }
    if (problem.flux_source || problem.volume_source) throw InvalidInput("sources are supported for linear operators only");
    return std::make_unique<MapMaterial>(effective_map(problem));
}

StripSolution solve_linear(const StripProblem& problem) {
    if (!problem.is_linear()) throw InvalidInput("solve_linear: operator is not linear");
    auto grid = std::make_shared<const StructuredGrid>(build_strip_grid(problem));
    const int N = problem.components();
    const FeSpace space(*grid, N, top_condition(problem));
    const auto mat = make_material(problem);

    Vec u = make_lift(problem, *grid);
    Vec r;
    CsrMatrix K = space.make_matrix();
    space.assemble(*mat, u, &r, &K, nullptr);
    Vec b = space.restrict_free(r);
    for (auto& v : b) v = -v;

    const FeSpace::Preconditioner prec(space, mat->reference_tensors());
    GmresOptions opt;
    opt.tolerance = problem.solver.linear_tolerance;
    opt.max_iterations = krylov_cap(*grid);
    opt.restart = problem.solver.restart;
    Vec x(b.size(), 0.0);
    const auto res = gmres([&](const Vec& in, Vec& out) { out.resize(in.size()); K.multiply(in, out); },
                           [&](const Vec& in, Vec& out) { prec.apply(in, out); }, b, x, opt);
    if (!res.converged) throw SolverFailure("linear strip solve: Krylov iteration stagnated", res.trace);
    space.add_free(x, u);

    StripSolution sol;
    sol.grid = grid;
    sol.problem = problem;
    sol.values = std::move(u);
    sol.residual_norm = res.relative_residual;
    sol.iterations = res.iterations;
    return sol;
}

StripSolution solve_nonlinear(const StripProblem& problem) {
    auto grid = std::make_shared<const StructuredGrid>(build_strip_grid(problem));
    if (problem.components() != 1) throw InvalidInput("solve_nonlinear: scalar problems only");
    const FeSpace space(*grid, 1, top_condition(problem));
    const auto mat = make_material(problem);
    const FeSpace::Preconditioner prec(space, mat->reference_tensors());

    StripSolution sol;
    sol.grid = grid;
    sol.problem = problem;
    Vec u = make_lift(problem, *grid);
    Vec r;
    space.assemble(*mat, u, &r, nullptr, nullptr);
    const double scale = sup_norm(space.restrict_free(r));
    if (scale == 0.0) {
        sol.values = std::move(u);
        return sol;
    }
    harmonic_guess(space, prec, u);
    const double tol = problem.solver.nonlinear_tolerance;
    const int max_it = problem.solver.max_nonlinear_iterations;
    const NonlinearOutcome out = mat->has_energy()
                                     ? minimize_energy(space, *mat, prec, u, tol, scale, max_it)
                                     : newton_krylov(space, *mat, prec, u, tol, scale, max_it, problem.solver.restart);
    sol.values = std::move(u);
    sol.residual_norm = out.residual;
    sol.iterations = out.iterations;
    sol.energy = static_cast<double>(out.energy);
    sol.energy_trace = out.trace;
    return sol;
}

StripSolution solve(const StripProblem& problem) {
    return problem.is_linear() ? solve_linear(problem) : solve_nonlinear(problem);
}

// ---------------------------------------------------------------------------

Vec StripSolution::slice_mean(int k) const {
    const int N = components();
    const std::size_t L = grid->slice_size();
    std::vector<long double> acc(N, 0.0L);
    for (std::size_t j = 0; j < L; ++j) {
        for (int i = 0; i < N; ++i) acc[i] += values[(k * L + j) * N + i];
    }
    Vec out(N);
    for (int i = 0; i < N; ++i) out[i] = static_cast<double>(acc[i] / static_cast<long double>(L));
    return out;
}

Vec StripSolution::slice_oscillation(int k) const {
    const int N = components();
    const std::size_t L = grid->slice_size();
    Vec lo(N, INFINITY), hi(N, -INFINITY);
    for (std::size_t j = 0; j < L; ++j) {
        for (int i = 0; i < N; ++i) {
            const double v = values[(k * L + j) * N + i];
            lo[i] = std::min(lo[i], v);
            hi[i] = std::max(hi[i], v);
        }
    }
    for (int i = 0; i < N; ++i) hi[i] -= lo[i];
    return hi;
}

ResidualNorms discrete_residual(const StripProblem& problem, const StructuredGrid& grid, const Vec& values) {
    const int N = problem.components();
    const FeSpace space(grid, N, top_condition(problem));
    const auto mat = make_material(problem);
    Vec r;
    space.assemble(*mat, values, &r, nullptr, nullptr);
    const std::size_t L = grid.slice_size();
    const std::size_t first = L * N, last = (grid.node_count() - L) * N;
    const double vol = grid.cell_volume();
    ResidualNorms out;
    long double sq = 0.0L;
    for (std::size_t k = first; k < last; ++k) {
        out.interior_sup = std::max(out.interior_sup, std::abs(r[k]) / vol);
        sq += static_cast<long double>(r[k]) * r[k] / vol;
    }
    out.l2 = std::sqrt(static_cast<double>(sq));
    return out;
}

ResidualNorms discrete_residual(const StripSolution& solution) {
    return discrete_residual(solution.problem, *solution.grid, solution.values);
}

void write_solution_csv(const StripSolution& sol, std::ostream& out) {
    const auto& g = *sol.grid;
    const int d = g.dim();
    const int N = sol.components();
    out << "# dim: " << d << "\n";
    out << "# components: " << N << "\n";
    out << "# cells:";
    for (int a = 0; a < d; ++a) out << ' ' << g.cells(a);
    out << "\n# height: " << format_double(g.height()) << "\n";
    out << "# normal:";
    for (double v : g.frame().normal) out << ' ' << format_double(v);
    out << "\n# origin:";
    for (double v : g.origin()) out << ' ' << format_double(v);
    for (std::size_t j = 0; j < g.frame().lateral.size(); ++j) {
        out << "\n# lateral" << j << ":";
        for (double v : g.frame().lateral[j]) out << ' ' << format_double(v);
    }
    const std::string op = sol.problem.describe_operator();
    out << "\n# operator: " << op << "\n";
    out << "# operator_hash: " << hex64(fnv1a(op)) << "\n";
    out << "# top_bc: " << (sol.problem.top.kind == TopBoundary::Kind::NeumannZero ? "neumann_zero" : "dirichlet_constant") << "\n";
    out << "# residual_norm: " << format_double(sol.residual_norm) << "\n";
    out << "# iterations: " << sol.iterations << "\n";
    std::vector<std::string> header{"node"};
    for (int a = 0; a < d; ++a) header.push_back("i" + std::to_string(a));
    for (int a = 0; a < d; ++a) header.push_back("y" + std::to_string(a));
    header.push_back("z");
    for (int i = 0; i < N; ++i) header.push_back("u" + std::to_string(i));
    for (std::size_t k = 0; k < header.size(); ++k) out << (k ? "," : "") << header[k];
    out << '\n';
    double y[3];
    for (std::size_t node = 0; node < g.node_count(); ++node) {
        const auto c = g.node_coords(node);
        g.node_position(node, y);
        out << node;
        for (int a = 0; a < d; ++a) out << ',' << c[a];
        for (int a = 0; a < d; ++a) out << ',' << format_double(y[a]);
        out << ',' << format_double(g.slice_height(c[d - 1]));
        for (int i = 0; i < N; ++i) out << ',' << format_double(sol.values[node * N + i]);
        out << '\n';
    }
}

}  // namespace blayer
