#include "blayer/homogenization.hpp"

#include "blayer/errors.hpp"
#include "blayer/fe.hpp"
#include "blayer/io.hpp"
#include "blayer/krylov.hpp"
#include "blayer/nonlinear.hpp"
#include "blayer/parallel.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <cmath>
#include <mutex>

namespace blayer {

double default_cell_spacing(int dim) { return dim == 3 ? 1.0 / 24.0 : 1.0 / 64.0; }

namespace {

int torus_cells(int dim, double h_cell) {
    const double h = h_cell > 0.0 ? h_cell : default_cell_spacing(dim);
    const int n = static_cast<int>(std::lround(1.0 / h));
    if (n < 2 || std::abs(n * h - 1.0) > 1e-9) throw InvalidMesh("cell mesh width must divide the unit period");
    return n;
}

/// σ = A(y)(G + P) for a fixed macroscopic gradient P.
class LinearCorrectorMaterial final : public Material {
public:
    LinearCorrectorMaterial(const LinearTensorField& A, Vec P) : A_(A), P_(std::move(P)), ref_(A) {}
    int dim() const override { return A_.dim(); }
    int components() const override { return A_.components(); }
    void eval(const double* y, const double* grad, double* flux, double* tangent) const override {
        const int s = A_.size();
        double T[81];
        A_.evaluate(std::span<const double>(y, A_.dim()), std::span<double>(T, s * s));
        for (int r = 0; r < s; ++r) {
            double v = 0.0;
            for (int c = 0; c < s; ++c) v += T[r * s + c] * (grad[c] + P_[c]);
            flux[r] = v;
        }
        if (tangent) std::copy(T, T + s * s, tangent);
    }
    std::vector<Vec> reference_tensors() const override { return ref_.reference_tensors(); }

private:
    const LinearTensorField& A_;
    Vec P_;
    LinearMaterial ref_;
};

/// σ = a(y, p + G).
class MapCorrectorMaterial final : public Material {
public:
    MapCorrectorMaterial(MapPtr a, Vec p) : a_(std::move(a)), p_(std::move(p)), ref_(a_) {}
    int dim() const override { return a_->dim(); }
    int components() const override { return 1; }
    void eval(const double* y, const double* grad, double* flux, double* tangent) const override {
        const int d = a_->dim();
        double q[3];
        for (int k = 0; k < d; ++k) q[k] = p_[k] + grad[k];
        const std::span<const double> ys(y, d), qs(q, d);
        a_->flux(ys, qs, std::span<double>(flux, d));
        if (tangent) a_->jacobian(ys, qs, std::span<double>(tangent, d * d));
    }
    bool has_energy() const override { return a_->has_potential(); }
    double energy(const double* y, const double* grad) const override {
        const int d = a_->dim();
        double q[3];
        for (int k = 0; k < d; ++k) q[k] = p_[k] + grad[k];
        return a_->potential(std::span<const double>(y, d), std::span<const double>(q, d));
    }
    std::vector<Vec> reference_tensors() const override { return ref_.reference_tensors(); }

private:
    MapPtr a_;
    Vec p_;
    MapMaterial ref_;
};

/// Subtracts the nodal mean of each component; returns the largest remaining |mean|.
double apply_gauge(Vec& u, int N) {
    const std::size_t nodes = u.size() / N;
    double worst = 0.0;
    for (int i = 0; i < N; ++i) {
        long double s = 0.0L;
        for (std::size_t k = 0; k < nodes; ++k) s += u[k * N + i];
        const double mean = static_cast<double>(s / static_cast<long double>(nodes));
        long double s2 = 0.0L;
        for (std::size_t k = 0; k < nodes; ++k) {
            u[k * N + i] -= mean;
            s2 += u[k * N + i];
        }
        worst = std::max(worst, std::abs(static_cast<double>(s2 / static_cast<long double>(nodes))));
    }
    return worst;
}

int krylov_cap(const StructuredGrid& grid) {
    return std::max(200, static_cast<int>(20.0 * std::sqrt(static_cast<double>(grid.node_count()))));
}

}  // namespace

LinearTensorField HomogenizedTensor::as_field() const {
    return LinearTensorField::constant(dim, components, A0, lambda);
}

double HomogenizedTensor::min_eigenvalue() const {
    const int s = components * dim;
    Eigen::MatrixXd M(s, s);
    for (int r = 0; r < s; ++r) {
        for (int c = 0; c < s; ++c) M(r, c) = 0.5 * (A0[r * s + c] + A0[c * s + r]);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

HomogenizedTensor homogenize_linear(const LinearTensorField& A, const CellOptions& options) {
    const int d = A.dim();
    const int N = A.components();
    const int s = N * d;
    HomogenizedTensor out;
    out.dim = d;
    out.components = N;
    out.cells = torus_cells(d, options.h_cell);
    out.h_cell = 1.0 / out.cells;
    out.lambda = A.lambda();
    out.A0.assign(s * s, 0.0);
    out.correctors.resize(s);

    const StructuredGrid grid = StructuredGrid::torus(d, out.cells);
    const FeSpace space(grid, N, TopCondition::Neumann);
    if (A.is_constant()) {
        // Zero right-hand side for every corrector.
        out.A0 = A.average();
        for (auto& c : out.correctors) c.assign(space.dofs(), 0.0);
        return out;
    }
    const Vec zero(space.dofs(), 0.0);
    CsrMatrix K = space.make_matrix();
    space.assemble(LinearCorrectorMaterial(A, Vec(s, 0.0)), zero, nullptr, &K, nullptr);

    GmresOptions opt;
    opt.tolerance = options.linear_tolerance;
    opt.max_iterations = krylov_cap(grid);
    auto unit = [s](std::size_t col) {
        Vec P(s, 0.0);
        P[col] = 1.0;
        return P;
    };
    // Right-hand sides first: a column whose load is at rounding level relative to
    // the largest one (a laminate loaded along its layers) has a zero corrector.
    std::vector<Vec> rhs(s);
    double largest = 0.0;
    for (int col = 0; col < s; ++col) {
        space.assemble(LinearCorrectorMaterial(A, unit(col)), zero, &rhs[col], nullptr, nullptr);
        for (auto& v : rhs[col]) v = -v;
        largest = std::max(largest, std::sqrt(dot(rhs[col], rhs[col])));
    }
    std::vector<double> means(s, 0.0);
    parallel_for(static_cast<std::size_t>(s), options.threads, [&](std::size_t col) {
        const LinearCorrectorMaterial mat(A, unit(col));
        const Vec& r = rhs[col];
        const double bnorm = std::sqrt(dot(r, r));
        Vec x(r.size(), 0.0);
        if (bnorm > 1e-13 * largest) {
            const FeSpace::Preconditioner prec(space, mat.reference_tensors());
            GmresOptions o = opt;
            o.tolerance = std::max(opt.tolerance, 1e-14 * largest / bnorm);
            const auto res = gmres([&](const Vec& in, Vec& y) { y.resize(in.size()); K.multiply(in, y); },
                                   [&](const Vec& in, Vec& y) { prec.apply(in, y); }, r, x, o);
            if (!res.converged) throw SolverFailure("corrector solve: Krylov iteration stagnated", res.trace);
        }
        means[col] = apply_gauge(x, N);
        const Vec flux = space.average_flux(mat, x);
        for (int row = 0; row < s; ++row) out.A0[row * s + col] = flux[row];
        out.correctors[col] = std::move(x);
    });
    for (double m : means) out.max_corrector_mean = std::max(out.max_corrector_mean, m);
    return out;
}

EffectiveMapSample homogenize_nonlinear(const MapPtr& a, const Vec& p, const CellOptions& options) {
    if (!a) throw InvalidInput("homogenize_nonlinear: null operator");
    const int d = a->dim();
    if (static_cast<int>(p.size()) != d) throw InvalidInput("homogenize_nonlinear: gradient has the wrong dimension");
    EffectiveMapSample out;
    out.p = p;
    out.energy = std::nan("");
    if (!a->depends_on_y()) {
        const Vec y(d, 0.0);
        out.flux = a->flux(y, p);
        if (a->has_potential()) out.energy = a->potential(y, p);
        return out;
    }
    const int n = torus_cells(d, options.h_cell);
    const StructuredGrid grid = StructuredGrid::torus(d, n);
    const FeSpace space(grid, 1, TopCondition::Neumann);
    const MapCorrectorMaterial mat(a, p);
    Vec u(space.dofs(), 0.0);
    Vec r;
    space.assemble(mat, u, &r, nullptr, nullptr);
    // Loads of a flux that does not vary along its own direction cancel to rounding
    // level; compare with the size a nodal load of this flux would have.
    double typical = 0.0;
    Vec y(d), f(d);
    for (std::size_t k = 0; k < grid.node_count(); ++k) {
        grid.node_position(k, y.data());
        a->flux(y, p, f);
        typical = std::max(typical, norm(f));
    }
    typical *= std::pow(1.0 / n, d - 2);
    const double load = sup_norm(r);
    const double scale = std::max(load, 1e-5 * typical);
    if (load > 1e-13 * typical) {
        const FeSpace::Preconditioner prec(space, mat.reference_tensors());
        // Scale by the gradient size so homogeneous maps converge uniformly in |p|.
        const NonlinearOutcome res =
            mat.has_energy() ? minimize_energy(space, mat, prec, u, options.nonlinear_tolerance, scale, options.max_iterations)
                             : newton_krylov(space, mat, prec, u, options.nonlinear_tolerance, scale,
                                             options.max_iterations, 50);
        out.iterations = res.iterations;
        out.residual = res.residual;
    }
    apply_gauge(u, 1);
    out.flux = space.average_flux(mat, u);
    if (mat.has_energy()) {
        long double e = 0.0L;
        space.assemble(mat, u, nullptr, nullptr, &e);
        out.energy = static_cast<double>(e);  // unit cell volume
    }
    out.corrector = std::move(u);
    return out;
}

// ---------------------------------------------------------------------------

HomogenizedMap::HomogenizedMap(MapPtr base, Vec b0, Vec b1, int angular_samples, CellOptions options)
    : base_(std::move(base)), b0_(std::move(b0)), b1_(std::move(b1)), n_(angular_samples), options_(options) {
    if (!base_) throw InvalidInput("HomogenizedMap: null operator");
    if (!base_->is_homogeneous()) throw InvalidInput("HomogenizedMap: the base map must be 1-homogeneous");
    const int d = base_->dim();
    if (static_cast<int>(b0_.size()) != d || static_cast<int>(b1_.size()) != d) {
        throw InvalidInput("HomogenizedMap: basis vectors have the wrong dimension");
    }
    if (n_ < 8) throw InvalidInput("HomogenizedMap: at least 8 angular samples");
}

std::size_t HomogenizedMap::cached_samples() const {
    std::shared_lock lock(mutex_);
    return cache_.size();
}

std::array<double, 2> HomogenizedMap::sample(int k) const {
    k = ((k % n_) + n_) % n_;
    {
        std::shared_lock lock(mutex_);
        const auto it = cache_.find(k);
        if (it != cache_.end()) return it->second;
    }
    const double th = 2.0 * M_PI * k / n_;
    const int d = base_->dim();
    Vec p(d);
    for (int i = 0; i < d; ++i) p[i] = std::cos(th) * b0_[i] + std::sin(th) * b1_[i];
    const auto s = homogenize_nonlinear(base_, p, options_);
    std::array<double, 2> v{0.0, 0.0};
    for (int i = 0; i < d; ++i) {
        v[0] += b0_[i] * s.flux[i];
        v[1] += b1_[i] * s.flux[i];
    }
    std::unique_lock lock(mutex_);
    // Two threads may solve the same k; both results are identical.
    return cache_.emplace(k, v).first->second;
}

void HomogenizedMap::flux(std::span<const double>, std::span<const double> p, std::span<double> out) const {
    const double r = std::hypot(p[0], p[1]);
    if (r == 0.0) {
        out[0] = out[1] = 0.0;
        return;
    }
    double th = std::atan2(p[1], p[0]);
    if (th < 0.0) th += 2.0 * M_PI;
    const double x = th * n_ / (2.0 * M_PI);
    const int k = static_cast<int>(std::floor(x));
    const double t = x - k;
    // Cubic Lagrange weights on nodes k-1, k, k+1, k+2.
    const double w[4] = {-t * (t - 1.0) * (t - 2.0) / 6.0, (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
                         -(t + 1.0) * t * (t - 2.0) / 2.0, (t + 1.0) * t * (t - 1.0) / 6.0};
    out[0] = out[1] = 0.0;
    for (int j = 0; j < 4; ++j) {
        const auto v = sample(k - 1 + j);
        out[0] += w[j] * v[0];
        out[1] += w[j] * v[1];
    }
    out[0] *= r;
    out[1] *= r;
}

OperatorSpec effective_operator(const OperatorSpec& op, const CellOptions& options) {
    if (const auto* A = std::get_if<LinearTensorField>(&op)) return homogenize_linear(*A, options).as_field();
    const MapPtr& m = std::get<MapPtr>(op);
    if (!m) throw InvalidInput("effective_operator: null operator");
    if (!m->depends_on_y()) return m;
    if (const auto* lin = dynamic_cast<const LinearMap*>(m.get())) {
        return MapPtr(std::make_shared<LinearMap>(homogenize_linear(lin->tensor(), options).as_field()));
    }
    if (m->dim() != 2) throw InvalidInput("effective_operator: restrict a y-dependent map to a plane first");
    return MapPtr(std::make_shared<HomogenizedMap>(m, Vec{1.0, 0.0}, Vec{0.0, 1.0}, 64, options));
}

// ---------------------------------------------------------------------------

namespace {

OperatorSpec oscillating(const OperatorSpec& op, std::int64_t m) {
    if (const auto* A = std::get_if<LinearTensorField>(&op)) return A->rescaled(m);
    return std::get<MapPtr>(op)->rescaled(m);
}

}  // namespace

EpsilonStudy epsilon_refinement_study(const OperatorSpec& op, DataPtr data, const RationalDirection& xi,
                                      const std::vector<std::int64_t>& scales, const EpsilonOptions& options) {
    if (scales.empty()) throw InvalidInput("epsilon study: empty ladder");
    if (!(options.h_over_eps > 0.0) || !(options.height > 0.0)) throw InvalidInput("epsilon study: invalid options");
    EpsilonStudy study;
    for (std::int64_t m : scales) {
        if (m < 1) throw InvalidInput("epsilon study: scales must be positive integers");
        const double eps = 1.0 / static_cast<double>(m);
        const double h = eps * options.h_over_eps;
        try {
            CellOptions cell;
            cell.h_cell = options.h_over_eps;
            const OperatorSpec eff = effective_operator(op, cell);
            const MeshSpec mesh{h, true};
            const double R = options.height * xi.period_bound;
            StripProblem pe = StripProblem::along(xi, 0.0, R, mesh, oscillating(op, m), data);
            StripProblem p0 = StripProblem::along(xi, 0.0, R, mesh, eff, data);
            pe.tau = p0.tau = options.tau;
            const StripSolution ue = solve(pe);
            const StripSolution u0 = solve(p0);
            EpsilonRow row;
            row.eps = eps;
            row.h = h;
            for (std::size_t k = 0; k < ue.values.size(); ++k) {
                row.sup_error = std::max(row.sup_error, std::abs(ue.values[k] - u0.values[k]));
            }
            if (!study.rows.empty()) {
                const auto& prev = study.rows.back();
                row.ratio = row.sup_error / prev.sup_error;
                row.order = std::log(prev.sup_error / row.sup_error) / std::log(prev.eps / eps);
                study.max_ratio = std::max(study.max_ratio, row.ratio);
            }
            study.rows.push_back(row);
        } catch (const Error& e) {
            study.complete = false;
            study.failure = e.what();
            break;
        }
    }
    if (study.rows.size() >= 2) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const double n = static_cast<double>(study.rows.size());
        for (const auto& r : study.rows) {
            const double x = std::log(r.eps), y = std::log(r.sup_error);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        study.fitted_order = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    }
    return study;
}

std::string epsilon_study_csv(const EpsilonStudy& study) {
    CsvTable t({"eps", "h", "sup_error", "order", "ratio"});
    for (const auto& r : study.rows) t.add_row({r.eps, r.h, r.sup_error, r.order, r.ratio});
    return t.str();
}

std::string homogenized_json(const HomogenizedTensor& h) {
    const int s = h.components * h.dim;
    nlohmann::json rows = nlohmann::json::array();
    for (int r = 0; r < s; ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (int c = 0; c < s; ++c) row.push_back(h.A0[r * s + c]);
        rows.push_back(row);
    }
    nlohmann::json j;
    j["A0"] = rows;
    j["components"] = h.components;
    j["dim"] = h.dim;
    j["h_cell"] = h.h_cell;
    j["max_corrector_mean"] = h.max_corrector_mean;
    j["min_eigenvalue"] = h.min_eigenvalue();
    return j.dump(2) + "\n";
}

}  // namespace blayer
