#include "blayer/reference_solver.hpp"

#include "blayer/errors.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>

namespace blayer {

namespace {

// FFTW's planner is not thread safe; execution with new-array calls is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

}  // namespace

struct ReferenceSolver::Plans {
    fftw_complex* buffer = nullptr;
    fftw_complex* slice = nullptr;
    fftw_plan forward = nullptr, backward = nullptr;
    fftw_plan slice_forward = nullptr;

    ~Plans() {
        std::lock_guard lock(planner_mutex());
        if (forward) fftw_destroy_plan(forward);
        if (backward) fftw_destroy_plan(backward);
        if (slice_forward) fftw_destroy_plan(slice_forward);
        if (buffer) fftw_free(buffer);
        if (slice) fftw_free(slice);
    }
};

ReferenceSolver::ReferenceSolver(const StructuredGrid& grid, std::span<const double> C, TopCondition top)
    : grid_(&grid), top_(top), torus_(!grid.is_strip()) {
    const int d = grid.dim();
    if (static_cast<int>(C.size()) != d * d) throw InvalidInput("reference solver: tensor must be d×d");
    const Q1Kernel ker(grid);
    const int nc = ker.nc;

    double Ke[8][8];
    for (int c = 0; c < nc; ++c) {
        for (int cp = 0; cp < nc; ++cp) {
            double s = 0.0;
            for (int q = 0; q < ker.nq; ++q) {
                for (int a = 0; a < d; ++a) {
                    for (int b = 0; b < d; ++b) s += ker.weight[q] * ker.grad[q][c][a] * C[a * d + b] * ker.grad[q][cp][b];
                }
            }
            Ke[c][cp] = s;
        }
    }

    const int transformed = torus_ ? d : d - 1;
    lateral_ = 1;
    for (int a = 0; a < transformed; ++a) lateral_ *= static_cast<std::size_t>(grid.nodes(a));
    if (torus_) {
        rows_ = 1;
    } else {
        const int K = grid.cells(d - 1);
        rows_ = static_cast<std::size_t>(top == TopCondition::Neumann ? K : K - 1);
        if (rows_ == 0) throw InvalidMesh("reference solver: no free slices");
    }

    lower_.assign(lateral_, 0.0);
    upper_.assign(lateral_, 0.0);
    diag_.assign(lateral_, 0.0);
    diag_top_.assign(lateral_, 0.0);
    const int normal_bit = d - 1;
    for (std::size_t m = 0; m < lateral_; ++m) {
        double theta[3] = {0.0, 0.0, 0.0};
        std::size_t rem = m;
        for (int a = 0; a < transformed; ++a) {
            const int n = grid.nodes(a);
            theta[a] = 2.0 * std::numbers::pi * static_cast<double>(rem % n) / n;
            rem /= n;
        }
        cplx below_diag = 0.0, above_diag = 0.0, low = 0.0, up = 0.0, all = 0.0;
        for (int c = 0; c < nc; ++c) {
            for (int cp = 0; cp < nc; ++cp) {
                double phase = 0.0;
                for (int a = 0; a < transformed; ++a) phase += theta[a] * (((cp >> a) & 1) - ((c >> a) & 1));
                const cplx v = Ke[c][cp] * std::polar(1.0, phase);
                if (torus_) {
                    all += v;
                    continue;
                }
                const int bc = (c >> normal_bit) & 1, bcp = (cp >> normal_bit) & 1;
                if (bc == 1 && bcp == 1) below_diag += v;
                if (bc == 1 && bcp == 0) low += v;
                if (bc == 0 && bcp == 0) above_diag += v;
                if (bc == 0 && bcp == 1) up += v;
            }
        }
        if (torus_) {
            diag_[m] = all;
        } else {
            lower_[m] = low;
            upper_[m] = up;
            diag_[m] = below_diag + above_diag;
            diag_top_[m] = below_diag;
        }
    }

    // Thomas factorization per mode.
    cprime_.assign(rows_ * lateral_, 0.0);
    inv_den_.assign(rows_ * lateral_, 0.0);
    for (std::size_t m = 0; m < lateral_; ++m) {
        if (torus_) {
            inv_den_[m] = (m == 0 || std::abs(diag_[m]) == 0.0) ? cplx(0.0) : 1.0 / diag_[m];
            continue;
        }
        cplx prev_cp = 0.0;
        for (std::size_t r = 0; r < rows_; ++r) {
            const bool last = r + 1 == rows_;
            const cplx b = (last && top_ == TopCondition::Neumann) ? diag_top_[m] : diag_[m];
            const cplx a = r == 0 ? cplx(0.0) : lower_[m];
            const cplx c = last ? cplx(0.0) : upper_[m];
            const cplx den = b - a * prev_cp;
            if (std::abs(den) == 0.0) throw InternalConsistency("reference solver: singular tridiagonal pivot");
            inv_den_[r * lateral_ + m] = 1.0 / den;
            prev_cp = c / den;
            cprime_[r * lateral_ + m] = prev_cp;
        }
    }

    plans_ = std::make_unique<Plans>();
    int dims[3];
    for (int a = 0; a < transformed; ++a) dims[a] = grid.nodes(transformed - 1 - a);
    std::lock_guard lock(planner_mutex());
    plans_->buffer = fftw_alloc_complex(rows_ * lateral_);
    plans_->slice = fftw_alloc_complex(lateral_);
    const int howmany = static_cast<int>(rows_);
    const int dist = static_cast<int>(lateral_);
    plans_->forward = fftw_plan_many_dft(transformed, dims, howmany, plans_->buffer, nullptr, 1, dist, plans_->buffer,
                                         nullptr, 1, dist, FFTW_FORWARD, FFTW_ESTIMATE);
    plans_->backward = fftw_plan_many_dft(transformed, dims, howmany, plans_->buffer, nullptr, 1, dist, plans_->buffer,
                                          nullptr, 1, dist, FFTW_BACKWARD, FFTW_ESTIMATE);
    plans_->slice_forward = fftw_plan_many_dft(transformed, dims, 1, plans_->slice, nullptr, 1, dist, plans_->slice,
                                               nullptr, 1, dist, FFTW_FORWARD, FFTW_ESTIMATE);
    if (!plans_->forward || !plans_->backward || !plans_->slice_forward) throw Error("FFTW planning failed");
}

ReferenceSolver::~ReferenceSolver() = default;

void ReferenceSolver::transform(bool forward) const {
    fftw_execute_dft(forward ? plans_->forward : plans_->backward, plans_->buffer, plans_->buffer);
}

void ReferenceSolver::solve_modes() const {
    auto* buf = reinterpret_cast<cplx*>(plans_->buffer);
    if (torus_) {
        for (std::size_t m = 0; m < lateral_; ++m) buf[m] *= inv_den_[m];
        return;
    }
    for (std::size_t m = 0; m < lateral_; ++m) {
        cplx prev = 0.0;
        for (std::size_t r = 0; r < rows_; ++r) {
            const cplx a = r == 0 ? cplx(0.0) : lower_[m];
            cplx& v = buf[r * lateral_ + m];
            v = (v - a * prev) * inv_den_[r * lateral_ + m];
            prev = v;
        }
        for (std::size_t r = rows_ - 1; r-- > 0;) {
            buf[r * lateral_ + m] -= cprime_[r * lateral_ + m] * buf[(r + 1) * lateral_ + m];
        }
    }
}

void ReferenceSolver::solve(std::span<const double> rhs, std::span<double> x) const {
    const std::size_t n = size();
    auto* buf = reinterpret_cast<cplx*>(plans_->buffer);
    for (std::size_t i = 0; i < n; ++i) buf[i] = rhs[i];
    transform(true);
    solve_modes();
    transform(false);
    const double scale = 1.0 / static_cast<double>(lateral_);
    for (std::size_t i = 0; i < n; ++i) x[i] = buf[i].real() * scale;
}

std::vector<double> ReferenceSolver::extend(std::span<const double> bottom, std::span<const double> top) const {
    if (torus_) throw InvalidInput("reference solver: extension needs a strip");
    if (bottom.size() != lateral_) throw InvalidInput("reference solver: bottom slice has the wrong size");
    const bool dirichlet_top = top_ == TopCondition::Dirichlet;
    if (dirichlet_top && top.size() != lateral_) throw InvalidInput("reference solver: top slice required");

    auto* buf = reinterpret_cast<cplx*>(plans_->buffer);
    auto* sl = reinterpret_cast<cplx*>(plans_->slice);
    std::fill(buf, buf + size(), cplx(0.0));
    for (std::size_t i = 0; i < lateral_; ++i) sl[i] = bottom[i];
    fftw_execute_dft(plans_->slice_forward, plans_->slice, plans_->slice);
    for (std::size_t m = 0; m < lateral_; ++m) buf[m] -= lower_[m] * sl[m];
    if (dirichlet_top) {
        for (std::size_t i = 0; i < lateral_; ++i) sl[i] = top[i];
        fftw_execute_dft(plans_->slice_forward, plans_->slice, plans_->slice);
        for (std::size_t m = 0; m < lateral_; ++m) buf[(rows_ - 1) * lateral_ + m] -= upper_[m] * sl[m];
    }
    solve_modes();
    transform(false);

    const std::size_t slices = static_cast<std::size_t>(grid_->slice_count());
    std::vector<double> out(slices * lateral_, 0.0);
    std::copy(bottom.begin(), bottom.end(), out.begin());
    const double scale = 1.0 / static_cast<double>(lateral_);
    for (std::size_t i = 0; i < size(); ++i) out[lateral_ + i] = buf[i].real() * scale;
    if (dirichlet_top) std::copy(top.begin(), top.end(), out.begin() + static_cast<std::ptrdiff_t>((slices - 1) * lateral_));
    return out;
}

}  // namespace blayer
