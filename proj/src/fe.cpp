#include "blayer/fe.hpp"

#include "blayer/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace blayer {

double Material::energy(const double*, const double*) const { throw InvalidInput("material has no energy"); }

void Material::volume_source(const double*, double*) const {}

// ---------------------------------------------------------------------------

LinearMaterial::LinearMaterial(LinearTensorField A, std::optional<PeriodicField> flux_source,
                               std::optional<PeriodicField> volume_source)
    : A_(std::move(A)), f_(std::move(flux_source)), g_(std::move(volume_source)) {
    symmetric_ = A_.is_symmetric();
    constant_ = A_.is_constant();
    if (constant_) cached_ = A_.average();
    if (f_ && (f_->dim() != A_.dim() || f_->components() != A_.size())) {
        throw InvalidInput("flux source must have N·d components");
    }
    if (g_ && (g_->dim() != A_.dim() || g_->components() != A_.components())) {
        throw InvalidInput("volume source must have N components");
    }
}

void LinearMaterial::eval(const double* y, const double* grad, double* flux, double* tangent) const {
    const int s = A_.size();
    const int d = A_.dim();
    double local[81];
    const double* a = cached_.data();
    if (!constant_) {
        A_.evaluate(std::span<const double>(y, d), std::span<double>(local, s * s));
        a = local;
    }
    for (int r = 0; r < s; ++r) {
        double v = 0.0;
        for (int c = 0; c < s; ++c) v += a[r * s + c] * grad[c];
        flux[r] = v;
    }
    if (f_) {
        double fv[9];
        f_->evaluate(std::span<const double>(y, d), std::span<double>(fv, s));
        for (int r = 0; r < s; ++r) flux[r] += fv[r];
    }
    if (tangent) std::copy(a, a + s * s, tangent);
}

double LinearMaterial::energy(const double* y, const double* grad) const {
    const int s = A_.size();
    double flux[9];
    eval(y, grad, flux, nullptr);
    double e = 0.0;
    for (int r = 0; r < s; ++r) e += 0.5 * flux[r] * grad[r];
    return e;
}

void LinearMaterial::volume_source(const double* y, double* out) const {
    if (g_) g_->evaluate(std::span<const double>(y, A_.dim()), std::span<double>(out, A_.components()));
}

std::vector<Vec> LinearMaterial::reference_tensors() const {
    const int d = A_.dim();
    const int s = A_.size();
    const Vec avg = A_.average();
    std::vector<Vec> out;
    for (int i = 0; i < A_.components(); ++i) {
        Vec C(d * d);
        for (int a = 0; a < d; ++a) {
            for (int b = 0; b < d; ++b) {
                C[a * d + b] = 0.5 * (avg[(i * d + a) * s + i * d + b] + avg[(i * d + b) * s + i * d + a]);
            }
        }
        out.push_back(std::move(C));
    }
    return out;
}

// ---------------------------------------------------------------------------

MapMaterial::MapMaterial(MapPtr op) : op_(std::move(op)) {
    if (!op_) throw InvalidInput("map material: null operator");
}

void MapMaterial::eval(const double* y, const double* grad, double* flux, double* tangent) const {
    const int d = op_->dim();
    op_->flux(std::span<const double>(y, d), std::span<const double>(grad, d), std::span<double>(flux, d));
    if (tangent) op_->jacobian(std::span<const double>(y, d), std::span<const double>(grad, d), std::span<double>(tangent, d * d));
}

double MapMaterial::energy(const double* y, const double* grad) const {
    const int d = op_->dim();
    return op_->potential(std::span<const double>(y, d), std::span<const double>(grad, d));
}

std::vector<Vec> MapMaterial::reference_tensors() const {
    // Average of sym(Da) over a fixed sample of points and unit gradients.
    const int d = op_->dim();
    std::mt19937_64 rng(0x5eed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vec C(d * d, 0.0), J(d * d), y(d), p(d);
    const int samples = 64;
    for (int n = 0; n < samples; ++n) {
        for (auto& v : y) v = uni(rng);
        double s = 0.0;
        for (auto& v : p) {
            v = gauss(rng);
            s += v * v;
        }
        for (auto& v : p) v /= std::sqrt(s);
        op_->jacobian(y, p, J);
        for (int a = 0; a < d; ++a) {
            for (int b = 0; b < d; ++b) C[a * d + b] += 0.5 * (J[a * d + b] + J[b * d + a]) / samples;
        }
    }
    return {C};
}

// ---------------------------------------------------------------------------

FeSpace::FeSpace(const StructuredGrid& grid, int components, TopCondition top)
    : grid_(&grid), kernel_(grid), n_(components), top_(top) {
    if (n_ < 1 || n_ > 3) throw InvalidInput("fe space: 1 to 3 components supported");
    if (grid.is_strip()) {
        free_begin_ = grid.slice_size();
        free_end_ = grid.node_count() - (top == TopCondition::Dirichlet ? grid.slice_size() : 0);
    } else {
        free_begin_ = 0;
        free_end_ = grid.node_count();
    }
    if (free_end_ <= free_begin_) throw InvalidMesh("fe space: no free nodes");
}

CsrMatrix FeSpace::make_matrix() const {
    const int d = grid_->dim();
    const std::size_t nfree = free_end_ - free_begin_;
    std::vector<std::vector<std::uint32_t>> cols(nfree * n_);
    const bool strip = grid_->is_strip();
    int offsets = 1;
    for (int a = 0; a < d; ++a) offsets *= 3;
    std::vector<std::size_t> nbrs;
    for (std::size_t node = free_begin_; node < free_end_; ++node) {
        const auto c = grid_->node_coords(node);
        nbrs.clear();
        for (int o = 0; o < offsets; ++o) {
            int idx[3] = {0, 0, 0};
            int rem = o;
            bool ok = true;
            for (int a = 0; a < d; ++a) {
                int v = c[a] + rem % 3 - 1;
                rem /= 3;
                const int n = grid_->nodes(a);
                const bool bounded = strip && a == d - 1;
                if (bounded) {
                    if (v < 0 || v >= n) ok = false;
                } else {
                    v = (v % n + n) % n;
                }
                idx[a] = v;
            }
            if (!ok) continue;
            const std::size_t nb = grid_->node_index(idx[0], idx[1], idx[2]);
            if (nb < free_begin_ || nb >= free_end_) continue;
            nbrs.push_back(nb);
        }
        for (int i = 0; i < n_; ++i) {
            auto& row = cols[(node - free_begin_) * n_ + i];
            for (std::size_t nb : nbrs) {
                for (int j = 0; j < n_; ++j) row.push_back(static_cast<std::uint32_t>((nb - free_begin_) * n_ + j));
            }
        }
    }
    return CsrMatrix(cols);
}

void FeSpace::assemble(const Material& mat, const Vec& u, Vec* residual, CsrMatrix* tangent, long double* energy) const {
    const int d = grid_->dim();
    const int N = n_;
    const int s = N * d;
    const int nc = kernel_.nc;
    const int nq = kernel_.nq;
    if (u.size() != dofs()) throw InvalidInput("assemble: vector size does not match the space");
    if (residual) residual->assign(dofs(), 0.0);
    if (tangent) tangent->set_zero();
    long double e_total = 0.0L;
    const bool want_source = residual && mat.has_volume_source();
    const std::size_t fb = free_begin_ * N, fe = free_end_ * N;

    std::size_t corners[8];
    double y0[3], y[3];
    double uloc[24], grad[9], flux[9], T[81], src[3];
    double rloc[24];
    double Kloc[24 * 24];
    double TG[9 * 3];
    const std::size_t ncell = grid_->cell_count();
    for (std::size_t cell = 0; cell < ncell; ++cell) {
        grid_->cell_corners(cell, corners);
        grid_->cell_origin(cell, y0);
        for (int c = 0; c < nc; ++c) {
            for (int i = 0; i < N; ++i) uloc[c * N + i] = u[corners[c] * N + i];
        }
        std::fill(rloc, rloc + nc * N, 0.0);
        if (tangent) std::fill(Kloc, Kloc + nc * N * nc * N, 0.0);
        for (int q = 0; q < nq; ++q) {
            const auto& G = kernel_.grad[q];
            const double w = kernel_.weight[q];
            for (int i = 0; i < d; ++i) y[i] = y0[i] + kernel_.offset[q][i];
            for (int k = 0; k < s; ++k) grad[k] = 0.0;
            for (int c = 0; c < nc; ++c) {
                for (int i = 0; i < N; ++i) {
                    const double uc = uloc[c * N + i];
                    for (int a = 0; a < d; ++a) grad[i * d + a] += uc * G[c][a];
                }
            }
            mat.eval(y, grad, flux, tangent ? T : nullptr);
            if (energy) e_total += static_cast<long double>(w) * mat.energy(y, grad);
            if (residual) {
                for (int c = 0; c < nc; ++c) {
                    for (int i = 0; i < N; ++i) {
                        double v = 0.0;
                        for (int a = 0; a < d; ++a) v += flux[i * d + a] * G[c][a];
                        rloc[c * N + i] += w * v;
                    }
                }
                if (want_source) {
                    mat.volume_source(y, src);
                    for (int c = 0; c < nc; ++c) {
                        for (int i = 0; i < N; ++i) rloc[c * N + i] -= w * kernel_.shape[q][c] * src[i];
                    }
                }
            }
            if (tangent) {
                const int ld = nc * N;
                for (int cp = 0; cp < nc; ++cp) {
                    // TG[(i,α), j] = Σ_β T[(i,α),(j,β)] G[cp][β]
                    for (int r = 0; r < s; ++r) {
                        for (int j = 0; j < N; ++j) {
                            double v = 0.0;
                            for (int b = 0; b < d; ++b) v += T[r * s + j * d + b] * G[cp][b];
                            TG[r * N + j] = v;
                        }
                    }
                    for (int c = 0; c < nc; ++c) {
                        for (int i = 0; i < N; ++i) {
                            for (int j = 0; j < N; ++j) {
                                double v = 0.0;
                                for (int a = 0; a < d; ++a) v += G[c][a] * TG[(i * d + a) * N + j];
                                Kloc[(c * N + i) * ld + cp * N + j] += w * v;
                            }
                        }
                    }
                }
            }
        }
        if (residual) {
            for (int c = 0; c < nc; ++c) {
                for (int i = 0; i < N; ++i) (*residual)[corners[c] * N + i] += rloc[c * N + i];
            }
        }
        if (tangent) {
            const int ld = nc * N;
            for (int c = 0; c < nc; ++c) {
                for (int i = 0; i < N; ++i) {
                    const std::size_t row = corners[c] * N + i;
                    if (row < fb || row >= fe) continue;
                    for (int cp = 0; cp < nc; ++cp) {
                        for (int j = 0; j < N; ++j) {
                            const std::size_t col = corners[cp] * N + j;
                            if (col < fb || col >= fe) continue;
                            tangent->add(row - fb, col - fb, Kloc[(c * N + i) * ld + cp * N + j]);
                        }
                    }
                }
            }
        }
    }
    if (energy) *energy = e_total;
}

Vec FeSpace::average_flux(const Material& mat, const Vec& u) const {
    const int d = grid_->dim();
    const int N = n_;
    const int s = N * d;
    if (u.size() != dofs()) throw InvalidInput("average_flux: vector size does not match the space");
    std::vector<long double> acc(s, 0.0L);
    long double vol = 0.0L;
    std::size_t corners[8];
    double y0[3], y[3], grad[9], flux[9];
    for (std::size_t cell = 0; cell < grid_->cell_count(); ++cell) {
        grid_->cell_corners(cell, corners);
        grid_->cell_origin(cell, y0);
        for (int q = 0; q < kernel_.nq; ++q) {
            const auto& G = kernel_.grad[q];
            const double w = kernel_.weight[q];
            for (int i = 0; i < d; ++i) y[i] = y0[i] + kernel_.offset[q][i];
            std::fill(grad, grad + s, 0.0);
            for (int c = 0; c < kernel_.nc; ++c) {
                for (int i = 0; i < N; ++i) {
                    const double uc = u[corners[c] * N + i];
                    for (int a = 0; a < d; ++a) grad[i * d + a] += uc * G[c][a];
                }
            }
            mat.eval(y, grad, flux, nullptr);
            for (int k = 0; k < s; ++k) acc[k] += static_cast<long double>(w) * flux[k];
            vol += w;
        }
    }
    Vec out(s);
    for (int k = 0; k < s; ++k) out[k] = static_cast<double>(acc[k] / vol);
    return out;
}

Vec FeSpace::restrict_free(const Vec& full) const {
    return Vec(full.begin() + static_cast<std::ptrdiff_t>(free_begin()),
               full.begin() + static_cast<std::ptrdiff_t>(free_begin() + free_dofs()));
}

void FeSpace::add_free(const Vec& free, Vec& full, double scale) const {
    const std::size_t off = free_begin();
    for (std::size_t k = 0; k < free.size(); ++k) full[off + k] += scale * free[k];
}

// ---------------------------------------------------------------------------

FeSpace::Preconditioner::Preconditioner(const FeSpace& space, const std::vector<Vec>& tensors) : space_(&space) {
    if (static_cast<int>(tensors.size()) != space.components()) throw InvalidInput("preconditioner: one tensor per component");
    for (const auto& C : tensors) solvers_.push_back(std::make_unique<ReferenceSolver>(space.grid(), C, space.top()));
    in_.resize(solvers_.front()->size());
    out_.resize(solvers_.front()->size());
}

void FeSpace::Preconditioner::apply(const Vec& r, Vec& z) const {
    const int N = space_->components();
    const std::size_t n = in_.size();
    z.resize(r.size());
    if (N == 1) {
        solvers_[0]->solve(r, z);
        return;
    }
    for (int i = 0; i < N; ++i) {
        for (std::size_t k = 0; k < n; ++k) in_[k] = r[k * N + i];
        solvers_[i]->solve(in_, out_);
        for (std::size_t k = 0; k < n; ++k) z[k * N + i] = out_[k];
    }
}

std::vector<double> FeSpace::Preconditioner::extend(int component, std::span<const double> bottom,
                                                    std::span<const double> top) const {
    return solvers_.at(component)->extend(bottom, top);
}

}  // namespace blayer
