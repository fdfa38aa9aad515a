#include "blayer/grid.hpp"

#include "blayer/errors.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace blayer {

StripFrame StripFrame::from_direction(const RationalDirection& xi, double s) {
    StripFrame f;
    f.dim = xi.dim();
    for (const auto& l : xi.periods) f.lateral.push_back(to_real(l));
    f.normal = xi.xi_hat;
    f.origin.resize(f.dim);
    for (int i = 0; i < f.dim; ++i) f.origin[i] = s * xi.norm * static_cast<double>(xi.bezout[i]);
    f.M = xi.period_bound;
    return f;
}

StripFrame StripFrame::planar(double period) {
    if (!(period > 0.0)) throw InvalidInput("planar strip: period must be positive");
    StripFrame f;
    f.dim = 2;
    f.lateral = {{period, 0.0}};
    f.normal = {0.0, 1.0};
    f.origin = {0.0, 0.0};
    f.M = period;
    return f;
}

StructuredGrid StructuredGrid::strip(const StripFrame& frame, const std::vector<int>& lateral_cells, int normal_cells,
                                     double height) {
    const int d = frame.dim;
    if (static_cast<int>(frame.lateral.size()) != d - 1 || static_cast<int>(lateral_cells.size()) != d - 1) {
        throw InvalidInput("strip grid: need d-1 lateral periods and cell counts");
    }
    if (normal_cells < 1 || !(height > 0.0)) throw InvalidMesh("strip grid: height and normal cell count must be positive");
    StructuredGrid g;
    g.dim_ = d;
    g.strip_ = true;
    g.frame_ = frame;
    g.height_ = height;
    for (int a = 0; a < d - 1; ++a) {
        if (lateral_cells[a] < 1) throw InvalidMesh("strip grid: lateral cell count must be positive");
        g.cells_[a] = lateral_cells[a];
        g.nodes_[a] = lateral_cells[a];
        for (int i = 0; i < d; ++i) g.edge_[a][i] = frame.lateral[a][i] / lateral_cells[a];
    }
    g.cells_[d - 1] = normal_cells;
    g.nodes_[d - 1] = normal_cells + 1;
    for (int i = 0; i < d; ++i) g.edge_[d - 1][i] = frame.normal[i] * height / normal_cells;
    g.origin_ = frame.origin;
    g.finalize();
    return g;
}

StructuredGrid StructuredGrid::strip(const StripFrame& frame, const MeshSpec& mesh, double height) {
    if (!(mesh.h > 0.0)) throw InvalidMesh("mesh spacing must be positive");
    auto count = [&](double length, const char* what) {
        const double r = length / mesh.h;
        const double n = std::round(r);
        if (mesh.strict) {
            if (n < 1.0 || std::abs(r - n) > 1e-9 * std::max(1.0, r)) {
                throw InvalidMesh(std::string("mesh spacing h does not divide the ") + what);
            }
            return static_cast<int>(n);
        }
        return std::max(1, static_cast<int>(std::ceil(r - 1e-9)));
    };
    std::vector<int> lat;
    for (const auto& l : frame.lateral) lat.push_back(count(norm(l), "lateral period"));
    const int nn = count(height, "strip height");
    return strip(frame, lat, nn, height);
}

StructuredGrid StructuredGrid::torus(int dim, int cells) {
    if (dim < 2 || dim > 3 || cells < 2) throw InvalidMesh("torus grid: dimension 2 or 3 and at least 2 cells per axis");
    StructuredGrid g;
    g.dim_ = dim;
    g.strip_ = false;
    for (int a = 0; a < dim; ++a) {
        g.cells_[a] = cells;
        g.nodes_[a] = cells;
        for (int i = 0; i < 3; ++i) g.edge_[a][i] = 0.0;
        g.edge_[a][a] = 1.0 / cells;
    }
    g.origin_.assign(dim, 0.0);
    g.frame_.dim = dim;
    g.finalize();
    return g;
}

void StructuredGrid::finalize() {
    node_count_ = 1;
    cell_count_ = 1;
    for (int a = 0; a < dim_; ++a) {
        node_count_ *= static_cast<std::size_t>(nodes_[a]);
        cell_count_ *= static_cast<std::size_t>(cells_[a]);
    }
    slice_ = strip_ ? node_count_ / static_cast<std::size_t>(nodes_[dim_ - 1]) : node_count_;
    Eigen::MatrixXd J(dim_, dim_);
    for (int a = 0; a < dim_; ++a) {
        for (int i = 0; i < dim_; ++i) J(i, a) = edge_[a][i];
    }
    volume_ = std::abs(J.determinant());
    if (!(volume_ > 0.0)) throw InvalidMesh("degenerate cell geometry");
}

double StructuredGrid::max_spacing() const {
    double m = 0.0;
    for (int a = 0; a < dim_; ++a) {
        double s = 0.0;
        for (int i = 0; i < dim_; ++i) s += edge_[a][i] * edge_[a][i];
        m = std::max(m, std::sqrt(s));
    }
    return m;
}

std::size_t StructuredGrid::node_index(int i0, int i1, int i2) const {
    return static_cast<std::size_t>(i0) +
           static_cast<std::size_t>(nodes_[0]) * (static_cast<std::size_t>(i1) + static_cast<std::size_t>(nodes_[1]) * i2);
}

std::array<int, 3> StructuredGrid::node_coords(std::size_t node) const {
    std::array<int, 3> c{0, 0, 0};
    for (int a = 0; a < dim_; ++a) {
        c[a] = static_cast<int>(node % nodes_[a]);
        node /= nodes_[a];
    }
    return c;
}

void StructuredGrid::node_position(std::size_t node, double* y) const {
    const auto c = node_coords(node);
    for (int i = 0; i < dim_; ++i) {
        double v = origin_[i];
        for (int a = 0; a < dim_; ++a) v += c[a] * edge_[a][i];
        y[i] = v;
    }
}

void StructuredGrid::cell_corners(std::size_t cell, std::size_t* out) const {
    int c[3] = {0, 0, 0};
    std::size_t rem = cell;
    for (int a = 0; a < dim_; ++a) {
        c[a] = static_cast<int>(rem % cells_[a]);
        rem /= cells_[a];
    }
    const int nc = 1 << dim_;
    for (int k = 0; k < nc; ++k) {
        int idx[3] = {0, 0, 0};
        for (int a = 0; a < dim_; ++a) {
            int v = c[a] + ((k >> a) & 1);
            if (v >= nodes_[a]) v -= nodes_[a];  // periodic wrap; bounded axes never reach here
            idx[a] = v;
        }
        out[k] = node_index(idx[0], idx[1], idx[2]);
    }
}

void StructuredGrid::cell_origin(std::size_t cell, double* y) const {
    int c[3] = {0, 0, 0};
    std::size_t rem = cell;
    for (int a = 0; a < dim_; ++a) {
        c[a] = static_cast<int>(rem % cells_[a]);
        rem /= cells_[a];
    }
    for (int i = 0; i < dim_; ++i) {
        double v = origin_[i];
        for (int a = 0; a < dim_; ++a) v += c[a] * edge_[a][i];
        y[i] = v;
    }
}

Q1Kernel::Q1Kernel(const StructuredGrid& grid) {
    dim = grid.dim();
    nq = 1 << dim;
    nc = 1 << dim;
    const double g[2] = {0.5 - 0.5 / std::sqrt(3.0), 0.5 + 0.5 / std::sqrt(3.0)};

    Eigen::MatrixXd J(dim, dim);
    for (int a = 0; a < dim; ++a) {
        for (int i = 0; i < dim; ++i) J(i, a) = grid.edge(a)[i];
    }
    const Eigen::MatrixXd JinvT = J.inverse().transpose();

    for (int q = 0; q < nq; ++q) {
        double xi[3];
        for (int a = 0; a < dim; ++a) xi[a] = g[(q >> a) & 1];
        weight[q] = grid.cell_volume() / nq;
        for (int i = 0; i < dim; ++i) {
            double v = 0.0;
            for (int a = 0; a < dim; ++a) v += xi[a] * grid.edge(a)[i];
            offset[q][i] = v;
        }
        for (int c = 0; c < nc; ++c) {
            double val = 1.0;
            Eigen::VectorXd ref(dim);
            for (int a = 0; a < dim; ++a) {
                const int bit = (c >> a) & 1;
                val *= bit ? xi[a] : 1.0 - xi[a];
                double dv = bit ? 1.0 : -1.0;
                for (int b = 0; b < dim; ++b) {
                    if (b == a) continue;
                    dv *= ((c >> b) & 1) ? xi[b] : 1.0 - xi[b];
                }
                ref(a) = dv;
            }
            shape[q][c] = val;
            const Eigen::VectorXd phys = JinvT * ref;
            for (int i = 0; i < dim; ++i) grad[q][c][i] = phys(i);
        }
    }
}

}  // namespace blayer
