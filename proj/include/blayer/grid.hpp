#pragma once

#include "blayer/lattice.hpp"

#include <array>
#include <cstddef>
#include <vector>

namespace blayer {

/// Physical frame of a periodic strip {s < y·normal < s + R}. The lateral
/// vectors are full periods of the data and operator.
struct StripFrame {
    int dim = 2;
    std::vector<Vec> lateral;  ///< d-1 period vectors
    Vec normal;                ///< unit normal pointing into the domain
    Vec origin;                ///< physical point of lateral index 0 on the bottom plane
    double M = 1.0;            ///< max |lateral|

    /// Strip over the half-space {y·ξ̂ > s}. The origin is s|ξ|·z0 with z0·ξ = 1,
    /// so frames at s and s + 1/|ξ| differ by the lattice vector z0.
    static StripFrame from_direction(const RationalDirection& xi, double s);
    /// Axis-aligned two-dimensional strip with lateral period `period` (coordinates (t, r)).
    static StripFrame planar(double period);
};

/// How the mesh spacing is chosen for a strip.
struct MeshSpec {
    double h = 1.0 / 16.0;
    /// Strict: h must divide every period length and R exactly (InvalidMesh otherwise).
    /// Relaxed: cell counts are rounded up, spacing shrinks per axis.
    bool strict = true;
};

/// Uniform grid of affine cells with periodic lateral axes and, for strips, a
/// bounded last axis. Node index = i0 + N0 (i1 + N1 i2); the last axis is the
/// slowest so every normal slice is a contiguous block.
class StructuredGrid {
public:
    static StructuredGrid strip(const StripFrame& frame, const std::vector<int>& lateral_cells, int normal_cells,
                                double height);
    static StructuredGrid strip(const StripFrame& frame, const MeshSpec& mesh, double height);
    /// Unit torus [0,1)^d with n cells per axis.
    static StructuredGrid torus(int dim, int cells);

    int dim() const noexcept { return dim_; }
    bool is_strip() const noexcept { return strip_; }
    int cells(int axis) const { return cells_[axis]; }
    int nodes(int axis) const { return nodes_[axis]; }
    std::size_t node_count() const noexcept { return node_count_; }
    std::size_t cell_count() const noexcept { return cell_count_; }
    /// Nodes per normal slice (the lateral node count). Equals node_count for a torus.
    std::size_t slice_size() const noexcept { return slice_; }
    /// Number of normal slices (K + 1). 1 for a torus.
    int slice_count() const noexcept { return strip_ ? nodes_[dim_ - 1] : 1; }
    double height() const noexcept { return height_; }
    double normal_spacing() const noexcept { return strip_ ? height_ / cells_[dim_ - 1] : 0.0; }
    const std::array<double, 3>& edge(int axis) const { return edge_[axis]; }
    const Vec& origin() const noexcept { return origin_; }
    const StripFrame& frame() const noexcept { return frame_; }
    /// Largest cell edge length.
    double max_spacing() const;

    std::size_t node_index(int i0, int i1, int i2 = 0) const;
    std::array<int, 3> node_coords(std::size_t node) const;
    void node_position(std::size_t node, double* y) const;
    /// Height above the bottom plane of slice k.
    double slice_height(int k) const { return k * normal_spacing(); }

    /// Node indices of the 2^d corners (bit a of the corner id = +1 along axis a).
    void cell_corners(std::size_t cell, std::size_t* out) const;
    void cell_origin(std::size_t cell, double* y) const;

    /// |det J| of the cell map.
    double cell_volume() const noexcept { return volume_; }

private:
    int dim_ = 0;
    bool strip_ = false;
    std::array<int, 3> cells_{1, 1, 1};
    std::array<int, 3> nodes_{1, 1, 1};
    std::array<std::array<double, 3>, 3> edge_{};
    Vec origin_;
    StripFrame frame_;
    double height_ = 0.0;
    std::size_t node_count_ = 0, cell_count_ = 0, slice_ = 0;
    double volume_ = 0.0;

    void finalize();
};

/// Trilinear (bilinear) element data on the grid's reference cell with tensor
/// 2-point Gauss quadrature. All cells share it because the cell map is affine.
struct Q1Kernel {
    int dim = 0;
    int nq = 0;  ///< quadrature points, 2^d
    int nc = 0;  ///< corners, 2^d
    std::array<double, 8> weight{};                          ///< includes |det J|
    std::array<std::array<double, 8>, 8> shape{};            ///< shape[q][c]
    std::array<std::array<std::array<double, 3>, 8>, 8> grad{};  ///< physical ∇N_c at q
    std::array<std::array<double, 3>, 8> offset{};           ///< physical offset of q from the cell origin

    explicit Q1Kernel(const StructuredGrid& grid);
};

}  // namespace blayer
