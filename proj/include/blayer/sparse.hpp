#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace blayer {

/// Compressed sparse row matrix with a fixed pattern. Column indices within a
/// row are sorted so entries can be located by binary search.
class CsrMatrix {
public:
    CsrMatrix() = default;
    /// `columns[r]` lists the (unsorted, possibly repeated) columns of row r.
    explicit CsrMatrix(const std::vector<std::vector<std::uint32_t>>& columns);

    std::size_t rows() const noexcept { return row_ptr_.empty() ? 0 : row_ptr_.size() - 1; }
    std::size_t nonzeros() const noexcept { return col_.size(); }

    void set_zero();
    /// Adds v at (r, c). The entry must be in the pattern.
    void add(std::size_t r, std::size_t c, double v);
    double at(std::size_t r, std::size_t c) const;

    void multiply(std::span<const double> x, std::span<double> y) const;

    const std::vector<std::size_t>& row_ptr() const noexcept { return row_ptr_; }
    const std::vector<std::uint32_t>& col() const noexcept { return col_; }
    std::vector<double>& values() noexcept { return val_; }
    const std::vector<double>& values() const noexcept { return val_; }

private:
    std::size_t find(std::size_t r, std::size_t c) const;
    std::vector<std::size_t> row_ptr_;
    std::vector<std::uint32_t> col_;
    std::vector<double> val_;
};

}  // namespace blayer
