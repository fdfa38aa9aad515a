#include "blayer/sparse.hpp"

#include "blayer/errors.hpp"

#include <algorithm>

namespace blayer {

CsrMatrix::CsrMatrix(const std::vector<std::vector<std::uint32_t>>& columns) {
    row_ptr_.reserve(columns.size() + 1);
    row_ptr_.push_back(0);
    for (auto row : columns) {
        std::sort(row.begin(), row.end());
        row.erase(std::unique(row.begin(), row.end()), row.end());
        col_.insert(col_.end(), row.begin(), row.end());
        row_ptr_.push_back(col_.size());
    }
    val_.assign(col_.size(), 0.0);
}

void CsrMatrix::set_zero() { std::fill(val_.begin(), val_.end(), 0.0); }

std::size_t CsrMatrix::find(std::size_t r, std::size_t c) const {
    const auto first = col_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[r]);
    const auto last = col_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[r + 1]);
    const auto it = std::lower_bound(first, last, static_cast<std::uint32_t>(c));
    if (it == last || *it != c) throw InternalConsistency("sparse entry outside the assembled pattern");
    return static_cast<std::size_t>(it - col_.begin());
}

void CsrMatrix::add(std::size_t r, std::size_t c, double v) { val_[find(r, c)] += v; }

double CsrMatrix::at(std::size_t r, std::size_t c) const {
    const auto first = col_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[r]);
    const auto last = col_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[r + 1]);
    const auto it = std::lower_bound(first, last, static_cast<std::uint32_t>(c));
    if (it == last || *it != c) return 0.0;
    return val_[static_cast<std::size_t>(it - col_.begin())];
}

void CsrMatrix::multiply(std::span<const double> x, std::span<double> y) const {
    const std::size_t n = rows();
    for (std::size_t r = 0; r < n; ++r) {
        double s = 0.0;
        for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) s += val_[k] * x[col_[k]];
        y[r] = s;
    }
}

}  // namespace blayer
