#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace graphite {

#ifdef GRAPHITE_REAL32
using Real = float;
#else
using Real = double;
#endif

// Dense row-major matrix. Plain value type shared by the autodiff engine,
// model parameters and the training loop.
struct Matrix {
    std::int64_t rows = 0;
    std::int64_t cols = 0;
    std::vector<Real> data;

    Matrix() = default;
    Matrix(std::int64_t r, std::int64_t c, Real fill = 0.0)
        : rows(r), cols(c), data(static_cast<std::size_t>(r * c), fill) {}

    Real& at(std::int64_t r, std::int64_t c) { return data[static_cast<std::size_t>(r * cols + c)]; }
    Real at(std::int64_t r, std::int64_t c) const { return data[static_cast<std::size_t>(r * cols + c)]; }

    std::span<Real> row(std::int64_t r) {
        return {data.data() + r * cols, static_cast<std::size_t>(cols)};
    }
    std::span<const Real> row(std::int64_t r) const {
        return {data.data() + r * cols, static_cast<std::size_t>(cols)};
    }

    std::int64_t size() const { return rows * cols; }

    bool operator==(const Matrix&) const = default;
};

// Sparse row storage: entries sorted by column within each row.
struct SparseEntry {
    std::int32_t col;
    Real value;

    bool operator==(const SparseEntry&) const = default;
};

struct SparseRowMatrix {
    std::int64_t num_cols = 0;
    std::vector<std::vector<SparseEntry>> rows;

    std::int64_t num_rows() const { return static_cast<std::int64_t>(rows.size()); }
    std::int64_t nnz() const {
        std::int64_t n = 0;
        for (const auto& r : rows) n += static_cast<std::int64_t>(r.size());
        return n;
    }

    std::vector<Real> dense_row(std::int64_t r) const {
        std::vector<Real> out(static_cast<std::size_t>(num_cols), 0.0);
        for (const auto& e : rows[static_cast<std::size_t>(r)]) out[static_cast<std::size_t>(e.col)] = e.value;
        return out;
    }

    bool operator==(const SparseRowMatrix&) const = default;
};

}  // namespace graphite
