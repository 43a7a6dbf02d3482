#pragma once

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <variant>
#include <vector>

#include "riffle/dtype.hpp"

namespace riffle {

/// Reads element `i` of a packed value buffer as double.
[[nodiscard]] double scalar_get(std::span<const std::byte> buf, ValueDtype dt, std::size_t i);

/// Stores `v` into element `i` of a packed value buffer, converting to `dt`.
void scalar_set(std::span<std::byte> buf, ValueDtype dt, std::size_t i, double v);

/// A row-major dense row block. `values` holds n_rows * n_var elements of
/// `dtype`, packed little-endian (the native layout on every supported
/// platform).
struct DenseBlock {
    std::size_t n_rows = 0;
    std::size_t n_var = 0;
    ValueDtype dtype = ValueDtype::f32;
    std::vector<std::byte> values;

    [[nodiscard]] std::size_t row_bytes() const noexcept { return n_var * value_size(dtype); }

    [[nodiscard]] std::span<const std::byte> row(std::size_t r) const {
        return {values.data() + r * row_bytes(), row_bytes()};
    }
    [[nodiscard]] std::span<std::byte> row(std::size_t r) {
        return {values.data() + r * row_bytes(), row_bytes()};
    }

    [[nodiscard]] double get(std::size_t r, std::size_t c) const {
        return scalar_get(values, dtype, r * n_var + c);
    }
    void set(std::size_t r, std::size_t c, double v) {
        scalar_set(values, dtype, r * n_var + c, v);
    }

    [[nodiscard]] static DenseBlock zeros(std::size_t n_rows, std::size_t n_var, ValueDtype dtype);

    /// Appends rows [first, last) of `src` to this block.
    void append_rows(const DenseBlock& src, std::size_t first, std::size_t last);

    /// Throws InvalidArgument if the buffer length does not match the shape.
    void validate() const;

    bool operator==(const DenseBlock&) const = default;
};

/// A CSR row block with a local indptr (indptr[0] == 0). Column indices are
/// widened to u64 in memory regardless of the on-disk index dtype.
struct CsrBlock {
    std::size_t n_rows = 0;
    std::size_t n_var = 0;
    ValueDtype dtype = ValueDtype::f32;
    std::vector<std::uint64_t> indptr;   // n_rows + 1 entries
    std::vector<std::uint64_t> indices;  // nnz entries, strictly increasing per row
    std::vector<std::byte> data;         // nnz values of `dtype`

    [[nodiscard]] std::uint64_t nnz() const noexcept { return indptr.empty() ? 0 : indptr.back(); }
    [[nodiscard]] std::uint64_t row_nnz(std::size_t r) const { return indptr[r + 1] - indptr[r]; }

    [[nodiscard]] static CsrBlock empty(std::size_t n_var, ValueDtype dtype);

    /// Appends rows [first, last) of `src`, rebasing indptr.
    void append_rows(const CsrBlock& src, std::size_t first, std::size_t last);

    /// Throws InvalidArgument on any CSR invariant violation: indptr shape,
    /// monotonicity, index ordering, or out-of-range column.
    void validate() const;

    bool operator==(const CsrBlock&) const = default;
};

using RowBlock = std::variant<DenseBlock, CsrBlock>;

[[nodiscard]] inline std::size_t block_rows(const RowBlock& b) {
    return std::visit([](const auto& blk) { return blk.n_rows; }, b);
}
[[nodiscard]] inline std::size_t block_vars(const RowBlock& b) {
    return std::visit([](const auto& blk) { return blk.n_var; }, b);
}
[[nodiscard]] inline Layout block_layout(const RowBlock& b) {
    return std::holds_alternative<DenseBlock>(b) ? Layout::dense : Layout::csr;
}

/// Scatters a CSR block to dense; untouched cells are exact zero.
[[nodiscard]] DenseBlock to_dense(const CsrBlock& csr);

/// Compresses a dense block to CSR, dropping exact zeros.
[[nodiscard]] CsrBlock to_csr(const DenseBlock& dense);

}  // namespace riffle
