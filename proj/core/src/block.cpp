#include "riffle/block.hpp"

#include <bit>
#include <string>

#include "riffle/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "riffle stores data little-endian and assumes a little-endian host");

namespace riffle {

double scalar_get(std::span<const std::byte> buf, ValueDtype dt, std::size_t i) {
    switch (dt) {
        case ValueDtype::f32: {
            float v;
            std::memcpy(&v, buf.data() + i * 4, 4);
            return static_cast<double>(v);
        }
        case ValueDtype::f64: {
            double v;
            std::memcpy(&v, buf.data() + i * 8, 8);
            return v;
        }
        case ValueDtype::i32: {
            std::int32_t v;
            std::memcpy(&v, buf.data() + i * 4, 4);
            return static_cast<double>(v);
        }
        case ValueDtype::u8:
            return static_cast<double>(static_cast<std::uint8_t>(buf[i]));
    }
    return 0.0;
}

void scalar_set(std::span<std::byte> buf, ValueDtype dt, std::size_t i, double v) {
    switch (dt) {
        case ValueDtype::f32: {
            const float f = static_cast<float>(v);
            std::memcpy(buf.data() + i * 4, &f, 4);
            return;
        }
        case ValueDtype::f64:
            std::memcpy(buf.data() + i * 8, &v, 8);
            return;
        case ValueDtype::i32: {
            const std::int32_t n = static_cast<std::int32_t>(v);
            std::memcpy(buf.data() + i * 4, &n, 4);
            return;
        }
        case ValueDtype::u8:
            buf[i] = static_cast<std::byte>(static_cast<std::uint8_t>(v));
            return;
    }
}

DenseBlock DenseBlock::zeros(std::size_t n_rows, std::size_t n_var, ValueDtype dtype) {
    DenseBlock b;
    b.n_rows = n_rows;
    b.n_var = n_var;
    b.dtype = dtype;
    b.values.assign(n_rows * n_var * value_size(dtype), std::byte{0});
    return b;
}

void DenseBlock::append_rows(const DenseBlock& src, std::size_t first, std::size_t last) {
    if (n_rows == 0 && values.empty()) {
        n_var = src.n_var;
        dtype = src.dtype;
    }
    const std::size_t rb = row_bytes();
    values.insert(values.end(), src.values.begin() + static_cast<std::ptrdiff_t>(first * rb),
                  src.values.begin() + static_cast<std::ptrdiff_t>(last * rb));
    n_rows += last - first;
}

void DenseBlock::validate() const {
    if (values.size() != n_rows * n_var * value_size(dtype))
        throw InvalidArgument("dense block: values length " + std::to_string(values.size()) +
                              " does not match " + std::to_string(n_rows) + "x" +
                              std::to_string(n_var) + " " + std::string(to_string(dtype)));
}

CsrBlock CsrBlock::empty(std::size_t n_var, ValueDtype dtype) {
    CsrBlock b;
    b.n_var = n_var;
    b.dtype = dtype;
    b.indptr = {0};
    return b;
}

void CsrBlock::append_rows(const CsrBlock& src, std::size_t first, std::size_t last) {
    if (indptr.empty()) {
        indptr = {0};
        n_var = src.n_var;
        dtype = src.dtype;
    }
    const std::size_t vs = value_size(dtype);
    for (std::size_t r = first; r < last; ++r)
        indptr.push_back(indptr.back() + src.row_nnz(r));
    const std::uint64_t lo = src.indptr[first];
    const std::uint64_t hi = src.indptr[last];
    indices.insert(indices.end(), src.indices.begin() + static_cast<std::ptrdiff_t>(lo),
                   src.indices.begin() + static_cast<std::ptrdiff_t>(hi));
    data.insert(data.end(), src.data.begin() + static_cast<std::ptrdiff_t>(lo * vs),
                src.data.begin() + static_cast<std::ptrdiff_t>(hi * vs));
    n_rows += last - first;
}

void CsrBlock::validate() const {
    if (indptr.size() != n_rows + 1)
        throw InvalidArgument("csr block: indptr length " + std::to_string(indptr.size()) +
                              " for " + std::to_string(n_rows) + " rows");
    if (indptr.front() != 0)
        throw InvalidArgument("csr block: indptr[0] != 0");
    for (std::size_t r = 0; r < n_rows; ++r) {
        if (indptr[r + 1] < indptr[r])
            throw InvalidArgument("csr block: indptr decreasing at row " + std::to_string(r));
        for (std::uint64_t k = indptr[r]; k < indptr[r + 1]; ++k) {
            if (indices[k] >= n_var)
                throw InvalidArgument("csr block: column index " + std::to_string(indices[k]) +
                                      " >= n_var " + std::to_string(n_var) + " in row " +
                                      std::to_string(r));
            if (k > indptr[r] && indices[k] <= indices[k - 1])
                throw InvalidArgument("csr block: column indices not strictly increasing in row " +
                                      std::to_string(r));
        }
    }
    if (indices.size() != indptr.back())
        throw InvalidArgument("csr block: indices length does not match indptr");
    if (data.size() != indptr.back() * value_size(dtype))
        throw InvalidArgument("csr block: data length does not match indptr");
}

DenseBlock to_dense(const CsrBlock& csr) {
    csr.validate();
    DenseBlock out = DenseBlock::zeros(csr.n_rows, csr.n_var, csr.dtype);
    const std::size_t vs = value_size(csr.dtype);
    for (std::size_t r = 0; r < csr.n_rows; ++r) {
        for (std::uint64_t k = csr.indptr[r]; k < csr.indptr[r + 1]; ++k) {
            std::memcpy(out.values.data() + (r * csr.n_var + csr.indices[k]) * vs,
                        csr.data.data() + k * vs, vs);
        }
    }
    return out;
}

CsrBlock to_csr(const DenseBlock& dense) {
    dense.validate();
    CsrBlock out = CsrBlock::empty(dense.n_var, dense.dtype);
    out.n_rows = dense.n_rows;
    const std::size_t vs = value_size(dense.dtype);
    for (std::size_t r = 0; r < dense.n_rows; ++r) {
        for (std::size_t c = 0; c < dense.n_var; ++c) {
            if (dense.get(r, c) != 0.0) {
                out.indices.push_back(c);
                const auto* src = dense.values.data() + (r * dense.n_var + c) * vs;
                out.data.insert(out.data.end(), src, src + vs);
            }
        }
        out.indptr.push_back(out.indices.size());
    }
    return out;
}

}  // namespace riffle
