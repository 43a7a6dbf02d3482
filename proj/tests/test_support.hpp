#pragma once

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "riffle/block.hpp"
#include "riffle/rng.hpp"

namespace riffle::testing {

/// Unique scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag = "riffle") {
        auto pattern =
            (std::filesystem::temp_directory_path() / (tag + ".XXXXXX")).string();
        if (!::mkdtemp(pattern.data())) throw std::runtime_error("mkdtemp failed");
        path_ = pattern;
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }

    [[nodiscard]] const std::filesystem::path& path() const noexcept { return path_; }
    [[nodiscard]] std::filesystem::path operator/(const std::string& leaf) const {
        return path_ / leaf;
    }

private:
    std::filesystem::path path_;
};

/// Dense block whose cell (r, c) is fn(r, c), encoded in `dtype`.
template <typename Fn>
DenseBlock make_dense(std::size_t n_rows, std::size_t n_var, ValueDtype dtype, Fn&& fn) {
    DenseBlock b = DenseBlock::zeros(n_rows, n_var, dtype);
    for (std::size_t r = 0; r < n_rows; ++r)
        for (std::size_t c = 0; c < n_var; ++c) b.set(r, c, fn(r, c));
    return b;
}

/// Random dense block with roughly `density` nonzero cells.
inline DenseBlock random_dense(std::size_t n_rows, std::size_t n_var, ValueDtype dtype,
                               double density, Rng& rng) {
    return make_dense(n_rows, n_var, dtype, [&](std::size_t, std::size_t) {
        if (rng.next_double() >= density) return 0.0;
        return 1.0 + static_cast<double>(rng.bounded(100));
    });
}

inline std::uint64_t fnv1a64(const void* data, std::size_t n,
                             std::uint64_t h = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::uint64_t hash_block(const RowBlock& block, std::uint64_t h = 0xcbf29ce484222325ull) {
    if (const auto* d = std::get_if<DenseBlock>(&block)) {
        h = fnv1a64(d->values.data(), d->values.size(), h);
    } else {
        const auto& c = std::get<CsrBlock>(block);
        h = fnv1a64(c.indptr.data(), c.indptr.size() * 8, h);
        h = fnv1a64(c.indices.data(), c.indices.size() * 8, h);
        h = fnv1a64(c.data.data(), c.data.size(), h);
    }
    return h;
}

}  // namespace riffle::testing
