#pragma once

#include <cstdint>

#include "riffle/dtype.hpp"

namespace riffle {

/// A chunk-geometry recommendation derived from a target element count per
/// chunk (values for dense stores, stored entries for CSR stores).
struct ChunkingSuggestion {
    std::uint64_t chunk_rows = 1;
    std::uint64_t chunks_per_shard = 128;
};

/// chunk_rows = max(1, round(target_elements / mean_nnz_per_row)).
[[nodiscard]] ChunkingSuggestion suggest_chunking_csr(std::uint64_t target_elements,
                                                      double mean_nnz_per_row);

/// chunk_rows = max(1, round(target_elements / n_var)).
[[nodiscard]] ChunkingSuggestion suggest_chunking_dense(std::uint64_t target_elements,
                                                        std::uint64_t n_var);

}  // namespace riffle
