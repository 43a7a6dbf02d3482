#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "riffle/manifest.hpp"

namespace riffle {

/// A half-open row interval [start, end).
struct RowRange {
    std::uint64_t start = 0;
    std::uint64_t end = 0;

    [[nodiscard]] std::uint64_t rows() const noexcept { return end - start; }

    bool operator==(const RowRange&) const = default;
};

/// One contiguous run of rows inside a single chunk, destined for a given
/// position in the caller's output.
struct ChunkSlice {
    std::uint64_t within_start = 0;  // row offset inside the chunk
    std::uint64_t within_end = 0;
    std::uint64_t output_offset = 0;  // row offset inside the assembled output

    [[nodiscard]] std::uint64_t rows() const noexcept { return within_end - within_start; }

    bool operator==(const ChunkSlice&) const = default;
};

/// All slices wanted from one chunk. A chunk id appears exactly once in a
/// plan, so executing the plan decodes each chunk exactly once; disjoint
/// request ranges that land in the same chunk become multiple slices here.
struct ChunkRead {
    std::uint64_t chunk_id = 0;
    std::vector<ChunkSlice> slices;  // ascending within_start

    bool operator==(const ChunkRead&) const = default;
};

struct ReadPlan {
    std::vector<ChunkRead> chunks;  // ascending chunk_id
    std::uint64_t total_rows = 0;

    bool operator==(const ReadPlan&) const = default;
};

/// Coalesces row ranges into a per-chunk plan. Ranges may arrive unsorted
/// and non-adjacent but must be pairwise disjoint and inside [0, n_obs);
/// output offsets follow the order the ranges were given, so executing the
/// plan concatenates rows in request order. Pure function.
[[nodiscard]] ReadPlan plan_read(const StoreManifest& manifest, std::span<const RowRange> ranges);

}  // namespace riffle
