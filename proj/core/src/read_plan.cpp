#include "riffle/read_plan.hpp"

#include <algorithm>
#include <map>
#include <string>

#include "riffle/error.hpp"

namespace riffle {

ReadPlan plan_read(const StoreManifest& manifest, std::span<const RowRange> ranges) {
    // Validate bounds and pairwise disjointness. Overlaps are rejected, not
    // deduplicated: the callers never produce them, so one is a planner bug.
    std::vector<RowRange> sorted(ranges.begin(), ranges.end());
    for (const auto& r : sorted) {
        if (r.start >= r.end)
            throw InvalidArgument("plan_read: empty or inverted range [" +
                                  std::to_string(r.start) + ", " + std::to_string(r.end) + ")");
        if (r.end > manifest.n_obs)
            throw InvalidArgument("plan_read: range [" + std::to_string(r.start) + ", " +
                                  std::to_string(r.end) + ") exceeds n_obs " +
                                  std::to_string(manifest.n_obs));
    }
    std::sort(sorted.begin(), sorted.end(),
              [](const RowRange& a, const RowRange& b) { return a.start < b.start; });
    for (std::size_t i = 1; i < sorted.size(); ++i) {
        if (sorted[i].start < sorted[i - 1].end)
            throw InvalidArgument("plan_read: overlapping ranges at row " +
                                  std::to_string(sorted[i].start));
    }

    ReadPlan plan;
    std::map<std::uint64_t, std::vector<ChunkSlice>> by_chunk;
    std::uint64_t output_offset = 0;
    for (const auto& range : ranges) {
        std::uint64_t row = range.start;
        while (row < range.end) {
            const std::uint64_t chunk_id = row / manifest.chunk_rows;
            const std::uint64_t chunk_begin = chunk_id * manifest.chunk_rows;
            const std::uint64_t chunk_end = chunk_begin + manifest.rows_in_chunk(chunk_id);
            const std::uint64_t stop = std::min(range.end, chunk_end);
            by_chunk[chunk_id].push_back({row - chunk_begin, stop - chunk_begin, output_offset});
            output_offset += stop - row;
            row = stop;
        }
    }
    plan.total_rows = output_offset;
    plan.chunks.reserve(by_chunk.size());
    for (auto& [chunk_id, slices] : by_chunk) {
        std::sort(slices.begin(), slices.end(), [](const ChunkSlice& a, const ChunkSlice& b) {
            return a.within_start < b.within_start;
        });
        plan.chunks.push_back({chunk_id, std::move(slices)});
    }
    return plan;
}

}  // namespace riffle
