#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "riffle/store.hpp"

namespace riffle {

struct LoaderConfig {
    std::uint64_t fetch_block_rows = 1024;      // f: rows per contiguous fetch
    std::uint64_t buffer_capacity_rows = 16384; // B: shuffle-buffer size, >= f
    std::uint64_t batch_rows = 256;             // b: minibatch size, <= B
    std::uint64_t seed = 0;
    std::uint32_t prefetch_depth = 0;           // blocks fetched ahead
    bool drop_last = false;
    bool cache_bypass = false;

    void validate() const;
};

/// The seeded permutation of the partition of [0, n_obs) into fetch blocks.
/// Deterministic in (seed, epoch_index); distinct epochs get independent
/// permutations under the same seed.
struct EpochPlan {
    std::vector<RowRange> blocks;
    std::uint64_t epoch_index = 0;
};

[[nodiscard]] EpochPlan plan_epoch(std::uint64_t n_obs, const LoaderConfig& config,
                                   std::uint64_t epoch_index);

struct MiniBatch {
    RowBlock block;
    std::vector<std::uint64_t> global_indices;  // one source row id per batch row
    std::uint64_t epoch_index = 0;
    std::uint64_t batch_index = 0;
};

struct LoaderCounters {
    std::uint64_t blocks_fetched = 0;  // plan blocks consumed so far
    IoStats io;
};

/// Streams shuffled minibatches for one epoch.
///
/// Fetched blocks fill a bounded in-memory shuffle buffer; each emitted row
/// is drawn from a uniformly random occupied slot, which is backfilled by
/// swapping in the newest buffered row, and the next planned block is
/// fetched whenever occupancy drops below B - f. After the plan is
/// exhausted the buffer drains by the same swap-sampling, so the tail
/// carries no residual order. The batch stream is a pure function of
/// (store bytes, config, epoch_index): prefetch depth and timing never
/// change it. Single consumer; multiple iterators over one store may run
/// concurrently.
class BatchIterator {
public:
    BatchIterator(std::shared_ptr<const StoreReader> store, LoaderConfig config,
                  std::uint64_t epoch_index);
    BatchIterator(BatchIterator&&) noexcept;
    BatchIterator& operator=(BatchIterator&&) noexcept;
    ~BatchIterator();

    /// Next batch, or nullopt at end of epoch (idempotent). A failed block
    /// fetch surfaces here as IoError naming the block.
    std::optional<MiniBatch> next();

    [[nodiscard]] const LoaderCounters& counters() const noexcept;
    /// Highest shuffle-buffer occupancy observed; bounded by B + f.
    [[nodiscard]] std::uint64_t peak_buffer_rows() const noexcept;
    [[nodiscard]] std::uint64_t epoch_index() const noexcept;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

[[nodiscard]] BatchIterator open_epoch(std::shared_ptr<const StoreReader> store,
                                       const LoaderConfig& config, std::uint64_t epoch_index);

}  // namespace riffle
