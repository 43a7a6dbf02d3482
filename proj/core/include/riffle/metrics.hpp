#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "riffle/loader.hpp"
#include "riffle/store.hpp"

namespace riffle {

enum class Strategy : std::uint8_t { chunked, row_random };
enum class CacheMode : std::uint8_t { warm, cold_best_effort };

[[nodiscard]] constexpr std::string_view to_string(Strategy s) noexcept {
    return s == Strategy::chunked ? "chunked" : "row_random";
}
[[nodiscard]] constexpr std::optional<Strategy> parse_strategy(std::string_view s) noexcept {
    if (s == "chunked") return Strategy::chunked;
    if (s == "row_random") return Strategy::row_random;
    return std::nullopt;
}
[[nodiscard]] constexpr std::string_view to_string(CacheMode m) noexcept {
    return m == CacheMode::warm ? "warm" : "cold_best_effort";
}
[[nodiscard]] constexpr std::optional<CacheMode> parse_cache_mode(std::string_view s) noexcept {
    if (s == "warm") return CacheMode::warm;
    if (s == "cold_best_effort") return CacheMode::cold_best_effort;
    return std::nullopt;
}

struct ThroughputReport {
    double samples_per_sec = 0;
    double batches_per_sec = 0;
    std::uint64_t bytes_read = 0;
    std::uint64_t read_ops = 0;
    double wall_seconds = 0;
    std::uint32_t epochs_measured = 0;
    std::uint32_t warmup_epochs_discarded = 0;
    CacheMode cache_mode = CacheMode::warm;

    // Companion data outside the CSV schema.
    std::uint64_t rows_emitted = 0;
    std::uint64_t batches_emitted = 0;
    std::uint64_t blocks_fetched = 0;
    bool cache_bypass_honored = false;
};

/// CSV schema: one header row naming the report fields, one data row per
/// run, columns in field order.
void throughput_csv_header(std::ostream& os);
void throughput_csv_row(std::ostream& os, const ThroughputReport& report);

struct RandomnessReport {
    std::uint64_t window_rows = 0;
    double same_block_pair_rate = 0;
    double expected_rate = 0;  // (c-1)/(n-1), the without-replacement null
    double z_score = 0;
    double rank_correlation = 0;
    double chi_square_stat = 0;
};

void randomness_csv_header(std::ostream& os);
void randomness_csv_row(std::ostream& os, const RandomnessReport& report);

/// Measures end-to-end loading throughput over `epochs` measured epochs
/// after discarding `warmup` epochs. The row_random strategy issues one
/// read call per row in a seeded random order (the slow per-observation
/// baseline); chunked drives the block loader. cold_best_effort turns on
/// cache_bypass and records whether the platform honored it.
[[nodiscard]] ThroughputReport run_throughput(const StoreReader& store,
                                              const LoaderConfig& config, std::uint32_t epochs,
                                              std::uint32_t warmup, Strategy strategy,
                                              CacheMode cache_mode);

struct RandomnessOptions {
    std::uint64_t null_trials = 200;  // simulated uniform permutations for the z denominator
    std::uint64_t seed = 0x52494646ull;
};

/// Mean fraction of row pairs sharing one input block of `block_rows`
/// consecutive source rows, over consecutive disjoint windows of
/// `window_rows` stream entries; for an identity stream with window ==
/// block this is exactly 1, and for a uniform permutation it concentrates
/// at (c-1)/(n-1).
[[nodiscard]] double same_block_pair_rate(std::span<const std::uint64_t> stream,
                                          std::uint64_t block_rows, std::uint64_t window_rows);

/// Randomness-quality statistics for a stream of source row indices (for a
/// shuffled store, the provenance map flattened to global input rows). The
/// z-score compares the observed pair rate with a Monte-Carlo ensemble of
/// uniform permutations of the same length.
[[nodiscard]] RandomnessReport randomness_report(std::span<const std::uint64_t> stream,
                                                 std::uint64_t block_rows,
                                                 std::uint64_t window_rows,
                                                 const RandomnessOptions& options = {});

enum class SweepParameter : std::uint8_t { batch_rows, fetch_block_rows, buffer_capacity_rows };

[[nodiscard]] constexpr std::string_view to_string(SweepParameter p) noexcept {
    switch (p) {
        case SweepParameter::batch_rows: return "batch_rows";
        case SweepParameter::fetch_block_rows: return "fetch_block_rows";
        case SweepParameter::buffer_capacity_rows: return "buffer_capacity_rows";
    }
    return "";
}
[[nodiscard]] constexpr std::optional<SweepParameter> parse_sweep_parameter(
    std::string_view s) noexcept {
    if (s == "batch_rows") return SweepParameter::batch_rows;
    if (s == "fetch_block_rows") return SweepParameter::fetch_block_rows;
    if (s == "buffer_capacity_rows") return SweepParameter::buffer_capacity_rows;
    return std::nullopt;
}

struct SweepRow {
    std::uint64_t value = 0;
    std::optional<ThroughputReport> report;  // empty when the grid point was invalid
    std::string error;
};

/// One run_throughput per value with the same seed and protocol; grid
/// points with invalid configurations are reported in `error` and skipped.
[[nodiscard]] std::vector<SweepRow> sweep(const StoreReader& store, SweepParameter parameter,
                                          std::span<const std::uint64_t> values,
                                          const LoaderConfig& fixed_config, std::uint32_t epochs,
                                          std::uint32_t warmup, Strategy strategy,
                                          CacheMode cache_mode);

}  // namespace riffle
