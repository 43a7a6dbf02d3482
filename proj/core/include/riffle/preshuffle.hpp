#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "riffle/collection.hpp"
#include "riffle/read_plan.hpp"
#include "riffle/store.hpp"

namespace riffle {

/// The randomized block schedule of one shuffle pass. Blocks are contiguous
/// runs of `block_rows` rows over the collection's global row space (the
/// last block may be short); their seeded permutation is packed greedily
/// into rounds of at most `buffer_rows` rows.
struct ShufflePlan {
    std::uint64_t seed = 0;
    std::uint64_t block_rows = 1;    // c: rows per contiguous read block
    std::uint64_t buffer_rows = 1;   // m: rows shuffled in memory per round
    std::uint64_t total_rows = 0;
    std::vector<std::vector<std::uint64_t>> rounds;  // block ids per round

    [[nodiscard]] std::uint64_t block_count() const noexcept {
        return block_rows == 0 ? 0 : (total_rows + block_rows - 1) / block_rows;
    }
    [[nodiscard]] RowRange block_range(std::uint64_t block_id) const noexcept {
        const std::uint64_t start = block_id * block_rows;
        const std::uint64_t end = start + block_rows;
        return {start, end < total_rows ? end : total_rows};
    }
};

/// Deterministic in (total_rows, block_rows, buffer_rows, seed). Requires
/// 1 <= block_rows <= buffer_rows; buffer_rows may exceed total_rows, which
/// collapses the schedule to a single round.
[[nodiscard]] ShufflePlan plan_shuffle(std::uint64_t total_rows, std::uint64_t block_rows,
                                       std::uint64_t buffer_rows, std::uint64_t seed);

/// Output-store parameters for a shuffle pass. Chunking is deliberately not
/// inherited from the inputs; store creation is its own tuning point.
struct ShuffleOutputConfig {
    std::uint64_t chunk_rows = 1024;
    std::uint64_t chunks_per_shard = 128;
    Codec codec = Codec::none;
    /// CSR stores only; defaults to the first input's index dtype.
    std::optional<IndexDtype> index_dtype;
};

/// One output row's origin.
struct ProvenanceRecord {
    std::uint32_t dataset_id = 0;
    std::uint64_t source_row = 0;

    bool operator==(const ProvenanceRecord&) const = default;
};

/// Parameters recorded beside the provenance array so a shuffle is
/// reproducible from its output alone.
struct ShuffleSidecarMeta {
    std::string rng_name;
    std::uint64_t seed = 0;
    std::uint64_t block_rows = 0;
    std::uint64_t buffer_rows = 0;
};

struct ShuffleRunStats {
    /// Peak of (rows held in the round assembly) + (rows staged while
    /// scattering input pieces or gathering output batches). Bounded by
    /// buffer_rows + block_rows.
    std::uint64_t peak_resident_rows = 0;
    std::uint64_t rows_written = 0;
    std::uint64_t rounds_executed = 0;
    IoStats input_io;
};

/// Executes a shuffle pass: per round, reads the round's blocks (each
/// underlying chunk decoded at most once), reprojects columns onto the
/// collection's unified axis (missing columns become zero), applies a
/// seeded uniform permutation in memory, and appends rows plus matching
/// provenance records to the output store. The output manifest is written
/// only on completion, so an interrupted run is left explicitly unfinished.
StoreManifest run_shuffle(const DatasetCollection& collection, const ShufflePlan& plan,
                          const std::filesystem::path& out_path,
                          const ShuffleOutputConfig& out_config,
                          ShuffleRunStats* stats = nullptr);

inline constexpr std::string_view kProvenanceDirName = "provenance";
inline constexpr std::string_view kProvenanceMetaFileName = "meta.json";

/// Reads the provenance sidecar of a shuffled store: a u32+u64 record array
/// chunked and sharded with the same geometry as the store itself.
class ProvenanceReader {
public:
    explicit ProvenanceReader(const StoreReader& store);

    [[nodiscard]] std::uint64_t record_count() const noexcept { return count_; }
    [[nodiscard]] const ShuffleSidecarMeta& meta() const noexcept { return meta_; }

    [[nodiscard]] std::vector<ProvenanceRecord> read(std::span<const RowRange> ranges) const;
    [[nodiscard]] std::vector<ProvenanceRecord> read_all() const;

private:
    std::filesystem::path dir_;
    StoreManifest parent_;
    ShuffleSidecarMeta meta_;
    std::uint64_t count_ = 0;
};

struct VerifyReport {
    std::uint64_t rows_sampled = 0;
    std::vector<std::string> violations;

    [[nodiscard]] bool ok() const noexcept { return violations.empty(); }
};

/// Checks that the provenance map is a bijection onto the inputs' rows and
/// that `sample_rows` randomly chosen output rows carry exactly the values
/// of their provenance-named source rows after column reprojection.
[[nodiscard]] VerifyReport verify_shuffle(const StoreReader& shuffled,
                                          const DatasetCollection& inputs,
                                          std::uint64_t sample_rows, std::uint64_t seed);

/// Bijectivity-only check usable without the input stores: every
/// (dataset_id, source_row) pair unique, and each dataset's rows exactly
/// cover 0..count-1.
[[nodiscard]] VerifyReport verify_provenance_only(const StoreReader& shuffled);

}  // namespace riffle
