#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "riffle/dtype.hpp"

namespace riffle {

/// On-disk metadata for a chunked/sharded observation matrix. Serialized
/// as `<root>/manifest.json` with keys in the order of the fields below;
/// `index_dtype` is present only for CSR stores.
struct StoreManifest {
    std::uint32_t format_version = 1;
    Layout layout = Layout::dense;
    std::uint64_t n_obs = 0;
    std::uint64_t n_var = 0;
    ValueDtype value_dtype = ValueDtype::f32;
    std::optional<IndexDtype> index_dtype;  // CSR only
    std::uint64_t chunk_rows = 1;
    std::uint64_t chunks_per_shard = 1;
    Codec codec = Codec::none;
    std::vector<std::string> var_names;
    bool has_provenance = false;

    [[nodiscard]] std::uint64_t chunk_count() const noexcept {
        return (n_obs + chunk_rows - 1) / chunk_rows;
    }
    [[nodiscard]] std::uint64_t shard_count() const noexcept {
        return (chunk_count() + chunks_per_shard - 1) / chunks_per_shard;
    }
    /// Rows held by chunk `chunk_id`; only the last chunk may be short.
    [[nodiscard]] std::uint64_t rows_in_chunk(std::uint64_t chunk_id) const noexcept {
        const std::uint64_t start = chunk_id * chunk_rows;
        return n_obs - start < chunk_rows ? n_obs - start : chunk_rows;
    }
    [[nodiscard]] std::uint64_t shard_capacity_rows() const noexcept {
        return chunk_rows * chunks_per_shard;
    }

    /// Throws InvalidArgument on any violated invariant.
    void validate() const;

    /// Canonical JSON serialization; stable byte-for-byte for a given
    /// manifest, so serialize -> parse -> serialize is the identity.
    [[nodiscard]] std::string serialize() const;

    static StoreManifest parse(std::string_view json_text);

    bool operator==(const StoreManifest&) const = default;
};

inline constexpr std::string_view kManifestFileName = "manifest.json";
inline constexpr std::string_view kShardDirName = "shards";

/// Shard file name for a shard index: `s{index:08d}.bin`.
[[nodiscard]] std::string shard_file_name(std::uint64_t shard_index);

}  // namespace riffle
