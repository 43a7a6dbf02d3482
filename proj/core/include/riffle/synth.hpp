#pragma once

#include <cstdint>
#include <filesystem>

#include "riffle/manifest.hpp"

namespace riffle {

/// Synthetic-store recipe. Rows carry a recoverable identity channel:
/// column 0 holds the global row index encoded in the value dtype (see
/// identity_value), so loader output can be verified against row ids. For
/// CSR stores the identity entry is always materialized and the remaining
/// columns are sampled so the expected nnz per row equals n_var * density.
struct SynthConfig {
    std::uint64_t n_obs = 0;
    std::uint64_t n_var = 0;
    Layout layout = Layout::dense;
    ValueDtype value_dtype = ValueDtype::f32;
    IndexDtype index_dtype = IndexDtype::u32;
    double density = 0.01;  // CSR only
    std::uint64_t seed = 0;
    std::uint64_t chunk_rows = 1024;
    std::uint64_t chunks_per_shard = 128;
    Codec codec = Codec::none;
    std::uint64_t max_bytes = 0;  // disk budget; 0 disables the check
};

/// The identity-channel encoding of a row index: exact where the dtype can
/// represent it (f64, i32 below 2^31, f32 below 2^24) and the dtype's
/// truncation otherwise (u8 wraps modulo 256).
[[nodiscard]] double identity_value(ValueDtype dtype, std::uint64_t row);

/// Estimated on-disk payload size, used against the disk budget.
[[nodiscard]] std::uint64_t synth_estimated_bytes(const SynthConfig& config);

/// Writes a seeded, reproducible synthetic store; identical configs produce
/// byte-identical stores.
StoreManifest synth_store(const std::filesystem::path& path, const SynthConfig& config);

}  // namespace riffle
