#include "riffle/synth.hpp"

#include <cmath>
#include <string>

#include "riffle/block.hpp"
#include "riffle/error.hpp"
#include "riffle/rng.hpp"
#include "riffle/store.hpp"

namespace riffle {

namespace {

constexpr std::uint64_t kSynthBlockRows = 4096;

double random_value(Rng& rng, ValueDtype dt) {
    switch (dt) {
        case ValueDtype::f32:
        case ValueDtype::f64: return rng.next_double();
        case ValueDtype::i32: return static_cast<double>(rng.bounded(1000));
        case ValueDtype::u8:  return static_cast<double>(rng.bounded(256));
    }
    return 0.0;
}

double random_nonzero_value(Rng& rng, ValueDtype dt) {
    switch (dt) {
        case ValueDtype::f32:
        case ValueDtype::f64: return 1.0 - rng.next_double();  // (0, 1]
        case ValueDtype::i32: return 1.0 + static_cast<double>(rng.bounded(999));
        case ValueDtype::u8:  return 1.0 + static_cast<double>(rng.bounded(255));
    }
    return 1.0;
}

}  // namespace

double identity_value(ValueDtype dtype, std::uint64_t row) {
    switch (dtype) {
        case ValueDtype::f32: return static_cast<double>(static_cast<float>(row));
        case ValueDtype::f64: return static_cast<double>(row);
        case ValueDtype::i32: return static_cast<double>(static_cast<std::int32_t>(
            row % 0x80000000ull));
        case ValueDtype::u8:  return static_cast<double>(row % 256);
    }
    return 0.0;
}

std::uint64_t synth_estimated_bytes(const SynthConfig& config) {
    const std::uint64_t vs = value_size(config.value_dtype);
    if (config.layout == Layout::dense) return config.n_obs * config.n_var * vs;
    const std::uint64_t is = index_size(config.index_dtype);
    const double nnz_per_row = static_cast<double>(config.n_var) * config.density;
    const double payload = static_cast<double>(config.n_obs) *
                           (nnz_per_row * static_cast<double>(vs + is) + static_cast<double>(is));
    return static_cast<std::uint64_t>(payload);
}

StoreManifest synth_store(const std::filesystem::path& path, const SynthConfig& config) {
    if (config.n_obs == 0 || config.n_var == 0)
        throw InvalidArgument("synth: n_obs and n_var must be >= 1");
    if (config.layout == Layout::csr && (config.density <= 0.0 || config.density > 1.0))
        throw InvalidArgument("synth: density must lie in (0, 1] for csr stores");
    if (config.max_bytes != 0 && synth_estimated_bytes(config) > config.max_bytes)
        throw InvalidArgument("synth: estimated size " +
                              std::to_string(synth_estimated_bytes(config)) +
                              " bytes exceeds the disk budget of " +
                              std::to_string(config.max_bytes));

    StoreManifest man;
    man.layout = config.layout;
    man.n_var = config.n_var;
    man.value_dtype = config.value_dtype;
    if (config.layout == Layout::csr) man.index_dtype = config.index_dtype;
    man.chunk_rows = config.chunk_rows;
    man.chunks_per_shard = config.chunks_per_shard;
    man.codec = config.codec;
    man.var_names.reserve(config.n_var);
    for (std::uint64_t c = 0; c < config.n_var; ++c) man.var_names.push_back("v" + std::to_string(c));

    StoreWriter writer(path, man);
    const Rng base(config.seed);
    const std::size_t vs = value_size(config.value_dtype);

    // Residual per-column probability that keeps E[nnz/row] at
    // n_var * density with the identity column always present.
    const double residual_density =
        config.n_var > 1
            ? std::clamp((static_cast<double>(config.n_var) * config.density - 1.0) /
                             static_cast<double>(config.n_var - 1),
                         0.0, 1.0)
            : 0.0;

    for (std::uint64_t start = 0, block_index = 0; start < config.n_obs;
         start += kSynthBlockRows, ++block_index) {
        const std::uint64_t rows = std::min(kSynthBlockRows, config.n_obs - start);
        Rng rng = base.stream(block_index);
        if (config.layout == Layout::dense) {
            DenseBlock block = DenseBlock::zeros(rows, config.n_var, config.value_dtype);
            for (std::uint64_t i = 0; i < rows; ++i) {
                block.set(i, 0, identity_value(config.value_dtype, start + i));
                for (std::uint64_t c = 1; c < config.n_var; ++c)
                    block.set(i, c, random_value(rng, config.value_dtype));
            }
            writer.append(block);
        } else {
            CsrBlock block = CsrBlock::empty(config.n_var, config.value_dtype);
            block.n_rows = rows;
            std::vector<std::byte> cell(vs);
            const auto push_entry = [&](std::uint64_t col, double v) {
                block.indices.push_back(col);
                scalar_set(cell, config.value_dtype, 0, v);
                block.data.insert(block.data.end(), cell.begin(), cell.end());
            };
            // log(1-u)/log(1-p) geometric skipping keeps sparse generation
            // linear in nnz rather than in n_var.
            const double log1mp =
                residual_density > 0.0 && residual_density < 1.0
                    ? std::log1p(-residual_density)
                    : 0.0;
            for (std::uint64_t i = 0; i < rows; ++i) {
                push_entry(0, identity_value(config.value_dtype, start + i));
                if (residual_density >= 1.0) {
                    for (std::uint64_t c = 1; c < config.n_var; ++c)
                        push_entry(c, random_nonzero_value(rng, config.value_dtype));
                } else if (residual_density > 0.0) {
                    std::uint64_t c = 0;
                    for (;;) {
                        const double u = rng.next_double();
                        const double skip = std::floor(std::log1p(-u) / log1mp);
                        if (skip >= static_cast<double>(config.n_var)) break;
                        c += 1 + static_cast<std::uint64_t>(skip);
                        if (c >= config.n_var) break;
                        push_entry(c, random_nonzero_value(rng, config.value_dtype));
                    }
                }
                block.indptr.push_back(block.indices.size());
            }
            writer.append(block);
        }
    }
    return writer.finish();
}

}  // namespace riffle
