#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>

#include "riffle/block.hpp"
#include "riffle/manifest.hpp"
#include "riffle/read_plan.hpp"

namespace riffle {

/// I/O accounting for read operations. `read_ops` counts payload read
/// calls only; footer loads are tracked separately so the per-plan bound
/// read_ops <= chunks-in-plan holds.
struct IoStats {
    std::uint64_t read_ops = 0;
    std::uint64_t bytes_read = 0;
    std::uint64_t chunks_decoded = 0;
    std::uint64_t footer_loads = 0;
    std::uint64_t cache_hits = 0;
    std::uint64_t read_ops_bypassed = 0;  // payload reads served via unbuffered I/O
    bool cache_bypass_requested = false;

    /// True when bypass was requested and every payload read honored it.
    [[nodiscard]] bool cache_bypass_honored() const noexcept {
        return cache_bypass_requested && read_ops_bypassed == read_ops;
    }

    IoStats& operator+=(const IoStats& o) noexcept {
        read_ops += o.read_ops;
        bytes_read += o.bytes_read;
        chunks_decoded += o.chunks_decoded;
        footer_loads += o.footer_loads;
        cache_hits += o.cache_hits;
        read_ops_bypassed += o.read_ops_bypassed;
        cache_bypass_requested |= o.cache_bypass_requested;
        return *this;
    }
};

struct ReadOptions {
    /// Best-effort unbuffered reads (O_DIRECT where available). Never
    /// changes returned data; IoStats records whether it was honored.
    bool cache_bypass = false;
    /// When nonzero, visit callbacks receive at most this many rows per
    /// piece. Each chunk is still decoded once.
    std::uint64_t max_piece_rows = 0;
};

struct ReaderOptions {
    /// Number of decoded chunks kept in an LRU cache (0 disables caching).
    /// Cache hits skip payload reads, which io_stats will reflect.
    std::size_t chunk_cache_chunks = 0;
};

/// A run of dense rows handed to a visitor. `values` points into decoded
/// chunk storage and is valid only during the callback.
struct DensePiece {
    std::uint64_t output_offset = 0;
    std::size_t n_rows = 0;
    std::size_t n_var = 0;
    ValueDtype dtype = ValueDtype::f32;
    std::span<const std::byte> values;  // n_rows * n_var elements
};

/// A run of CSR rows handed to a visitor. `indptr` holds n_rows + 1
/// chunk-local offsets (indptr.front() is not necessarily 0); `indices` and
/// `data` cover exactly the piece's entries, so the entries of local row i
/// sit at [indptr[i] - indptr.front(), indptr[i+1] - indptr.front()).
struct CsrPiece {
    std::uint64_t output_offset = 0;
    std::size_t n_rows = 0;
    std::size_t n_var = 0;
    ValueDtype dtype = ValueDtype::f32;
    std::span<const std::uint64_t> indptr;
    std::span<const std::uint64_t> indices;
    std::span<const std::byte> data;

    [[nodiscard]] std::uint64_t row_nnz(std::size_t i) const {
        return indptr[i + 1] - indptr[i];
    }
    [[nodiscard]] std::span<const std::uint64_t> row_indices(std::size_t i) const {
        return indices.subspan(indptr[i] - indptr.front(), row_nnz(i));
    }
    [[nodiscard]] std::span<const std::byte> row_data(std::size_t i) const {
        const std::size_t vs = value_size(dtype);
        return data.subspan((indptr[i] - indptr.front()) * vs, row_nnz(i) * vs);
    }
};

using DenseVisitor = std::function<void(const DensePiece&)>;
using CsrVisitor = std::function<void(const CsrPiece&)>;

struct StoreCreateOptions {
    /// Write manifest.json only when finish() completes, leaving a partial
    /// store unreadable (explicitly unfinished) if the run dies midway.
    bool defer_manifest = false;
};

/// Append-only writer. Rows are split across chunk boundaries so every
/// chunk except possibly the last is full; shards are finalized (footer
/// written) as soon as they fill. At most one writer per store, and a store
/// being written is not readable until finish().
class StoreWriter {
public:
    /// Creates a fresh store at `root`. Refuses to clobber: throws
    /// InvalidArgument if a manifest already exists there. `manifest.n_obs`
    /// is reset to zero.
    StoreWriter(const std::filesystem::path& root, StoreManifest manifest,
                StoreCreateOptions options = {});
    StoreWriter(StoreWriter&&) noexcept;
    StoreWriter& operator=(StoreWriter&&) noexcept;
    ~StoreWriter();

    std::uint64_t append(const DenseBlock& block);
    std::uint64_t append(const CsrBlock& block);
    std::uint64_t append(const RowBlock& block);

    [[nodiscard]] const StoreManifest& manifest() const noexcept;
    [[nodiscard]] const std::filesystem::path& root() const noexcept;

    /// Flushes the tail chunk, finalizes the open shard, writes the
    /// manifest, and returns it. The writer is unusable afterwards.
    StoreManifest finish();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Read handle over a finished store. All methods are const and safe to
/// call from concurrent threads sharing one reader.
class StoreReader {
public:
    explicit StoreReader(std::filesystem::path root, ReaderOptions options = {});
    StoreReader(StoreReader&&) noexcept;
    StoreReader& operator=(StoreReader&&) noexcept;
    ~StoreReader();

    [[nodiscard]] const StoreManifest& manifest() const noexcept;
    [[nodiscard]] const std::filesystem::path& root() const noexcept;

    /// Reads the requested rows, concatenated in the order the ranges were
    /// given. Each chunk intersecting the request is decoded exactly once;
    /// adjacent chunk records in a shard are fetched with one read call.
    [[nodiscard]] RowBlock read_rows(std::span<const RowRange> ranges, IoStats* stats = nullptr,
                                     const ReadOptions& options = {}) const;
    [[nodiscard]] DenseBlock read_rows_dense(std::span<const RowRange> ranges,
                                             IoStats* stats = nullptr,
                                             const ReadOptions& options = {}) const;
    [[nodiscard]] CsrBlock read_rows_csr(std::span<const RowRange> ranges,
                                         IoStats* stats = nullptr,
                                         const ReadOptions& options = {}) const;

    /// Streaming variants: rows are delivered as pieces referencing decoded
    /// chunk storage instead of being assembled into one block, so callers
    /// can bound resident memory. Piece order is unspecified;
    /// `output_offset` states where each piece belongs.
    void visit_rows_dense(std::span<const RowRange> ranges, const DenseVisitor& visit,
                          IoStats* stats = nullptr, const ReadOptions& options = {}) const;
    void visit_rows_csr(std::span<const RowRange> ranges, const CsrVisitor& visit,
                        IoStats* stats = nullptr, const ReadOptions& options = {}) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace riffle
