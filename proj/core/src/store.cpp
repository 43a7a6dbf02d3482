#include "riffle/store.hpp"

#include <algorithm>
#include <cstdlib>
#include <list>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <variant>

#include "file_io.hpp"
#include "riffle/codec.hpp"
#include "riffle/error.hpp"
#include "riffle/shard.hpp"

namespace riffle {

namespace {

constexpr std::size_t kDirectAlign = 4096;
constexpr std::size_t kCsrRecordHeaderBytes = 12;  // n_rows u32 + nnz u64

[[nodiscard]] std::filesystem::path shard_path(const std::filesystem::path& root,
                                               std::uint64_t shard_index) {
    return root / kShardDirName / shard_file_name(shard_index);
}

// ----- chunk record encoding -----------------------------------------------

std::vector<std::byte> encode_dense_record(const DenseBlock& chunk) {
    return chunk.values;
}

void append_index_array(std::vector<std::byte>& out, std::span<const std::uint64_t> values,
                        IndexDtype idt) {
    if (idt == IndexDtype::u64) {
        const auto* p = reinterpret_cast<const std::byte*>(values.data());
        out.insert(out.end(), p, p + values.size() * 8);
        return;
    }
    const std::size_t base = out.size();
    out.resize(base + values.size() * 4);
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i] > 0xFFFFFFFFull)
            throw InvalidArgument("csr record: value " + std::to_string(values[i]) +
                                  " does not fit index_dtype u32");
        detail::write_le32(out.data() + base + i * 4, static_cast<std::uint32_t>(values[i]));
    }
}

std::vector<std::byte> encode_csr_record(const CsrBlock& chunk, IndexDtype idt) {
    std::vector<std::byte> out;
    const std::size_t is = index_size(idt);
    out.reserve(kCsrRecordHeaderBytes + (chunk.n_rows + 1) * is + chunk.indices.size() * is +
                chunk.data.size());
    out.resize(kCsrRecordHeaderBytes);
    detail::write_le32(out.data(), static_cast<std::uint32_t>(chunk.n_rows));
    detail::write_le64(out.data() + 4, chunk.nnz());
    append_index_array(out, chunk.indptr, idt);
    append_index_array(out, chunk.indices, idt);
    out.insert(out.end(), chunk.data.begin(), chunk.data.end());
    return out;
}

std::vector<std::uint64_t> read_index_array(std::span<const std::byte> buf, std::size_t count,
                                            IndexDtype idt) {
    std::vector<std::uint64_t> out(count);
    if (idt == IndexDtype::u64) {
        std::memcpy(out.data(), buf.data(), count * 8);
    } else {
        for (std::size_t i = 0; i < count; ++i) out[i] = detail::read_le32(buf.data() + i * 4);
    }
    return out;
}

// A decoded chunk: raw row-major values for dense stores, a rebased
// CsrBlock for sparse ones.
using DecodedChunk = std::variant<std::vector<std::byte>, CsrBlock>;

DecodedChunk decode_record(const StoreManifest& man, std::uint64_t chunk_id,
                           std::span<const std::byte> encoded) {
    const std::uint64_t rows = man.rows_in_chunk(chunk_id);
    if (man.layout == Layout::dense) {
        const std::size_t expected = rows * man.n_var * value_size(man.value_dtype);
        return codec_decode(man.codec, encoded, expected);
    }

    const IndexDtype idt = *man.index_dtype;
    const std::size_t is = index_size(idt);
    const std::size_t vs = value_size(man.value_dtype);
    std::vector<std::byte> raw =
        codec_decode_any(man.codec, encoded, encoded.size() * 3 + kCsrRecordHeaderBytes);
    if (raw.size() < kCsrRecordHeaderBytes) throw CorruptStore("csr record shorter than header");
    const std::uint32_t hdr_rows = detail::read_le32(raw.data());
    const std::uint64_t nnz = detail::read_le64(raw.data() + 4);
    if (hdr_rows != rows)
        throw CorruptStore("csr record header declares " + std::to_string(hdr_rows) +
                           " rows, chunk has " + std::to_string(rows));
    const std::size_t expected =
        kCsrRecordHeaderBytes + (rows + 1) * is + nnz * is + nnz * vs;
    if (raw.size() != expected)
        throw CorruptStore("csr record length " + std::to_string(raw.size()) + ", expected " +
                           std::to_string(expected));

    CsrBlock chunk;
    chunk.n_rows = rows;
    chunk.n_var = man.n_var;
    chunk.dtype = man.value_dtype;
    std::size_t pos = kCsrRecordHeaderBytes;
    chunk.indptr = read_index_array({raw.data() + pos, (rows + 1) * is}, rows + 1, idt);
    pos += (rows + 1) * is;
    chunk.indices = read_index_array({raw.data() + pos, nnz * is}, nnz, idt);
    pos += nnz * is;
    chunk.data.assign(raw.begin() + static_cast<std::ptrdiff_t>(pos), raw.end());
    try {
        chunk.validate();
    } catch (const InvalidArgument& e) {
        throw CorruptStore(std::string("csr record invalid: ") + e.what());
    }
    return chunk;
}

std::size_t decoded_rows(const DecodedChunk& c, const StoreManifest& man,
                         std::uint64_t chunk_id) {
    if (const auto* d = std::get_if<std::vector<std::byte>>(&c)) {
        const std::size_t rb = man.n_var * value_size(man.value_dtype);
        // A zero-width store has empty records; trust the chunk grid.
        return rb == 0 ? man.rows_in_chunk(chunk_id) : d->size() / rb;
    }
    return std::get<CsrBlock>(c).n_rows;
}

struct AlignedFree {
    void operator()(std::byte* p) const noexcept { std::free(p); }
};

}  // namespace

// ----- StoreWriter ----------------------------------------------------------

struct StoreWriter::Impl {
    std::filesystem::path root;
    StoreManifest man;
    bool defer_manifest = false;
    bool finished = false;

    DenseBlock pend_dense;
    CsrBlock pend_csr;
    std::optional<ShardWriter> shard;
    std::uint64_t chunks_emitted = 0;

    [[nodiscard]] std::uint64_t pending_rows() const {
        return man.layout == Layout::dense ? pend_dense.n_rows : pend_csr.n_rows;
    }

    void write_manifest() const {
        const std::string text = man.serialize();
        auto f = detail::FileHandle::create_write(root / kManifestFileName);
        f.write_all({reinterpret_cast<const std::byte*>(text.data()), text.size()});
    }

    void open_shard_if_needed() {
        if (!shard) {
            const std::uint64_t shard_index = chunks_emitted / man.chunks_per_shard;
            shard.emplace(shard_path(root, shard_index), man.chunks_per_shard);
        }
    }

    void emit_chunk(std::uint64_t rows) {
        std::vector<std::byte> record;
        if (man.layout == Layout::dense) {
            DenseBlock chunk;
            chunk.append_rows(pend_dense, 0, rows);
            record = encode_dense_record(chunk);
            const std::size_t rb = pend_dense.row_bytes();
            pend_dense.values.erase(pend_dense.values.begin(),
                                    pend_dense.values.begin() +
                                        static_cast<std::ptrdiff_t>(rows * rb));
            pend_dense.n_rows -= rows;
        } else {
            CsrBlock chunk;
            chunk.n_var = pend_csr.n_var;
            chunk.dtype = pend_csr.dtype;
            chunk.indptr = {0};
            chunk.append_rows(pend_csr, 0, rows);
            record = encode_csr_record(chunk, *man.index_dtype);
            // drop the carved prefix and rebase what is left
            const std::uint64_t cut = pend_csr.indptr[rows];
            const std::size_t vs = value_size(pend_csr.dtype);
            pend_csr.indices.erase(pend_csr.indices.begin(),
                                   pend_csr.indices.begin() + static_cast<std::ptrdiff_t>(cut));
            pend_csr.data.erase(pend_csr.data.begin(),
                                pend_csr.data.begin() + static_cast<std::ptrdiff_t>(cut * vs));
            pend_csr.indptr.erase(pend_csr.indptr.begin(),
                                  pend_csr.indptr.begin() + static_cast<std::ptrdiff_t>(rows));
            for (auto& v : pend_csr.indptr) v -= cut;
            pend_csr.n_rows -= rows;
        }
        const std::vector<std::byte> encoded = codec_encode(man.codec, record);
        open_shard_if_needed();
        shard->append_chunk(encoded);
        ++chunks_emitted;
        if (shard->full()) {
            shard->finalize();
            shard.reset();
        }
    }

    void emit_full_chunks() {
        while (pending_rows() >= man.chunk_rows) emit_chunk(man.chunk_rows);
    }
};

StoreWriter::StoreWriter(const std::filesystem::path& root, StoreManifest manifest,
                         StoreCreateOptions options)
    : impl_(std::make_unique<Impl>()) {
    manifest.n_obs = 0;
    manifest.validate();
    if (std::filesystem::exists(root / kManifestFileName))
        throw InvalidArgument("store '" + root.string() +
                              "' already contains a manifest; refusing to clobber");
    std::error_code ec;
    std::filesystem::create_directories(root / kShardDirName, ec);
    if (ec)
        throw IoError("cannot create store directories at '" + root.string() +
                      "': " + ec.message());

    impl_->root = root;
    impl_->man = std::move(manifest);
    impl_->defer_manifest = options.defer_manifest;
    if (impl_->man.layout == Layout::dense) {
        impl_->pend_dense.n_var = impl_->man.n_var;
        impl_->pend_dense.dtype = impl_->man.value_dtype;
    } else {
        impl_->pend_csr = CsrBlock::empty(impl_->man.n_var, impl_->man.value_dtype);
    }
    if (!impl_->defer_manifest) impl_->write_manifest();
}

StoreWriter::StoreWriter(StoreWriter&&) noexcept = default;
StoreWriter& StoreWriter::operator=(StoreWriter&&) noexcept = default;
StoreWriter::~StoreWriter() = default;

std::uint64_t StoreWriter::append(const DenseBlock& block) {
    auto& im = *impl_;
    if (im.finished) throw InvalidArgument("store writer: append after finish");
    if (im.man.layout != Layout::dense)
        throw InvalidArgument("store writer: dense block appended to csr store");
    block.validate();
    if (block.n_var != im.man.n_var)
        throw InvalidArgument("store writer: block n_var " + std::to_string(block.n_var) +
                              " != store n_var " + std::to_string(im.man.n_var));
    if (block.dtype != im.man.value_dtype)
        throw InvalidArgument("store writer: block dtype does not match store value_dtype");
    im.pend_dense.append_rows(block, 0, block.n_rows);
    im.emit_full_chunks();
    im.man.n_obs += block.n_rows;
    return im.man.n_obs;
}

std::uint64_t StoreWriter::append(const CsrBlock& block) {
    auto& im = *impl_;
    if (im.finished) throw InvalidArgument("store writer: append after finish");
    if (im.man.layout != Layout::csr)
        throw InvalidArgument("store writer: csr block appended to dense store");
    block.validate();
    if (block.n_var != im.man.n_var)
        throw InvalidArgument("store writer: block n_var " + std::to_string(block.n_var) +
                              " != store n_var " + std::to_string(im.man.n_var));
    if (block.dtype != im.man.value_dtype)
        throw InvalidArgument("store writer: block dtype does not match store value_dtype");
    im.pend_csr.append_rows(block, 0, block.n_rows);
    im.emit_full_chunks();
    im.man.n_obs += block.n_rows;
    return im.man.n_obs;
}

std::uint64_t StoreWriter::append(const RowBlock& block) {
    return std::visit([this](const auto& b) { return append(b); }, block);
}

const StoreManifest& StoreWriter::manifest() const noexcept { return impl_->man; }
const std::filesystem::path& StoreWriter::root() const noexcept { return impl_->root; }

StoreManifest StoreWriter::finish() {
    auto& im = *impl_;
    if (im.finished) throw InvalidArgument("store writer: finish called twice");
    if (im.pending_rows() > 0) im.emit_chunk(im.pending_rows());
    if (im.shard) {
        im.shard->finalize();
        im.shard.reset();
    }
    im.write_manifest();
    im.finished = true;
    return im.man;
}

// ----- StoreReader ----------------------------------------------------------

struct StoreReader::Impl {
    std::filesystem::path root;
    StoreManifest man;
    ReaderOptions opts;

    mutable std::mutex mu;
    mutable std::unordered_map<std::uint64_t, detail::FileHandle> shard_fds;
    mutable std::unordered_map<std::uint64_t, detail::FileHandle> direct_fds;
    mutable std::unordered_map<std::uint64_t, ShardFooter> footers;

    // LRU over decoded chunks, keyed by chunk id.
    mutable std::list<std::uint64_t> lru;
    mutable std::unordered_map<std::uint64_t,
                               std::pair<std::shared_ptr<const DecodedChunk>,
                                         std::list<std::uint64_t>::iterator>>
        cache;

    const ShardFooter& footer(std::uint64_t shard_id, IoStats& st) const {
        std::lock_guard lock(mu);
        auto it = footers.find(shard_id);
        if (it == footers.end()) {
            auto f = ShardFooter::read(shard_path(root, shard_id), man.chunks_per_shard);
            st.footer_loads++;
            st.bytes_read += ShardFooter::footer_bytes(man.chunks_per_shard) + kShardMagic.size();
            it = footers.emplace(shard_id, std::move(f)).first;
        }
        return it->second;
    }

    const detail::FileHandle& shard_fd(std::uint64_t shard_id) const {
        std::lock_guard lock(mu);
        auto it = shard_fds.find(shard_id);
        if (it == shard_fds.end())
            it = shard_fds.emplace(shard_id, detail::FileHandle::open_read(shard_path(root, shard_id)))
                     .first;
        return it->second;
    }

    const detail::FileHandle& direct_fd(std::uint64_t shard_id) const {
        std::lock_guard lock(mu);
        auto it = direct_fds.find(shard_id);
        if (it == direct_fds.end())
            it = direct_fds
                     .emplace(shard_id, detail::FileHandle::try_open_direct(shard_path(root, shard_id)))
                     .first;
        return it->second;
    }

    std::shared_ptr<const DecodedChunk> cache_get(std::uint64_t chunk_id) const {
        if (opts.chunk_cache_chunks == 0) return nullptr;
        std::lock_guard lock(mu);
        auto it = cache.find(chunk_id);
        if (it == cache.end()) return nullptr;
        lru.splice(lru.begin(), lru, it->second.second);
        return it->second.first;
    }

    void cache_put(std::uint64_t chunk_id, std::shared_ptr<const DecodedChunk> chunk) const {
        if (opts.chunk_cache_chunks == 0) return;
        std::lock_guard lock(mu);
        if (cache.contains(chunk_id)) return;
        lru.push_front(chunk_id);
        cache.emplace(chunk_id, std::make_pair(std::move(chunk), lru.begin()));
        while (cache.size() > opts.chunk_cache_chunks) {
            cache.erase(lru.back());
            lru.pop_back();
        }
    }

    /// One payload read, honoring cache_bypass best-effort.
    std::vector<std::byte> read_payload(std::uint64_t shard_id, std::uint64_t offset,
                                        std::uint64_t length, bool bypass, IoStats& st) const {
        st.read_ops++;
        if (bypass) {
            const auto& dfh = direct_fd(shard_id);
            if (dfh.valid()) {
                const std::uint64_t a_off = offset & ~static_cast<std::uint64_t>(kDirectAlign - 1);
                const std::uint64_t a_len =
                    ((offset + length - a_off) + kDirectAlign - 1) / kDirectAlign * kDirectAlign;
                std::unique_ptr<std::byte, AlignedFree> abuf(
                    static_cast<std::byte*>(std::aligned_alloc(kDirectAlign, a_len)));
                if (abuf) {
                    bool failed = false;
                    const std::size_t got =
                        dfh.pread_some(a_off, {abuf.get(), a_len}, &failed);
                    if (!failed && a_off + got >= offset + length) {
                        st.bytes_read += got;
                        st.read_ops_bypassed++;
                        const std::byte* begin = abuf.get() + (offset - a_off);
                        return {begin, begin + length};
                    }
                }
            }
            // O_DIRECT unavailable or refused; fall back to buffered I/O.
        }
        std::vector<std::byte> buf(length);
        shard_fd(shard_id).pread_exact(offset, buf);
        st.bytes_read += length;
        return buf;
    }

    /// Decodes every chunk the plan group needs from one shard, coalescing
    /// reads of adjacent records, then hands (chunk, slices) pairs to `fn`.
    template <typename Fn>
    void process_shard(std::uint64_t shard_id, std::span<const ChunkRead> group,
                       const ReadOptions& ropts, IoStats& st, Fn&& fn) const {
        const ShardFooter& foot = footer(shard_id, st);

        struct Need {
            const ChunkRead* chunk_read;
            ShardSlot slot;
            std::shared_ptr<const DecodedChunk> decoded;
        };
        std::vector<Need> needs;
        needs.reserve(group.size());
        for (const auto& cr : group) {
            const std::uint64_t slot_idx = cr.chunk_id % man.chunks_per_shard;
            const ShardSlot slot = foot.slots[slot_idx];
            if (slot.empty())
                throw CorruptStore("chunk " + std::to_string(cr.chunk_id) + ": slot " +
                                   std::to_string(slot_idx) + " of shard " +
                                   std::to_string(shard_id) + " is empty");
            needs.push_back({&cr, slot, cache_get(cr.chunk_id)});
            if (needs.back().decoded) st.cache_hits++;
        }

        // Coalesce byte ranges of the chunks that still need I/O.
        struct Run {
            std::uint64_t offset = 0;
            std::uint64_t length = 0;
            std::vector<std::size_t> need_idx;
        };
        std::vector<Run> runs;
        for (std::size_t i = 0; i < needs.size(); ++i) {
            if (needs[i].decoded) continue;
            const ShardSlot& slot = needs[i].slot;
            if (!runs.empty() && runs.back().offset + runs.back().length == slot.offset) {
                runs.back().length += slot.nbytes;
            } else {
                runs.push_back({slot.offset, slot.nbytes, {}});
            }
            runs.back().need_idx.push_back(i);
        }

        for (const auto& run : runs) {
            const std::vector<std::byte> buf =
                read_payload(shard_id, run.offset, run.length, ropts.cache_bypass, st);
            for (const std::size_t i : run.need_idx) {
                Need& need = needs[i];
                const std::uint64_t rel = need.slot.offset - run.offset;
                std::shared_ptr<const DecodedChunk> decoded;
                try {
                    decoded = std::make_shared<const DecodedChunk>(decode_record(
                        man, need.chunk_read->chunk_id, {buf.data() + rel, need.slot.nbytes}));
                } catch (const CorruptStore& e) {
                    throw CorruptStore("chunk " + std::to_string(need.chunk_read->chunk_id) +
                                       " in shard " + std::to_string(shard_id) + ": " + e.what());
                }
                st.chunks_decoded++;
                if (decoded_rows(*decoded, man, need.chunk_read->chunk_id) !=
                    man.rows_in_chunk(need.chunk_read->chunk_id))
                    throw CorruptStore("chunk " + std::to_string(need.chunk_read->chunk_id) +
                                       ": decoded row count mismatch");
                cache_put(need.chunk_read->chunk_id, decoded);
                need.decoded = std::move(decoded);
            }
        }

        for (const Need& need : needs) fn(*need.chunk_read, *need.decoded);
    }

    template <typename Fn>
    void visit_plan(std::span<const RowRange> ranges, const ReadOptions& ropts, IoStats* stats,
                    Fn&& fn) const {
        const ReadPlan plan = plan_read(man, ranges);
        IoStats st;
        st.cache_bypass_requested = ropts.cache_bypass;
        std::size_t i = 0;
        while (i < plan.chunks.size()) {
            const std::uint64_t shard_id = plan.chunks[i].chunk_id / man.chunks_per_shard;
            std::size_t j = i;
            while (j < plan.chunks.size() &&
                   plan.chunks[j].chunk_id / man.chunks_per_shard == shard_id)
                ++j;
            process_shard(shard_id, std::span(plan.chunks).subspan(i, j - i), ropts, st, fn);
            i = j;
        }
        if (stats) *stats += st;
    }
};

StoreReader::StoreReader(std::filesystem::path root, ReaderOptions options)
    : impl_(std::make_unique<Impl>()) {
    impl_->root = std::move(root);
    impl_->opts = options;
    const auto manifest_path = impl_->root / kManifestFileName;
    if (!std::filesystem::exists(manifest_path))
        throw IoError("store '" + impl_->root.string() +
                      "': no manifest found (absent or unfinished store)");
    auto fh = detail::FileHandle::open_read(manifest_path);
    std::string text(fh.size(), '\0');
    fh.pread_exact(0, {reinterpret_cast<std::byte*>(text.data()), text.size()});
    impl_->man = StoreManifest::parse(text);
}

StoreReader::StoreReader(StoreReader&&) noexcept = default;
StoreReader& StoreReader::operator=(StoreReader&&) noexcept = default;
StoreReader::~StoreReader() = default;

const StoreManifest& StoreReader::manifest() const noexcept { return impl_->man; }
const std::filesystem::path& StoreReader::root() const noexcept { return impl_->root; }

void StoreReader::visit_rows_dense(std::span<const RowRange> ranges, const DenseVisitor& visit,
                                   IoStats* stats, const ReadOptions& options) const {
    const auto& man = impl_->man;
    if (man.layout != Layout::dense)
        throw InvalidArgument("visit_rows_dense on a csr store");
    const std::size_t row_bytes = man.n_var * value_size(man.value_dtype);
    impl_->visit_plan(ranges, options, stats,
                      [&](const ChunkRead& cr, const DecodedChunk& decoded) {
        const auto& values = std::get<std::vector<std::byte>>(decoded);
        for (const ChunkSlice& slice : cr.slices) {
            const std::uint64_t step =
                options.max_piece_rows ? options.max_piece_rows : slice.rows();
            for (std::uint64_t row = slice.within_start, out = slice.output_offset;
                 row < slice.within_end;) {
                const std::uint64_t n = std::min(step, slice.within_end - row);
                DensePiece piece;
                piece.output_offset = out;
                piece.n_rows = n;
                piece.n_var = man.n_var;
                piece.dtype = man.value_dtype;
                piece.values = {values.data() + row * row_bytes, n * row_bytes};
                visit(piece);
                row += n;
                out += n;
            }
        }
    });
}

void StoreReader::visit_rows_csr(std::span<const RowRange> ranges, const CsrVisitor& visit,
                                 IoStats* stats, const ReadOptions& options) const {
    const auto& man = impl_->man;
    if (man.layout != Layout::csr)
        throw InvalidArgument("visit_rows_csr on a dense store");
    const std::size_t vs = value_size(man.value_dtype);
    impl_->visit_plan(ranges, options, stats,
                      [&](const ChunkRead& cr, const DecodedChunk& decoded) {
        const auto& chunk = std::get<CsrBlock>(decoded);
        for (const ChunkSlice& slice : cr.slices) {
            const std::uint64_t step =
                options.max_piece_rows ? options.max_piece_rows : slice.rows();
            for (std::uint64_t row = slice.within_start, out = slice.output_offset;
                 row < slice.within_end;) {
                const std::uint64_t n = std::min(step, slice.within_end - row);
                const std::uint64_t lo = chunk.indptr[row];
                const std::uint64_t hi = chunk.indptr[row + n];
                CsrPiece piece;
                piece.output_offset = out;
                piece.n_rows = n;
                piece.n_var = man.n_var;
                piece.dtype = man.value_dtype;
                piece.indptr = {chunk.indptr.data() + row, n + 1};
                piece.indices = {chunk.indices.data() + lo, hi - lo};
                piece.data = {chunk.data.data() + lo * vs, (hi - lo) * vs};
                visit(piece);
                row += n;
                out += n;
            }
        }
    });
}

DenseBlock StoreReader::read_rows_dense(std::span<const RowRange> ranges, IoStats* stats,
                                        const ReadOptions& options) const {
    std::uint64_t total = 0;
    for (const auto& r : ranges) total += r.rows();
    DenseBlock out = DenseBlock::zeros(total, impl_->man.n_var, impl_->man.value_dtype);
    const std::size_t row_bytes = out.row_bytes();
    visit_rows_dense(ranges,
                     [&](const DensePiece& piece) {
                         std::memcpy(out.values.data() + piece.output_offset * row_bytes,
                                     piece.values.data(), piece.values.size());
                     },
                     stats, options);
    return out;
}

CsrBlock StoreReader::read_rows_csr(std::span<const RowRange> ranges, IoStats* stats,
                                    const ReadOptions& options) const {
    struct Fragment {
        std::uint64_t output_offset;
        CsrBlock rows;
    };
    std::vector<Fragment> fragments;
    visit_rows_csr(ranges,
                   [&](const CsrPiece& piece) {
                       CsrBlock frag = CsrBlock::empty(piece.n_var, piece.dtype);
                       frag.n_rows = piece.n_rows;
                       frag.indptr.resize(piece.n_rows + 1);
                       for (std::size_t i = 0; i <= piece.n_rows; ++i)
                           frag.indptr[i] = piece.indptr[i] - piece.indptr.front();
                       frag.indices.assign(piece.indices.begin(), piece.indices.end());
                       frag.data.assign(piece.data.begin(), piece.data.end());
                       fragments.push_back({piece.output_offset, std::move(frag)});
                   },
                   stats, options);
    std::sort(fragments.begin(), fragments.end(),
              [](const Fragment& a, const Fragment& b) { return a.output_offset < b.output_offset; });
    CsrBlock out = CsrBlock::empty(impl_->man.n_var, impl_->man.value_dtype);
    for (const auto& frag : fragments) out.append_rows(frag.rows, 0, frag.rows.n_rows);
    return out;
}

RowBlock StoreReader::read_rows(std::span<const RowRange> ranges, IoStats* stats,
                                const ReadOptions& options) const {
    if (impl_->man.layout == Layout::dense) return read_rows_dense(ranges, stats, options);
    return read_rows_csr(ranges, stats, options);
}

}  // namespace riffle
