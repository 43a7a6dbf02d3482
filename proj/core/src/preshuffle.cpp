#include "riffle/preshuffle.hpp"

#include <algorithm>
#include <numeric>
#include <optional>
#include <unordered_set>

#include "file_io.hpp"
#include "json.hpp"
#include "riffle/codec.hpp"
#include "riffle/error.hpp"
#include "riffle/rng.hpp"
#include "riffle/shard.hpp"

namespace riffle {

namespace {

constexpr std::size_t kProvRecordBytes = 12;  // u32 dataset_id + u64 source_row, LE

[[nodiscard]] std::filesystem::path provenance_dir(const std::filesystem::path& store_root) {
    return store_root / kProvenanceDirName;
}

// ----- provenance record array ----------------------------------------------

class ProvenanceWriter {
public:
    ProvenanceWriter(std::filesystem::path dir, std::uint64_t chunk_records,
                     std::uint64_t chunks_per_shard, Codec codec, ShuffleSidecarMeta meta)
        : dir_(std::move(dir)),
          chunk_records_(chunk_records),
          chunks_per_shard_(chunks_per_shard),
          codec_(codec),
          meta_(std::move(meta)) {
        std::error_code ec;
        std::filesystem::create_directories(dir_ / kShardDirName, ec);
        if (ec) throw IoError("cannot create '" + dir_.string() + "': " + ec.message());
    }

    void append(std::span<const ProvenanceRecord> records) {
        pending_.insert(pending_.end(), records.begin(), records.end());
        while (pending_.size() >= chunk_records_) emit_chunk(chunk_records_);
    }

    void finish() {
        if (!pending_.empty()) emit_chunk(pending_.size());
        if (shard_) {
            shard_->finalize();
            shard_.reset();
        }
        nlohmann::ordered_json j;
        j["rng"] = meta_.rng_name;
        j["seed"] = meta_.seed;
        j["block_rows"] = meta_.block_rows;
        j["buffer_rows"] = meta_.buffer_rows;
        const std::string text = j.dump(2) + "\n";
        auto f = detail::FileHandle::create_write(dir_ / kProvenanceMetaFileName);
        f.write_all({reinterpret_cast<const std::byte*>(text.data()), text.size()});
    }

private:
    void emit_chunk(std::size_t n) {
        std::vector<std::byte> record(n * kProvRecordBytes);
        for (std::size_t i = 0; i < n; ++i) {
            detail::write_le32(record.data() + i * kProvRecordBytes, pending_[i].dataset_id);
            detail::write_le64(record.data() + i * kProvRecordBytes + 4, pending_[i].source_row);
        }
        pending_.erase(pending_.begin(), pending_.begin() + static_cast<std::ptrdiff_t>(n));
        const auto encoded = codec_encode(codec_, record);
        if (!shard_) {
            const std::uint64_t shard_index = chunks_emitted_ / chunks_per_shard_;
            shard_.emplace(dir_ / kShardDirName / shard_file_name(shard_index), chunks_per_shard_);
        }
        shard_->append_chunk(encoded);
        ++chunks_emitted_;
        if (shard_->full()) {
            shard_->finalize();
            shard_.reset();
        }
    }

    std::filesystem::path dir_;
    std::uint64_t chunk_records_;
    std::uint64_t chunks_per_shard_;
    Codec codec_;
    ShuffleSidecarMeta meta_;
    std::vector<ProvenanceRecord> pending_;
    std::optional<ShardWriter> shard_;
    std::uint64_t chunks_emitted_ = 0;
};

// ----- column reprojection ----------------------------------------------------

void scatter_dense_row(std::span<const std::byte> member_row,
                       const std::vector<std::uint64_t>& col_map, std::size_t value_bytes,
                       std::span<std::byte> unified_row) {
    for (std::size_t c = 0; c < col_map.size(); ++c) {
        if (col_map[c] == kMissingColumn) continue;
        std::memcpy(unified_row.data() + col_map[c] * value_bytes,
                    member_row.data() + c * value_bytes, value_bytes);
    }
}

struct AsmCsrRow {
    std::vector<std::uint64_t> cols;
    std::vector<std::byte> vals;
};

AsmCsrRow remap_csr_row(std::span<const std::uint64_t> indices, std::span<const std::byte> data,
                        const std::vector<std::uint64_t>& col_map, bool identity,
                        std::size_t value_bytes) {
    AsmCsrRow row;
    if (identity) {
        row.cols.assign(indices.begin(), indices.end());
        row.vals.assign(data.begin(), data.end());
        return row;
    }
    std::vector<std::pair<std::uint64_t, std::size_t>> mapped;
    mapped.reserve(indices.size());
    for (std::size_t k = 0; k < indices.size(); ++k) {
        const std::uint64_t u = col_map[indices[k]];
        if (u != kMissingColumn) mapped.emplace_back(u, k);
    }
    std::sort(mapped.begin(), mapped.end());
    row.cols.reserve(mapped.size());
    row.vals.reserve(mapped.size() * value_bytes);
    for (const auto& [u, k] : mapped) {
        row.cols.push_back(u);
        row.vals.insert(row.vals.end(), data.begin() + static_cast<std::ptrdiff_t>(k * value_bytes),
                        data.begin() + static_cast<std::ptrdiff_t>((k + 1) * value_bytes));
    }
    return row;
}

void cap_violation(std::vector<std::string>& violations, bool& capped, std::string text) {
    constexpr std::size_t kMaxListed = 64;
    if (violations.size() < kMaxListed) {
        violations.push_back(std::move(text));
    } else if (!capped) {
        violations.push_back("(further violations suppressed)");
        capped = true;
    }
}

}  // namespace

// ----- plan_shuffle ------------------------------------------------------------

ShufflePlan plan_shuffle(std::uint64_t total_rows, std::uint64_t block_rows,
                         std::uint64_t buffer_rows, std::uint64_t seed) {
    if (block_rows == 0) throw InvalidArgument("plan_shuffle: block_rows must be >= 1");
    if (buffer_rows < block_rows)
        throw InvalidArgument("plan_shuffle: buffer_rows " + std::to_string(buffer_rows) +
                              " < block_rows " + std::to_string(block_rows));

    ShufflePlan plan;
    plan.seed = seed;
    plan.block_rows = block_rows;
    plan.buffer_rows = buffer_rows;
    plan.total_rows = total_rows;

    std::vector<std::uint64_t> ids(plan.block_count());
    std::iota(ids.begin(), ids.end(), 0);
    Rng(seed).stream(0).shuffle(std::span(ids));

    std::vector<std::uint64_t> round;
    std::uint64_t round_row_count = 0;
    for (const std::uint64_t id : ids) {
        const std::uint64_t rows = plan.block_range(id).rows();
        if (!round.empty() && round_row_count + rows > buffer_rows) {
            plan.rounds.push_back(std::move(round));
            round.clear();
            round_row_count = 0;
        }
        round.push_back(id);
        round_row_count += rows;
    }
    if (!round.empty()) plan.rounds.push_back(std::move(round));
    return plan;
}

// ----- run_shuffle --------------------------------------------------------------

StoreManifest run_shuffle(const DatasetCollection& collection, const ShufflePlan& plan,
                          const std::filesystem::path& out_path,
                          const ShuffleOutputConfig& out_config, ShuffleRunStats* stats) {
    if (collection.size() == 0) throw InvalidArgument("run_shuffle: empty collection");
    if (plan.total_rows != collection.total_rows())
        throw InvalidArgument("run_shuffle: plan covers " + std::to_string(plan.total_rows) +
                              " rows, collection holds " +
                              std::to_string(collection.total_rows()));
    if (std::filesystem::exists(out_path) && !std::filesystem::is_empty(out_path))
        throw InvalidArgument("run_shuffle: output path '" + out_path.string() +
                              "' is not fresh");

    const Layout layout = collection.layout();
    const ValueDtype vdt = collection.value_dtype();
    const std::size_t vs = value_size(vdt);
    const auto& unified = collection.unified_var_names();
    const std::size_t unified_nv = unified.size();
    const std::size_t unified_rb = unified_nv * vs;

    StoreManifest man;
    man.layout = layout;
    man.n_var = unified_nv;
    man.value_dtype = vdt;
    if (layout == Layout::csr)
        man.index_dtype = out_config.index_dtype ? *out_config.index_dtype
                                                 : *collection.store(0).manifest().index_dtype;
    man.chunk_rows = out_config.chunk_rows;
    man.chunks_per_shard = out_config.chunks_per_shard;
    man.codec = out_config.codec;
    man.var_names = unified;
    man.has_provenance = true;

    StoreWriter writer(out_path, man, {.defer_manifest = true});
    ProvenanceWriter prov(provenance_dir(out_path), out_config.chunk_rows,
                          out_config.chunks_per_shard, out_config.codec,
                          {std::string(Rng::kName), plan.seed, plan.block_rows, plan.buffer_rows});

    const Rng base(plan.seed);
    ShuffleRunStats st;
    const auto track_peak = [&st](std::uint64_t resident) {
        if (resident > st.peak_resident_rows) st.peak_resident_rows = resident;
    };

    struct Segment {
        std::size_t member;
        RowRange local;
        std::uint64_t assembly_pos;
    };

    for (std::size_t r = 0; r < plan.rounds.size(); ++r) {
        // Split the round's blocks into per-member segments, in block order.
        std::vector<Segment> segments;
        std::uint64_t round_rows = 0;
        for (const std::uint64_t block_id : plan.rounds[r]) {
            const RowRange g = plan.block_range(block_id);
            std::uint64_t row = g.start;
            while (row < g.end) {
                const MemberRow loc = collection.locate(row);
                const std::uint64_t member_end = collection.member_row_offset(loc.member) +
                                                 collection.store(loc.member).manifest().n_obs;
                const std::uint64_t stop = std::min<std::uint64_t>(g.end, member_end);
                segments.push_back(
                    {loc.member, {loc.local_row, loc.local_row + (stop - row)}, round_rows});
                round_rows += stop - row;
                row = stop;
            }
        }

        // Round assembly; provenance records parallel the assembly rows.
        std::vector<std::byte> arena;
        std::vector<AsmCsrRow> csr_rows;
        if (layout == Layout::dense)
            arena.assign(round_rows * unified_rb, std::byte{0});
        else
            csr_rows.resize(round_rows);
        track_peak(round_rows);

        std::vector<ProvenanceRecord> records(round_rows);
        for (const Segment& seg : segments) {
            for (std::uint64_t i = 0; i < seg.local.rows(); ++i)
                records[seg.assembly_pos + i] = {static_cast<std::uint32_t>(seg.member),
                                                 seg.local.start + i};
        }

        // Read one member at a time; all of its ranges go into a single
        // visit so each underlying chunk is decoded once per round.
        for (std::size_t member = 0; member < collection.size(); ++member) {
            struct ReqSpan {
                std::uint64_t req_offset;
                std::uint64_t assembly_pos;
            };
            std::vector<RowRange> ranges;
            std::vector<ReqSpan> req_spans;
            std::uint64_t req = 0;
            for (const Segment& seg : segments) {
                if (seg.member != member) continue;
                ranges.push_back(seg.local);
                req_spans.push_back({req, seg.assembly_pos});
                req += seg.local.rows();
            }
            if (ranges.empty()) continue;

            const auto assembly_row_of = [&](std::uint64_t piece_off) {
                auto it = std::upper_bound(req_spans.begin(), req_spans.end(), piece_off,
                                           [](std::uint64_t v, const ReqSpan& s) {
                                               return v < s.req_offset;
                                           });
                --it;
                return it->assembly_pos + (piece_off - it->req_offset);
            };

            const auto& col_map = collection.column_map(member);
            const bool identity = collection.identity_columns(member);
            ReadOptions ropts;
            ropts.max_piece_rows = plan.block_rows;

            if (layout == Layout::dense) {
                collection.store(member).visit_rows_dense(
                    ranges,
                    [&](const DensePiece& piece) {
                        track_peak(round_rows + piece.n_rows);
                        const std::uint64_t asm_row = assembly_row_of(piece.output_offset);
                        if (identity) {
                            std::memcpy(arena.data() + asm_row * unified_rb, piece.values.data(),
                                        piece.values.size());
                            return;
                        }
                        const std::size_t member_rb = piece.n_var * vs;
                        for (std::size_t i = 0; i < piece.n_rows; ++i)
                            scatter_dense_row(piece.values.subspan(i * member_rb, member_rb),
                                              col_map, vs,
                                              {arena.data() + (asm_row + i) * unified_rb,
                                               unified_rb});
                    },
                    &st.input_io, ropts);
            } else {
                collection.store(member).visit_rows_csr(
                    ranges,
                    [&](const CsrPiece& piece) {
                        track_peak(round_rows + piece.n_rows);
                        const std::uint64_t asm_row = assembly_row_of(piece.output_offset);
                        for (std::size_t i = 0; i < piece.n_rows; ++i)
                            csr_rows[asm_row + i] = remap_csr_row(
                                piece.row_indices(i), piece.row_data(i), col_map, identity, vs);
                    },
                    &st.input_io, ropts);
            }
        }

        // Uniform in-memory permutation, then emit in block-sized batches so
        // the gather staging stays within block_rows.
        std::vector<std::uint64_t> perm(round_rows);
        std::iota(perm.begin(), perm.end(), 0);
        base.stream(1 + r).shuffle(std::span(perm));

        for (std::uint64_t start = 0; start < round_rows;) {
            const std::uint64_t n = std::min<std::uint64_t>(plan.block_rows, round_rows - start);
            track_peak(round_rows + n);
            std::vector<ProvenanceRecord> batch_records(n);
            if (layout == Layout::dense) {
                DenseBlock batch = DenseBlock::zeros(n, unified_nv, vdt);
                for (std::uint64_t k = 0; k < n; ++k) {
                    const std::uint64_t src = perm[start + k];
                    std::memcpy(batch.values.data() + k * unified_rb,
                                arena.data() + src * unified_rb, unified_rb);
                    batch_records[k] = records[src];
                }
                writer.append(batch);
            } else {
                CsrBlock batch = CsrBlock::empty(unified_nv, vdt);
                batch.n_rows = n;
                for (std::uint64_t k = 0; k < n; ++k) {
                    const std::uint64_t src = perm[start + k];
                    const AsmCsrRow& row = csr_rows[src];
                    batch.indices.insert(batch.indices.end(), row.cols.begin(), row.cols.end());
                    batch.data.insert(batch.data.end(), row.vals.begin(), row.vals.end());
                    batch.indptr.push_back(batch.indices.size());
                    batch_records[k] = records[src];
                }
                writer.append(batch);
            }
            prov.append(batch_records);
            start += n;
        }

        st.rows_written += round_rows;
        st.rounds_executed++;
    }

    StoreManifest final_manifest = writer.finish();
    prov.finish();
    if (stats) *stats = st;
    return final_manifest;
}

// ----- ProvenanceReader ----------------------------------------------------------

ProvenanceReader::ProvenanceReader(const StoreReader& store) {
    parent_ = store.manifest();
    dir_ = provenance_dir(store.root());
    const auto meta_path = dir_ / kProvenanceMetaFileName;
    if (!parent_.has_provenance || !std::filesystem::exists(meta_path))
        throw InvalidArgument("store '" + store.root().string() +
                              "' has no provenance sidecar");
    auto fh = detail::FileHandle::open_read(meta_path);
    std::string text(fh.size(), '\0');
    fh.pread_exact(0, {reinterpret_cast<std::byte*>(text.data()), text.size()});
    try {
        const auto j = nlohmann::ordered_json::parse(text);
        meta_.rng_name = j.at("rng").get<std::string>();
        meta_.seed = j.at("seed").get<std::uint64_t>();
        meta_.block_rows = j.at("block_rows").get<std::uint64_t>();
        meta_.buffer_rows = j.at("buffer_rows").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw CorruptStore(std::string("provenance meta: ") + e.what());
    }
    count_ = parent_.n_obs;
}

std::vector<ProvenanceRecord> ProvenanceReader::read(std::span<const RowRange> ranges) const {
    // The sidecar shares the parent's chunk grid, so the row planner applies
    // unchanged to records.
    StoreManifest grid;
    grid.n_obs = count_;
    grid.chunk_rows = parent_.chunk_rows;
    grid.chunks_per_shard = parent_.chunks_per_shard;
    const ReadPlan plan = plan_read(grid, ranges);

    std::vector<ProvenanceRecord> out(plan.total_rows);
    std::uint64_t current_shard = kEmptyShardSlot;
    std::optional<ShardFooter> footer;
    std::optional<detail::FileHandle> fh;
    for (const ChunkRead& cr : plan.chunks) {
        const std::uint64_t shard_id = cr.chunk_id / parent_.chunks_per_shard;
        if (shard_id != current_shard) {
            const auto path = dir_ / kShardDirName / shard_file_name(shard_id);
            footer = ShardFooter::read(path, parent_.chunks_per_shard);
            fh = detail::FileHandle::open_read(path);
            current_shard = shard_id;
        }
        const ShardSlot slot = footer->slots[cr.chunk_id % parent_.chunks_per_shard];
        if (slot.empty())
            throw CorruptStore("provenance chunk " + std::to_string(cr.chunk_id) + " missing");
        std::vector<std::byte> encoded(slot.nbytes);
        fh->pread_exact(slot.offset, encoded);
        const std::uint64_t rows = grid.rows_in_chunk(cr.chunk_id);
        std::vector<std::byte> raw;
        try {
            raw = codec_decode(parent_.codec, encoded, rows * kProvRecordBytes);
        } catch (const CorruptStore& e) {
            throw CorruptStore("provenance chunk " + std::to_string(cr.chunk_id) + ": " +
                               e.what());
        }
        for (const ChunkSlice& slice : cr.slices) {
            for (std::uint64_t i = slice.within_start; i < slice.within_end; ++i) {
                const std::byte* rec = raw.data() + i * kProvRecordBytes;
                out[slice.output_offset + (i - slice.within_start)] = {
                    detail::read_le32(rec), detail::read_le64(rec + 4)};
            }
        }
    }
    return out;
}

std::vector<ProvenanceRecord> ProvenanceReader::read_all() const {
    if (count_ == 0) return {};
    const RowRange all{0, count_};
    return read({&all, 1});
}

// ----- verification ---------------------------------------------------------------

namespace {

/// Bijectivity of provenance records against per-dataset row counts. When
/// `known_counts` is empty, counts are inferred from the records themselves
/// (coverage must still be exactly 0..max).
void check_bijection(const std::vector<ProvenanceRecord>& records,
                     const std::vector<std::uint64_t>& known_counts,
                     std::vector<std::string>& violations, bool& capped) {
    std::vector<std::vector<char>> seen(known_counts.size());
    for (std::size_t d = 0; d < known_counts.size(); ++d)
        seen[d].assign(known_counts[d], 0);

    for (std::size_t i = 0; i < records.size(); ++i) {
        const ProvenanceRecord& rec = records[i];
        if (!known_counts.empty() && rec.dataset_id >= known_counts.size()) {
            cap_violation(violations, capped,
                          "output row " + std::to_string(i) + ": dataset_id " +
                              std::to_string(rec.dataset_id) + " out of range");
            continue;
        }
        if (rec.dataset_id >= seen.size()) seen.resize(rec.dataset_id + 1);
        auto& rows = seen[rec.dataset_id];
        if (!known_counts.empty() && rec.source_row >= known_counts[rec.dataset_id]) {
            cap_violation(violations, capped,
                          "output row " + std::to_string(i) + ": source row " +
                              std::to_string(rec.source_row) + " out of range for dataset " +
                              std::to_string(rec.dataset_id));
            continue;
        }
        if (rec.source_row >= rows.size()) rows.resize(rec.source_row + 1, 0);
        if (rows[rec.source_row]) {
            cap_violation(violations, capped,
                          "output row " + std::to_string(i) + ": duplicate source (dataset " +
                              std::to_string(rec.dataset_id) + ", row " +
                              std::to_string(rec.source_row) + ")");
            continue;
        }
        rows[rec.source_row] = 1;
    }
    for (std::size_t d = 0; d < seen.size(); ++d) {
        for (std::size_t s = 0; s < seen[d].size(); ++s) {
            if (!seen[d][s])
                cap_violation(violations, capped,
                              "dataset " + std::to_string(d) + " row " + std::to_string(s) +
                                  " never appears in the output");
        }
    }
}

std::vector<std::uint64_t> sample_distinct(std::uint64_t n, std::uint64_t k, Rng rng) {
    // Floyd's algorithm.
    std::unordered_set<std::uint64_t> chosen;
    for (std::uint64_t j = n - k; j < n; ++j) {
        const std::uint64_t t = rng.bounded(j + 1);
        if (!chosen.insert(t).second) chosen.insert(j);
    }
    std::vector<std::uint64_t> out(chosen.begin(), chosen.end());
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

VerifyReport verify_shuffle(const StoreReader& shuffled, const DatasetCollection& inputs,
                            std::uint64_t sample_rows, std::uint64_t seed) {
    VerifyReport report;
    bool capped = false;
    const StoreManifest& man = shuffled.manifest();

    const ProvenanceReader prov(shuffled);
    if (man.n_obs != inputs.total_rows()) {
        cap_violation(report.violations, capped,
                      "output has " + std::to_string(man.n_obs) + " rows, inputs hold " +
                          std::to_string(inputs.total_rows()));
        return report;
    }

    const std::vector<ProvenanceRecord> records = prov.read_all();
    std::vector<std::uint64_t> counts(inputs.size());
    for (std::size_t d = 0; d < inputs.size(); ++d) counts[d] = inputs.store(d).manifest().n_obs;
    check_bijection(records, counts, report.violations, capped);

    const std::uint64_t k = std::min<std::uint64_t>(sample_rows, man.n_obs);
    if (k == 0) return report;
    std::vector<std::uint64_t> sampled;
    if (k == man.n_obs) {
        sampled.resize(k);
        std::iota(sampled.begin(), sampled.end(), 0);
    } else {
        sampled = sample_distinct(man.n_obs, k, Rng(seed));
    }
    report.rows_sampled = k;

    const std::size_t vs = value_size(man.value_dtype);
    for (const std::uint64_t row : sampled) {
        const ProvenanceRecord rec = records[row];
        if (rec.dataset_id >= inputs.size() ||
            rec.source_row >= inputs.store(rec.dataset_id).manifest().n_obs)
            continue;  // already reported by the bijection check
        const RowRange out_range{row, row + 1};
        const RowRange src_range{rec.source_row, rec.source_row + 1};
        const auto& col_map = inputs.column_map(rec.dataset_id);
        const bool identity = inputs.identity_columns(rec.dataset_id);

        bool equal = true;
        if (man.layout == Layout::dense) {
            const DenseBlock out = shuffled.read_rows_dense({&out_range, 1});
            const DenseBlock src =
                inputs.store(rec.dataset_id).read_rows_dense({&src_range, 1});
            std::vector<std::byte> expected(man.n_var * vs, std::byte{0});
            scatter_dense_row(src.row(0), col_map, vs, expected);
            equal = std::equal(expected.begin(), expected.end(), out.values.begin(),
                               out.values.end());
        } else {
            const CsrBlock out = shuffled.read_rows_csr({&out_range, 1});
            const CsrBlock src = inputs.store(rec.dataset_id).read_rows_csr({&src_range, 1});
            const AsmCsrRow expected = remap_csr_row(
                std::span(src.indices), std::span(src.data), col_map, identity, vs);
            equal = out.indices == expected.cols && out.data == expected.vals;
        }
        if (!equal)
            cap_violation(report.violations, capped,
                          "output row " + std::to_string(row) + " differs from dataset " +
                              std::to_string(rec.dataset_id) + " row " +
                              std::to_string(rec.source_row));
    }
    return report;
}

VerifyReport verify_provenance_only(const StoreReader& shuffled) {
    VerifyReport report;
    bool capped = false;
    const ProvenanceReader prov(shuffled);
    const std::vector<ProvenanceRecord> records = prov.read_all();
    check_bijection(records, {}, report.violations, capped);
    return report;
}

}  // namespace riffle
