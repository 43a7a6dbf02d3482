#include "riffle/loader.hpp"

#include <algorithm>
#include <deque>
#include <future>
#include <numeric>
#include <string>

#include "riffle/error.hpp"
#include "riffle/rng.hpp"

namespace riffle {

namespace {

// Stream tags under the loader's seed: even tags drive epoch plans, odd
// tags drive buffer sampling, so the two never share a stream.
[[nodiscard]] std::uint64_t plan_stream_tag(std::uint64_t epoch) { return 2 * epoch; }
[[nodiscard]] std::uint64_t sample_stream_tag(std::uint64_t epoch) { return 2 * epoch + 1; }

struct FetchedBlock {
    RowBlock rows;
    std::uint64_t first_row = 0;
    IoStats stats;
};

/// Issues block reads in plan order with up to `depth` in flight. With
/// depth 0 reads happen synchronously in next(). Either way blocks are
/// delivered in plan order, so consumers see identical data.
class BlockPrefetcher {
public:
    BlockPrefetcher(const StoreReader& store, const EpochPlan& plan, std::uint32_t depth,
                    bool cache_bypass)
        : store_(store), plan_(plan), depth_(depth), cache_bypass_(cache_bypass) {
        top_up();
    }

    ~BlockPrefetcher() {
        for (auto& f : inflight_)
            if (f.valid()) f.wait();
    }

    [[nodiscard]] bool exhausted() const noexcept {
        return next_issue_ >= plan_.blocks.size() && inflight_.empty();
    }

    std::optional<FetchedBlock> next() {
        if (depth_ == 0) {
            if (next_issue_ >= plan_.blocks.size()) return std::nullopt;
            const std::size_t i = next_issue_++;
            return fetch_guarded(i);
        }
        if (inflight_.empty()) return std::nullopt;
        auto fut = std::move(inflight_.front());
        inflight_.pop_front();
        top_up();
        return fut.get();
    }

private:
    FetchedBlock fetch_guarded(std::size_t i) const {
        const RowRange range = plan_.blocks[i];
        try {
            FetchedBlock fb;
            ReadOptions opts;
            opts.cache_bypass = cache_bypass_;
            fb.rows = store_.read_rows({&range, 1}, &fb.stats, opts);
            fb.first_row = range.start;
            return fb;
        } catch (const Error& e) {
            throw IoError("fetch block [" + std::to_string(range.start) + ", " +
                          std::to_string(range.end) + "): " + e.what());
        }
    }

    void top_up() {
        while (inflight_.size() < depth_ && next_issue_ < plan_.blocks.size()) {
            const std::size_t i = next_issue_++;
            inflight_.push_back(
                std::async(std::launch::async, [this, i] { return fetch_guarded(i); }));
        }
    }

    const StoreReader& store_;
    const EpochPlan& plan_;
    std::uint32_t depth_;
    bool cache_bypass_;
    std::deque<std::future<FetchedBlock>> inflight_;
    std::size_t next_issue_ = 0;
};

struct DenseBuffer {
    std::size_t row_bytes = 0;
    std::vector<std::byte> arena;
    std::vector<std::uint64_t> gidx;

    [[nodiscard]] std::uint64_t occupancy() const noexcept { return gidx.size(); }

    void append(const DenseBlock& blk, std::uint64_t first_row) {
        arena.insert(arena.end(), blk.values.begin(), blk.values.end());
        for (std::size_t i = 0; i < blk.n_rows; ++i) gidx.push_back(first_row + i);
    }

    /// Moves slot j into the batch, backfilling it with the last slot.
    void take(std::size_t j, DenseBlock& batch, std::vector<std::uint64_t>& batch_idx) {
        batch.values.insert(batch.values.end(), arena.begin() + static_cast<std::ptrdiff_t>(j * row_bytes),
                            arena.begin() + static_cast<std::ptrdiff_t>((j + 1) * row_bytes));
        batch.n_rows++;
        batch_idx.push_back(gidx[j]);
        const std::size_t last = gidx.size() - 1;
        if (j != last) {
            std::memcpy(arena.data() + j * row_bytes, arena.data() + last * row_bytes, row_bytes);
            gidx[j] = gidx[last];
        }
        arena.resize(last * row_bytes);
        gidx.resize(last);
    }
};

struct CsrBufferRow {
    std::uint64_t gidx = 0;
    std::vector<std::uint64_t> cols;
    std::vector<std::byte> vals;
};

struct CsrBuffer {
    std::vector<CsrBufferRow> rows;

    [[nodiscard]] std::uint64_t occupancy() const noexcept { return rows.size(); }

    void append(const CsrBlock& blk, std::uint64_t first_row, std::size_t value_bytes) {
        for (std::size_t i = 0; i < blk.n_rows; ++i) {
            CsrBufferRow row;
            row.gidx = first_row + i;
            const std::uint64_t lo = blk.indptr[i];
            const std::uint64_t hi = blk.indptr[i + 1];
            row.cols.assign(blk.indices.begin() + static_cast<std::ptrdiff_t>(lo),
                            blk.indices.begin() + static_cast<std::ptrdiff_t>(hi));
            row.vals.assign(blk.data.begin() + static_cast<std::ptrdiff_t>(lo * value_bytes),
                            blk.data.begin() + static_cast<std::ptrdiff_t>(hi * value_bytes));
            rows.push_back(std::move(row));
        }
    }

    void take(std::size_t j, CsrBlock& batch, std::vector<std::uint64_t>& batch_idx) {
        CsrBufferRow row = std::move(rows[j]);
        if (j != rows.size() - 1) rows[j] = std::move(rows.back());
        rows.pop_back();
        batch.indices.insert(batch.indices.end(), row.cols.begin(), row.cols.end());
        batch.data.insert(batch.data.end(), row.vals.begin(), row.vals.end());
        batch.indptr.push_back(batch.indices.size());
        batch.n_rows++;
        batch_idx.push_back(row.gidx);
    }
};

}  // namespace

void LoaderConfig::validate() const {
    if (fetch_block_rows < 1)
        throw InvalidArgument("loader config: fetch_block_rows must be >= 1");
    if (buffer_capacity_rows < fetch_block_rows)
        throw InvalidArgument("loader config: buffer_capacity_rows " +
                              std::to_string(buffer_capacity_rows) + " < fetch_block_rows " +
                              std::to_string(fetch_block_rows));
    if (batch_rows < 1 || batch_rows > buffer_capacity_rows)
        throw InvalidArgument("loader config: batch_rows must satisfy 1 <= b <= B");
}

EpochPlan plan_epoch(std::uint64_t n_obs, const LoaderConfig& config, std::uint64_t epoch_index) {
    if (n_obs == 0) throw InvalidArgument("plan_epoch: n_obs must be >= 1");
    config.validate();
    EpochPlan plan;
    plan.epoch_index = epoch_index;
    const std::uint64_t f = config.fetch_block_rows;
    plan.blocks.reserve((n_obs + f - 1) / f);
    for (std::uint64_t start = 0; start < n_obs; start += f)
        plan.blocks.push_back({start, std::min(n_obs, start + f)});
    Rng(config.seed).stream(plan_stream_tag(epoch_index)).shuffle(std::span(plan.blocks));
    return plan;
}

struct BatchIterator::Impl {
    std::shared_ptr<const StoreReader> store;
    LoaderConfig cfg;
    std::uint64_t epoch;
    EpochPlan plan;
    Rng sample_rng;
    std::unique_ptr<BlockPrefetcher> prefetch;

    DenseBuffer dense;
    CsrBuffer csr;
    bool is_dense = true;
    std::size_t value_bytes = 0;

    LoaderCounters counters;
    std::uint64_t peak_buffer = 0;
    std::uint64_t batch_index = 0;
    bool filled = false;
    bool done = false;

    [[nodiscard]] std::uint64_t occupancy() const noexcept {
        return is_dense ? dense.occupancy() : csr.occupancy();
    }

    bool consume_next_block() {
        auto fb = prefetch->next();
        if (!fb) return false;
        if (is_dense)
            dense.append(std::get<DenseBlock>(fb->rows), fb->first_row);
        else
            csr.append(std::get<CsrBlock>(fb->rows), fb->first_row, value_bytes);
        counters.blocks_fetched++;
        counters.io += fb->stats;
        peak_buffer = std::max(peak_buffer, occupancy());
        return true;
    }

    void refill() {
        // Keep at least one whole block's room used: refetch while occupancy
        // sits below B - f and the plan has blocks left.
        while (occupancy() < cfg.buffer_capacity_rows - cfg.fetch_block_rows &&
               !prefetch->exhausted()) {
            if (!consume_next_block()) break;
        }
    }
};

BatchIterator::BatchIterator(std::shared_ptr<const StoreReader> store, LoaderConfig config,
                             std::uint64_t epoch_index)
    : impl_(std::make_unique<Impl>(Impl{.store = std::move(store),
                                        .cfg = config,
                                        .epoch = epoch_index,
                                        .plan = {},
                                        .sample_rng = Rng(config.seed).stream(
                                            sample_stream_tag(epoch_index)),
                                        .prefetch = nullptr,
                                        .dense = {},
                                        .csr = {},
                                        .is_dense = true,
                                        .value_bytes = 0})) {
    config.validate();
    const auto& man = impl_->store->manifest();
    impl_->plan = plan_epoch(man.n_obs, config, epoch_index);
    impl_->is_dense = man.layout == Layout::dense;
    impl_->value_bytes = value_size(man.value_dtype);
    impl_->dense.row_bytes = man.n_var * impl_->value_bytes;
    impl_->prefetch = std::make_unique<BlockPrefetcher>(*impl_->store, impl_->plan,
                                                        config.prefetch_depth,
                                                        config.cache_bypass);
}

BatchIterator::BatchIterator(BatchIterator&&) noexcept = default;
BatchIterator& BatchIterator::operator=(BatchIterator&&) noexcept = default;
BatchIterator::~BatchIterator() = default;

std::optional<MiniBatch> BatchIterator::next() {
    auto& im = *impl_;
    if (im.done) return std::nullopt;

    if (!im.filled) {
        while (im.occupancy() < im.cfg.buffer_capacity_rows && !im.prefetch->exhausted()) {
            if (!im.consume_next_block()) break;
        }
        im.filled = true;
    }

    MiniBatch batch;
    batch.epoch_index = im.epoch;
    DenseBlock dense_block;
    CsrBlock csr_block;
    const auto& man = im.store->manifest();
    if (im.is_dense) {
        dense_block.n_var = man.n_var;
        dense_block.dtype = man.value_dtype;
        dense_block.values.reserve(im.cfg.batch_rows * im.dense.row_bytes);
    } else {
        csr_block = CsrBlock::empty(man.n_var, man.value_dtype);
    }

    std::uint64_t collected = 0;
    while (collected < im.cfg.batch_rows) {
        if (im.occupancy() == 0) {
            if (!im.consume_next_block()) break;
            continue;
        }
        const std::size_t j = static_cast<std::size_t>(im.sample_rng.bounded(im.occupancy()));
        if (im.is_dense)
            im.dense.take(j, dense_block, batch.global_indices);
        else
            im.csr.take(j, csr_block, batch.global_indices);
        ++collected;
        im.refill();
    }

    if (collected == 0 || (collected < im.cfg.batch_rows && im.cfg.drop_last)) {
        im.done = true;
        return std::nullopt;
    }
    if (im.is_dense)
        batch.block = std::move(dense_block);
    else
        batch.block = std::move(csr_block);
    batch.batch_index = im.batch_index++;
    return batch;
}

const LoaderCounters& BatchIterator::counters() const noexcept { return impl_->counters; }
std::uint64_t BatchIterator::peak_buffer_rows() const noexcept { return impl_->peak_buffer; }
std::uint64_t BatchIterator::epoch_index() const noexcept { return impl_->epoch; }

BatchIterator open_epoch(std::shared_ptr<const StoreReader> store, const LoaderConfig& config,
                         std::uint64_t epoch_index) {
    return BatchIterator(std::move(store), config, epoch_index);
}

}  // namespace riffle
