#include "riffle/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <unordered_map>

#include "riffle/error.hpp"
#include "riffle/rng.hpp"

namespace riffle {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

struct EpochTotals {
    std::uint64_t rows = 0;
    std::uint64_t batches = 0;
    std::uint64_t blocks = 0;
    IoStats io;
};

EpochTotals drain_chunked_epoch(const StoreReader& store, const LoaderConfig& config,
                                std::uint32_t epoch) {
    EpochTotals totals;
    auto it = open_epoch(std::shared_ptr<const StoreReader>(&store, [](const StoreReader*) {}),
                         config, epoch);
    while (auto batch = it.next()) {
        totals.rows += batch->global_indices.size();
        totals.batches++;
    }
    totals.blocks = it.counters().blocks_fetched;
    totals.io = it.counters().io;
    return totals;
}

EpochTotals drain_row_random_epoch(const StoreReader& store, const LoaderConfig& config,
                                   std::uint32_t epoch) {
    // The per-observation baseline: a seeded random permutation of row ids,
    // one read call per row, rows grouped into batches only for accounting.
    EpochTotals totals;
    const std::uint64_t n = store.manifest().n_obs;
    std::vector<std::uint64_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng(config.seed).stream(2 * epoch).shuffle(std::span(order));

    const std::uint64_t emit_rows =
        config.drop_last ? n / config.batch_rows * config.batch_rows : n;
    ReadOptions opts;
    opts.cache_bypass = config.cache_bypass;
    for (std::uint64_t i = 0; i < emit_rows; ++i) {
        const RowRange range{order[i], order[i] + 1};
        const RowBlock row = store.read_rows({&range, 1}, &totals.io, opts);
        totals.rows += block_rows(row);
    }
    totals.batches = config.drop_last ? n / config.batch_rows
                                      : (n + config.batch_rows - 1) / config.batch_rows;
    return totals;
}

}  // namespace

void throughput_csv_header(std::ostream& os) {
    os << "samples_per_sec,batches_per_sec,bytes_read,read_ops,wall_seconds,epochs_measured,"
          "warmup_epochs_discarded,cache_mode\n";
}

void throughput_csv_row(std::ostream& os, const ThroughputReport& r) {
    os << format_double(r.samples_per_sec) << ',' << format_double(r.batches_per_sec) << ','
       << r.bytes_read << ',' << r.read_ops << ',' << format_double(r.wall_seconds) << ','
       << r.epochs_measured << ',' << r.warmup_epochs_discarded << ',' << to_string(r.cache_mode)
       << '\n';
}

void randomness_csv_header(std::ostream& os) {
    os << "window_rows,same_block_pair_rate,expected_rate,z_score,rank_correlation,"
          "chi_square_stat\n";
}

void randomness_csv_row(std::ostream& os, const RandomnessReport& r) {
    os << r.window_rows << ',' << format_double(r.same_block_pair_rate) << ','
       << format_double(r.expected_rate) << ',' << format_double(r.z_score) << ','
       << format_double(r.rank_correlation) << ',' << format_double(r.chi_square_stat) << '\n';
}

ThroughputReport run_throughput(const StoreReader& store, const LoaderConfig& config,
                                std::uint32_t epochs, std::uint32_t warmup, Strategy strategy,
                                CacheMode cache_mode) {
    if (epochs < 1) throw InvalidArgument("run_throughput: epochs must be >= 1");
    LoaderConfig cfg = config;
    cfg.cache_bypass = cache_mode == CacheMode::cold_best_effort;
    cfg.validate();

    ThroughputReport report;
    report.cache_mode = cache_mode;
    report.warmup_epochs_discarded = warmup;
    report.epochs_measured = epochs;
    bool honored = true;

    for (std::uint32_t e = 0; e < warmup + epochs; ++e) {
        const bool measured = e >= warmup;
        const auto t0 = Clock::now();
        const EpochTotals totals = strategy == Strategy::chunked
                                       ? drain_chunked_epoch(store, cfg, e)
                                       : drain_row_random_epoch(store, cfg, e);
        const double wall = seconds_since(t0);
        if (!measured) continue;
        report.wall_seconds += wall;
        report.rows_emitted += totals.rows;
        report.batches_emitted += totals.batches;
        report.blocks_fetched += totals.blocks;
        report.bytes_read += totals.io.bytes_read;
        report.read_ops += totals.io.read_ops;
        honored = honored && totals.io.cache_bypass_honored();
    }
    report.cache_bypass_honored = cfg.cache_bypass && honored;
    if (report.wall_seconds > 0) {
        report.samples_per_sec = static_cast<double>(report.rows_emitted) / report.wall_seconds;
        report.batches_per_sec =
            static_cast<double>(report.batches_emitted) / report.wall_seconds;
    }
    return report;
}

double same_block_pair_rate(std::span<const std::uint64_t> stream, std::uint64_t block_rows,
                            std::uint64_t window_rows) {
    if (block_rows == 0) throw InvalidArgument("same_block_pair_rate: block_rows must be >= 1");
    const std::uint64_t n = stream.size();
    if (window_rows < 2 || n < window_rows)
        throw InvalidArgument("same_block_pair_rate: need stream length >= window_rows >= 2");
    if (block_rows == 1) return 0.0;

    const double pairs_per_window =
        static_cast<double>(window_rows) * static_cast<double>(window_rows - 1) / 2.0;
    std::unordered_map<std::uint64_t, std::uint64_t> counts;
    double rate_sum = 0;
    std::uint64_t windows = 0;
    for (std::uint64_t start = 0; start + window_rows <= n; start += window_rows) {
        counts.clear();
        std::uint64_t same_pairs = 0;
        for (std::uint64_t i = start; i < start + window_rows; ++i) {
            const std::uint64_t block = stream[i] / block_rows;
            same_pairs += counts[block]++;
        }
        rate_sum += static_cast<double>(same_pairs) / pairs_per_window;
        ++windows;
    }
    return rate_sum / static_cast<double>(windows);
}

RandomnessReport randomness_report(std::span<const std::uint64_t> stream,
                                   std::uint64_t block_rows, std::uint64_t window_rows,
                                   const RandomnessOptions& options) {
    const std::uint64_t n = stream.size();
    RandomnessReport report;
    report.window_rows = window_rows;
    report.same_block_pair_rate = same_block_pair_rate(stream, block_rows, window_rows);
    report.expected_rate =
        block_rows > 1 && n > 1
            ? static_cast<double>(block_rows - 1) / static_cast<double>(n - 1)
            : 0.0;

    // z-score denominator from a Monte-Carlo ensemble of uniform
    // permutations of the same length (the windows are drawn from a finite
    // permutation, so the null is hypergeometric, not binomial).
    if (options.null_trials > 1 && block_rows > 1) {
        std::vector<std::uint64_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        const Rng base(options.seed);
        double sum = 0, sum_sq = 0;
        for (std::uint64_t t = 0; t < options.null_trials; ++t) {
            base.stream(t).shuffle(std::span(perm));
            const double r = same_block_pair_rate(perm, block_rows, window_rows);
            sum += r;
            sum_sq += r * r;
        }
        const double trials = static_cast<double>(options.null_trials);
        const double mean = sum / trials;
        const double var = std::max(0.0, (sum_sq - trials * mean * mean) / (trials - 1));
        const double sigma = std::sqrt(var);
        report.z_score =
            sigma > 0 ? (report.same_block_pair_rate - report.expected_rate) / sigma : 0.0;
    }

    // Spearman rank correlation between emission position and source index;
    // ties take their first-seen order.
    {
        std::vector<std::uint64_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::uint64_t a, std::uint64_t b) {
            return stream[a] < stream[b];
        });
        std::vector<double> rank(n);
        for (std::uint64_t r = 0; r < n; ++r) rank[order[r]] = static_cast<double>(r);
        const double mean = static_cast<double>(n - 1) / 2.0;
        double cov = 0, var_pos = 0, var_rank = 0;
        for (std::uint64_t i = 0; i < n; ++i) {
            const double dp = static_cast<double>(i) - mean;
            const double dr = rank[i] - mean;
            cov += dp * dr;
            var_pos += dp * dp;
            var_rank += dr * dr;
        }
        report.rank_correlation =
            var_pos > 0 && var_rank > 0 ? cov / std::sqrt(var_pos * var_rank) : 0.0;
    }

    // Chi-square over the source-decile composition of consecutive windows.
    {
        const std::uint64_t span = *std::max_element(stream.begin(), stream.end()) + 1;
        double chi2 = 0;
        for (std::uint64_t start = 0; start + window_rows <= n; start += window_rows) {
            std::array<std::uint64_t, 10> counts{};
            for (std::uint64_t i = start; i < start + window_rows; ++i) {
                const std::uint64_t d = std::min<std::uint64_t>(9, stream[i] * 10 / span);
                counts[d]++;
            }
            const double expected = static_cast<double>(window_rows) / 10.0;
            for (const std::uint64_t c : counts) {
                const double diff = static_cast<double>(c) - expected;
                chi2 += diff * diff / expected;
            }
        }
        report.chi_square_stat = chi2;
    }
    return report;
}

std::vector<SweepRow> sweep(const StoreReader& store, SweepParameter parameter,
                            std::span<const std::uint64_t> values,
                            const LoaderConfig& fixed_config, std::uint32_t epochs,
                            std::uint32_t warmup, Strategy strategy, CacheMode cache_mode) {
    if (values.empty()) throw InvalidArgument("sweep: values must be nonempty");
    std::vector<SweepRow> rows;
    rows.reserve(values.size());
    for (const std::uint64_t value : values) {
        SweepRow row;
        row.value = value;
        LoaderConfig cfg = fixed_config;
        switch (parameter) {
            case SweepParameter::batch_rows: cfg.batch_rows = value; break;
            case SweepParameter::fetch_block_rows: cfg.fetch_block_rows = value; break;
            case SweepParameter::buffer_capacity_rows: cfg.buffer_capacity_rows = value; break;
        }
        try {
            cfg.validate();
            row.report = run_throughput(store, cfg, epochs, warmup, strategy, cache_mode);
        } catch (const InvalidArgument& e) {
            row.error = e.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace riffle
