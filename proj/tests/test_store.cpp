#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "riffle/block.hpp"
#include "riffle/chunking.hpp"
#include "riffle/codec.hpp"
#include "riffle/error.hpp"
#include "riffle/manifest.hpp"
#include "riffle/read_plan.hpp"
#include "riffle/rng.hpp"
#include "riffle/shard.hpp"
#include "riffle/store.hpp"
#include "test_support.hpp"

using namespace riffle;
using riffle::testing::TempDir;
using riffle::testing::make_dense;

namespace {

StoreManifest dense_manifest(std::uint64_t n_var, std::uint64_t chunk_rows,
                             std::uint64_t chunks_per_shard, Codec codec = Codec::none,
                             ValueDtype dtype = ValueDtype::f32) {
    StoreManifest m;
    m.layout = Layout::dense;
    m.n_var = n_var;
    m.value_dtype = dtype;
    m.chunk_rows = chunk_rows;
    m.chunks_per_shard = chunks_per_shard;
    m.codec = codec;
    for (std::uint64_t c = 0; c < n_var; ++c) m.var_names.push_back("v" + std::to_string(c));
    return m;
}

StoreManifest csr_manifest(std::uint64_t n_var, std::uint64_t chunk_rows,
                           std::uint64_t chunks_per_shard, Codec codec = Codec::none,
                           ValueDtype dtype = ValueDtype::f32,
                           IndexDtype idt = IndexDtype::u32) {
    StoreManifest m = dense_manifest(n_var, chunk_rows, chunks_per_shard, codec, dtype);
    m.layout = Layout::csr;
    m.index_dtype = idt;
    return m;
}

/// Store whose row r is filled with the value r in every column.
std::filesystem::path make_row_identity_store(const TempDir& dir, std::uint64_t n_obs,
                                              std::uint64_t n_var, std::uint64_t chunk_rows,
                                              std::uint64_t chunks_per_shard,
                                              Codec codec = Codec::none) {
    const auto path = dir / "store";
    StoreWriter w(path, dense_manifest(n_var, chunk_rows, chunks_per_shard, codec));
    w.append(make_dense(n_obs, n_var, ValueDtype::f32,
                        [](std::size_t r, std::size_t) { return static_cast<double>(r); }));
    w.finish();
    return path;
}

}  // namespace

TEST_CASE("manifest round-trips byte-identically") {
    StoreManifest m = csr_manifest(3, 4, 128, Codec::deflate, ValueDtype::u8, IndexDtype::u64);
    m.n_obs = 17;
    m.has_provenance = true;
    const std::string once = m.serialize();
    const StoreManifest parsed = StoreManifest::parse(once);
    CHECK(parsed == m);
    CHECK(parsed.serialize() == once);
}

TEST_CASE("manifest validation") {
    CHECK_THROWS_AS(dense_manifest(2, 0, 4).validate(), InvalidArgument);
    CHECK_THROWS_AS(dense_manifest(2, 4, 0).validate(), InvalidArgument);

    StoreManifest bad_names = dense_manifest(2, 4, 4);
    bad_names.var_names.pop_back();
    CHECK_THROWS_AS(bad_names.validate(), InvalidArgument);

    StoreManifest dense_with_index = dense_manifest(2, 4, 4);
    dense_with_index.index_dtype = IndexDtype::u32;
    CHECK_THROWS_AS(dense_with_index.validate(), InvalidArgument);

    StoreManifest csr_missing_index = csr_manifest(2, 4, 4);
    csr_missing_index.index_dtype.reset();
    CHECK_THROWS_AS(csr_missing_index.validate(), InvalidArgument);
}

TEST_CASE("chunk grid arithmetic") {
    StoreManifest m = dense_manifest(1, 4, 128);
    m.n_obs = 10;
    CHECK(m.chunk_count() == 3);
    CHECK(m.rows_in_chunk(0) == 4);
    CHECK(m.rows_in_chunk(2) == 2);
    CHECK(m.shard_count() == 1);
    // The dense genotype configuration: chunks of 4 rows, shards of 512.
    CHECK(m.shard_capacity_rows() == 512);
}

TEST_CASE("create store then open returns the same manifest") {
    TempDir dir;
    const auto path = dir / "store";
    StoreWriter w(path, dense_manifest(2, 4, 128));
    const StoreManifest written = w.finish();
    CHECK(written.shard_capacity_rows() == 512);

    StoreReader r(path);
    CHECK(r.manifest() == written);
    CHECK(r.manifest().n_obs == 0);
}

TEST_CASE("create refuses invalid geometry and clobbering") {
    TempDir dir;
    CHECK_THROWS_AS(StoreWriter(dir / "a", dense_manifest(2, 0, 4)), InvalidArgument);
    CHECK_THROWS_AS(StoreWriter(dir / "b", dense_manifest(2, 4, 0)), InvalidArgument);

    StoreWriter w(dir / "c", dense_manifest(2, 4, 4));
    w.finish();
    CHECK_THROWS_AS(StoreWriter(dir / "c", dense_manifest(2, 4, 4)), InvalidArgument);
}

TEST_CASE("deferred manifest appears only on finish") {
    TempDir dir;
    const auto path = dir / "store";
    StoreWriter w(path, dense_manifest(2, 4, 4), {.defer_manifest = true});
    w.append(make_dense(3, 2, ValueDtype::f32, [](std::size_t r, std::size_t c) {
        return static_cast<double>(r + c);
    }));
    CHECK(!std::filesystem::exists(path / "manifest.json"));
    CHECK_THROWS_AS(StoreReader{path}, IoError);
    w.finish();
    CHECK(std::filesystem::exists(path / "manifest.json"));
    CHECK(StoreReader(path).manifest().n_obs == 3);
}

TEST_CASE("append splits rows across chunk boundaries") {
    TempDir dir;
    const auto path = dir / "store";
    StoreWriter w(path, dense_manifest(1, 4, 128));
    const auto block = make_dense(10, 1, ValueDtype::f32,
                                  [](std::size_t r, std::size_t) { return double(r); });
    CHECK(w.append(block) == 10);
    const StoreManifest man = w.finish();
    CHECK(man.n_obs == 10);
    CHECK(man.chunk_count() == 3);

    // Chunks 4, 4, 2: the shard footer must show exactly three records.
    const ShardFooter footer = ShardFooter::read(path / "shards" / "s00000000.bin", 128);
    CHECK(footer.chunks_present() == 3);
    CHECK(footer.slots[0].nbytes == 4 * 4);
    CHECK(footer.slots[2].nbytes == 2 * 4);
}

TEST_CASE("two appends read back as their concatenation") {
    TempDir dir;
    const auto path = dir / "store";
    const auto first = make_dense(6, 3, ValueDtype::f32, [](std::size_t r, std::size_t c) {
        return static_cast<double>(10 * r + c);
    });
    const auto second = make_dense(6, 3, ValueDtype::f32, [](std::size_t r, std::size_t c) {
        return static_cast<double>(1000 + 10 * r + c);
    });

    // In-memory concatenation oracle.
    DenseBlock oracle = first;
    oracle.append_rows(second, 0, second.n_rows);

    StoreWriter w(path, dense_manifest(3, 4, 128));
    w.append(first);
    w.append(second);
    const StoreManifest man = w.finish();
    CHECK(man.n_obs == 12);
    CHECK(man.chunk_count() == 3);  // chunks 4, 4, 4

    StoreReader r(path);
    const RowRange all{0, 12};
    CHECK(r.read_rows_dense({&all, 1}) == oracle);
}

TEST_CASE("append rejects mismatched blocks") {
    TempDir dir;
    StoreWriter w(dir / "store", csr_manifest(3, 4, 4));

    CsrBlock bad = CsrBlock::empty(3, ValueDtype::f32);
    bad.n_rows = 1;
    bad.indices = {3};  // >= n_var
    bad.data.resize(4);
    bad.indptr = {0, 1};
    CHECK_THROWS_AS(w.append(bad), InvalidArgument);

    CHECK_THROWS_AS(w.append(DenseBlock::zeros(1, 3, ValueDtype::f32)), InvalidArgument);

    CsrBlock narrow = CsrBlock::empty(2, ValueDtype::f32);
    narrow.n_rows = 1;
    narrow.indptr = {0, 0};
    CHECK_THROWS_AS(w.append(narrow), InvalidArgument);
}

TEST_CASE("plan_read touches exactly the intersected chunks") {
    StoreManifest m = dense_manifest(1, 3, 16);
    m.n_obs = 9;

    SUBCASE("two ranges, two chunks") {
        const std::vector<RowRange> ranges{{0, 2}, {7, 8}};
        const ReadPlan plan = plan_read(m, ranges);
        REQUIRE(plan.chunks.size() == 2);
        CHECK(plan.chunks[0].chunk_id == 0);
        CHECK(plan.chunks[1].chunk_id == 2);
        CHECK(plan.total_rows == 3);
    }

    SUBCASE("one range straddling a chunk boundary") {
        const std::vector<RowRange> ranges{{2, 5}};
        const ReadPlan plan = plan_read(m, ranges);
        REQUIRE(plan.chunks.size() == 2);
        CHECK(plan.chunks[0].chunk_id == 0);
        REQUIRE(plan.chunks[0].slices.size() == 1);
        CHECK(plan.chunks[0].slices[0] == ChunkSlice{2, 3, 0});
        CHECK(plan.chunks[1].chunk_id == 1);
        REQUIRE(plan.chunks[1].slices.size() == 1);
        CHECK(plan.chunks[1].slices[0] == ChunkSlice{0, 2, 1});
    }

    SUBCASE("two disjoint ranges inside one chunk stay one chunk read") {
        StoreManifest wide = dense_manifest(1, 16, 16);
        wide.n_obs = 16;
        const std::vector<RowRange> ranges{{0, 1}, {4, 5}};
        const ReadPlan plan = plan_read(wide, ranges);
        REQUIRE(plan.chunks.size() == 1);
        CHECK(plan.chunks[0].slices.size() == 2);
    }

    SUBCASE("rejects overlap and out-of-bounds") {
        CHECK_THROWS_AS(plan_read(m, std::vector<RowRange>{{0, 3}, {2, 4}}), InvalidArgument);
        CHECK_THROWS_AS(plan_read(m, std::vector<RowRange>{{5, 10}}), InvalidArgument);
        CHECK_THROWS_AS(plan_read(m, std::vector<RowRange>{{3, 3}}), InvalidArgument);
    }
}

TEST_CASE("random disjoint range reads match the per-row oracle") {
    TempDir dir;
    const std::uint64_t n_obs = 10000;
    const auto path = make_row_identity_store(dir, n_obs, 2, 7, 5);
    StoreReader r(path);
    Rng rng(7);

    for (int rep = 0; rep < 20; ++rep) {
        // Draw up to 100 disjoint ranges by splitting a sorted sample.
        std::vector<std::uint64_t> cuts;
        for (int i = 0; i < 200; ++i) cuts.push_back(rng.bounded(n_obs + 1));
        std::sort(cuts.begin(), cuts.end());
        cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
        std::vector<RowRange> ranges;
        for (std::size_t i = 0; i + 1 < cuts.size() && ranges.size() < 100; i += 2)
            if (cuts[i] < cuts[i + 1]) ranges.push_back({cuts[i], cuts[i + 1]});
        if (ranges.empty()) continue;
        // Present them unsorted.
        Rng(rep).shuffle(std::span(ranges));

        IoStats st;
        const DenseBlock got = r.read_rows_dense(ranges, &st);

        DenseBlock oracle;
        for (const RowRange& range : ranges)
            for (std::uint64_t row = range.start; row < range.end; ++row) {
                const RowRange one{row, row + 1};
                oracle.append_rows(r.read_rows_dense({&one, 1}), 0, 1);
            }
        CHECK(got == oracle);

        const ReadPlan plan = plan_read(r.manifest(), ranges);
        CHECK(st.chunks_decoded == plan.chunks.size());
        CHECK(st.read_ops <= plan.chunks.size());
    }
}

TEST_CASE("row-identity store reads the right values") {
    TempDir dir;
    const auto path = make_row_identity_store(dir, 10, 2, 4, 128);
    StoreReader r(path);
    const RowRange range{2, 5};
    const DenseBlock got = r.read_rows_dense({&range, 1});
    REQUIRE(got.n_rows == 3);
    for (std::size_t i = 0; i < 3; ++i) CHECK(got.get(i, 0) == double(2 + i));
}

TEST_CASE("csr range reads match the densified oracle") {
    TempDir dir;
    const auto path = dir / "store";
    const std::uint64_t n_obs = 500;

    Rng rng(11);
    DenseBlock dense_all = riffle::testing::random_dense(n_obs, 20, ValueDtype::f64, 0.3, rng);

    StoreWriter w(path, csr_manifest(20, 7, 3, Codec::deflate, ValueDtype::f64, IndexDtype::u32));
    w.append(to_csr(dense_all));
    w.finish();

    StoreReader r(path);
    for (int rep = 0; rep < 10; ++rep) {
        const std::uint64_t a = rng.bounded(n_obs);
        const std::uint64_t b = a + 1 + rng.bounded(n_obs - a);
        std::vector<RowRange> ranges{{a, b}};
        const CsrBlock got = r.read_rows_csr(ranges);
        const DenseBlock densified = to_dense(got);
        for (std::uint64_t i = 0; i < b - a; ++i)
            for (std::size_t c = 0; c < 20; ++c)
                CHECK(densified.get(i, c) == dense_all.get(a + i, c));
    }
}

TEST_CASE("round-trip across layouts, dtypes and codecs") {
    Rng rng(23);
    for (const Layout layout : {Layout::dense, Layout::csr}) {
        for (const Codec codec : {Codec::none, Codec::deflate}) {
            for (const ValueDtype dtype :
                 {ValueDtype::f32, ValueDtype::f64, ValueDtype::i32, ValueDtype::u8}) {
                TempDir dir;
                const auto path = dir / "store";
                const std::uint64_t chunk_rows = 1 + rng.bounded(9);
                const std::uint64_t cps = 1 + rng.bounded(5);
                StoreManifest man = layout == Layout::dense
                                        ? dense_manifest(5, chunk_rows, cps, codec, dtype)
                                        : csr_manifest(5, chunk_rows, cps, codec, dtype,
                                                       rng.bounded(2) ? IndexDtype::u32
                                                                      : IndexDtype::u64);
                StoreWriter w(path, man);
                DenseBlock oracle;
                for (int append = 0; append < 4; ++append) {
                    const std::uint64_t rows = 1 + rng.bounded(40);
                    DenseBlock block = riffle::testing::random_dense(rows, 5, dtype, 0.4, rng);
                    oracle.append_rows(block, 0, rows);
                    if (layout == Layout::dense)
                        w.append(block);
                    else
                        w.append(to_csr(block));
                }
                const StoreManifest finished = w.finish();
                CHECK(finished.n_obs == oracle.n_rows);

                StoreReader r(path);
                const RowRange all{0, finished.n_obs};
                if (layout == Layout::dense) {
                    CHECK(r.read_rows_dense({&all, 1}) == oracle);
                } else {
                    CHECK(to_dense(r.read_rows_csr({&all, 1})) == oracle);
                }
            }
        }
    }
}

TEST_CASE("to_dense and to_csr") {
    SUBCASE("csr definition example") {
        CsrBlock csr = CsrBlock::empty(3, ValueDtype::f64);
        csr.n_rows = 3;
        csr.indptr = {0, 1, 1, 3};
        csr.indices = {2, 0, 1};
        csr.data.resize(3 * 8);
        scalar_set(csr.data, ValueDtype::f64, 0, 5);
        scalar_set(csr.data, ValueDtype::f64, 1, 7);
        scalar_set(csr.data, ValueDtype::f64, 2, 9);

        const DenseBlock dense = to_dense(csr);
        const DenseBlock expected = make_dense(3, 3, ValueDtype::f64,
                                               [](std::size_t r, std::size_t c) {
                                                   if (r == 0 && c == 2) return 5.0;
                                                   if (r == 2 && c == 0) return 7.0;
                                                   if (r == 2 && c == 1) return 9.0;
                                                   return 0.0;
                                               });
        CHECK(dense == expected);
    }

    SUBCASE("zero matrix compresses to empty csr") {
        const CsrBlock csr = to_csr(DenseBlock::zeros(4, 3, ValueDtype::f32));
        CHECK(csr.nnz() == 0);
        CHECK(csr.indptr == std::vector<std::uint64_t>{0, 0, 0, 0, 0});
        CHECK(csr.indices.empty());
        CHECK(csr.data.empty());
    }

    SUBCASE("round-trip property on random blocks") {
        Rng rng(5);
        for (int rep = 0; rep < 10; ++rep) {
            const DenseBlock x =
                riffle::testing::random_dense(50, 20, ValueDtype::f32, 0.3, rng);
            CHECK(to_dense(to_csr(x)) == x);
        }
    }
}

TEST_CASE("csr block invariants are enforced") {
    CsrBlock b = CsrBlock::empty(4, ValueDtype::f32);
    b.n_rows = 2;
    b.indptr = {0, 2, 3};
    b.indices = {1, 1, 0};  // duplicate column in row 0
    b.data.resize(3 * 4);
    CHECK_THROWS_AS(b.validate(), InvalidArgument);
    b.indices = {0, 1, 0};
    b.validate();
    b.indptr = {0, 3, 2};  // decreasing
    CHECK_THROWS_AS(b.validate(), InvalidArgument);
}

TEST_CASE("truncated shard is detected, not misread") {
    TempDir dir;
    const auto path = make_row_identity_store(dir, 20, 2, 4, 8);
    const auto shard = path / "shards" / "s00000000.bin";
    const auto size = std::filesystem::file_size(shard);
    std::filesystem::resize_file(shard, size - 9);

    StoreReader r(path);
    const RowRange all{0, 20};
    CHECK_THROWS_AS((void)r.read_rows_dense({&all, 1}), CorruptStore);
}

TEST_CASE("corrupt deflate chunk reports the chunk id") {
    TempDir dir;
    const auto path = make_row_identity_store(dir, 20, 2, 4, 8, Codec::deflate);
    const auto shard = path / "shards" / "s00000000.bin";

    // Flip bytes in the middle of the payload area (chunk records).
    {
        std::fstream f(shard, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(6);
        const char junk[4] = {0x13, 0x37, 0x13, 0x37};
        f.write(junk, 4);
    }
    StoreReader r(path);
    const RowRange all{0, 20};
    try {
        (void)r.read_rows_dense({&all, 1});
        FAIL("expected CorruptStore");
    } catch (const CorruptStore& e) {
        CHECK(std::string(e.what()).find("chunk") != std::string::npos);
    }
}

TEST_CASE("cache_bypass changes io accounting at most, never data") {
    TempDir dir;
    const auto path = make_row_identity_store(dir, 1000, 8, 16, 4);
    StoreReader r(path);
    const std::vector<RowRange> ranges{{10, 200}, {512, 700}};

    IoStats plain_stats, bypass_stats;
    const DenseBlock plain = r.read_rows_dense(ranges, &plain_stats, {.cache_bypass = false});
    const DenseBlock bypass = r.read_rows_dense(ranges, &bypass_stats, {.cache_bypass = true});
    CHECK(plain == bypass);
    CHECK(!plain_stats.cache_bypass_requested);
    CHECK(bypass_stats.cache_bypass_requested);
    CHECK(bypass_stats.read_ops == plain_stats.read_ops);
    // Whether bypass was honored is host-dependent; both outcomes are valid.
}

TEST_CASE("decoded-chunk cache serves repeat reads without new io") {
    TempDir dir;
    const auto path = make_row_identity_store(dir, 64, 2, 8, 4);
    StoreReader r(path, {.chunk_cache_chunks = 16});
    const RowRange range{3, 11};

    IoStats first, second;
    const DenseBlock a = r.read_rows_dense({&range, 1}, &first);
    const DenseBlock b = r.read_rows_dense({&range, 1}, &second);
    CHECK(a == b);
    CHECK(first.read_ops > 0);
    CHECK(second.read_ops == 0);
    CHECK(second.cache_hits == 2);
}

TEST_CASE("codec round trip and corruption detection") {
    Rng rng(99);
    std::vector<std::byte> raw(10000);
    for (auto& byte : raw) byte = static_cast<std::byte>(rng.bounded(7));  // compressible

    const auto encoded = codec_encode(Codec::deflate, raw);
    CHECK(encoded.size() < raw.size());
    CHECK(codec_decode(Codec::deflate, encoded, raw.size()) == raw);
    CHECK(codec_decode_any(Codec::deflate, encoded, 16) == raw);

    CHECK_THROWS_AS((void)codec_decode(Codec::deflate, encoded, raw.size() - 1), CorruptStore);
    auto mangled = encoded;
    mangled.resize(mangled.size() / 2);
    CHECK_THROWS_AS((void)codec_decode(Codec::deflate, mangled, raw.size()), CorruptStore);

    const std::vector<std::byte> empty;
    CHECK(codec_decode(Codec::deflate, codec_encode(Codec::deflate, empty), 0).empty());
}

TEST_CASE("chunking suggestions follow the element-count rule") {
    CHECK(suggest_chunking_csr(1ull << 21, 512).chunk_rows == 4096);
    CHECK(suggest_chunking_csr(1, 512).chunk_rows == 1);
    const auto dense = suggest_chunking_dense(1ull << 21, 1ull << 19);
    CHECK(dense.chunk_rows == 4);
    CHECK(dense.chunks_per_shard == 128);
    CHECK_THROWS_AS(suggest_chunking_csr(100, 0.0), InvalidArgument);
    CHECK_THROWS_AS(suggest_chunking_dense(100, 0), InvalidArgument);
}
