#include "riffle/codec.hpp"

#include <zlib.h>

#include <string>

#include "riffle/error.hpp"

namespace riffle {

namespace {
// windowBits -15 selects a raw DEFLATE stream with no zlib header/trailer.
constexpr int kRawWindowBits = -15;
}  // namespace

std::vector<std::byte> codec_encode(Codec codec, std::span<const std::byte> raw) {
    if (codec == Codec::none) return {raw.begin(), raw.end()};

    z_stream zs{};
    if (deflateInit2(&zs, Z_DEFAULT_COMPRESSION, Z_DEFLATED, kRawWindowBits, 8,
                     Z_DEFAULT_STRATEGY) != Z_OK)
        throw Error("deflate: init failed");

    std::vector<std::byte> out(deflateBound(&zs, static_cast<uLong>(raw.size())));
    zs.next_in = reinterpret_cast<Bytef*>(const_cast<std::byte*>(raw.data()));
    zs.avail_in = static_cast<uInt>(raw.size());
    zs.next_out = reinterpret_cast<Bytef*>(out.data());
    zs.avail_out = static_cast<uInt>(out.size());

    const int rc = deflate(&zs, Z_FINISH);
    const std::size_t produced = out.size() - zs.avail_out;
    deflateEnd(&zs);
    if (rc != Z_STREAM_END) throw Error("deflate: compression failed (rc=" + std::to_string(rc) + ")");
    out.resize(produced);
    return out;
}

std::vector<std::byte> codec_decode(Codec codec, std::span<const std::byte> encoded,
                                    std::size_t decoded_size) {
    if (codec == Codec::none) {
        if (encoded.size() != decoded_size)
            throw CorruptStore("chunk record: expected " + std::to_string(decoded_size) +
                               " bytes, found " + std::to_string(encoded.size()));
        return {encoded.begin(), encoded.end()};
    }

    z_stream zs{};
    if (inflateInit2(&zs, kRawWindowBits) != Z_OK) throw Error("inflate: init failed");

    // zlib rejects a null next_out even with avail_out == 0, so give the
    // empty-record case one scratch byte; it must stay untouched.
    std::vector<std::byte> out(decoded_size);
    std::byte scratch;
    zs.next_in = reinterpret_cast<Bytef*>(const_cast<std::byte*>(encoded.data()));
    zs.avail_in = static_cast<uInt>(encoded.size());
    zs.next_out = reinterpret_cast<Bytef*>(out.empty() ? &scratch : out.data());
    zs.avail_out = static_cast<uInt>(out.empty() ? 1 : out.size());

    const int rc = inflate(&zs, Z_FINISH);
    const std::size_t produced = (out.empty() ? 1 : out.size()) - zs.avail_out;
    inflateEnd(&zs);
    if (rc != Z_STREAM_END || produced != decoded_size || zs.avail_in != 0)
        throw CorruptStore("chunk record: deflate stream corrupt or wrong length (rc=" +
                           std::to_string(rc) + ", got " + std::to_string(produced) +
                           " of " + std::to_string(decoded_size) + " bytes)");
    return out;
}

std::vector<std::byte> codec_decode_any(Codec codec, std::span<const std::byte> encoded,
                                        std::size_t size_hint) {
    if (codec == Codec::none) return {encoded.begin(), encoded.end()};

    z_stream zs{};
    if (inflateInit2(&zs, kRawWindowBits) != Z_OK) throw Error("inflate: init failed");

    std::vector<std::byte> out;
    out.resize(size_hint > 64 ? size_hint : 64);
    zs.next_in = reinterpret_cast<Bytef*>(const_cast<std::byte*>(encoded.data()));
    zs.avail_in = static_cast<uInt>(encoded.size());
    std::size_t produced = 0;
    int rc = Z_OK;
    for (;;) {
        zs.next_out = reinterpret_cast<Bytef*>(out.data() + produced);
        zs.avail_out = static_cast<uInt>(out.size() - produced);
        rc = inflate(&zs, Z_NO_FLUSH);
        produced = out.size() - zs.avail_out;
        if (rc == Z_STREAM_END) break;
        if (rc == Z_OK || rc == Z_BUF_ERROR) {
            if (zs.avail_out == 0) {
                out.resize(out.size() * 2);
                continue;
            }
            if (rc == Z_BUF_ERROR || zs.avail_in == 0) {
                inflateEnd(&zs);
                throw CorruptStore("chunk record: deflate stream ended early");
            }
            continue;
        }
        inflateEnd(&zs);
        throw CorruptStore("chunk record: deflate stream corrupt (rc=" + std::to_string(rc) + ")");
    }
    const bool trailing = zs.avail_in != 0;
    inflateEnd(&zs);
    if (trailing) throw CorruptStore("chunk record: trailing bytes after deflate stream");
    out.resize(produced);
    return out;
}

}  // namespace riffle
