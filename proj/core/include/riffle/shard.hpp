#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

namespace riffle {

/// Shard file layout: the encoded chunk records back to back, then a footer
/// of one (offset: u64 LE, nbytes: u64 LE) slot per chunk position, then the
/// 8-byte magic `SHRDIDX1`. Offsets are relative to the start of the file.
/// Empty slots hold 2^64-1 in both fields.
inline constexpr std::array<std::byte, 8> kShardMagic = {
    std::byte{'S'}, std::byte{'H'}, std::byte{'R'}, std::byte{'D'},
    std::byte{'I'}, std::byte{'D'}, std::byte{'X'}, std::byte{'1'}};

inline constexpr std::uint64_t kEmptyShardSlot = ~std::uint64_t{0};

struct ShardSlot {
    std::uint64_t offset = kEmptyShardSlot;
    std::uint64_t nbytes = kEmptyShardSlot;

    [[nodiscard]] bool empty() const noexcept { return offset == kEmptyShardSlot; }
};

/// The parsed and validated footer of one shard file.
struct ShardFooter {
    std::vector<ShardSlot> slots;
    std::uint64_t payload_bytes = 0;  // file size minus footer and magic

    [[nodiscard]] std::size_t chunks_present() const noexcept;

    /// Footer byte size for a slot count, excluding the magic.
    [[nodiscard]] static std::uint64_t footer_bytes(std::uint64_t slot_count) noexcept {
        return slot_count * 16;
    }

    /// Reads and validates the footer of the shard at `path`: magic, file
    /// size, slot offsets/lengths, and prefix occupancy. Throws CorruptStore
    /// if the shard is truncated or inconsistent.
    static ShardFooter read(const std::filesystem::path& path, std::uint64_t slot_count);
};

/// Streaming writer for one shard file: records are appended in order and
/// the footer lands when the shard is finalized.
class ShardWriter {
public:
    ShardWriter(const std::filesystem::path& path, std::uint64_t slot_count);
    ShardWriter(ShardWriter&&) noexcept;
    ShardWriter& operator=(ShardWriter&&) noexcept;
    ~ShardWriter();

    void append_chunk(std::span<const std::byte> encoded_record);
    [[nodiscard]] std::uint64_t chunks_written() const noexcept;
    [[nodiscard]] bool full() const noexcept;

    /// Writes footer + magic and closes the file.
    void finalize();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace riffle
