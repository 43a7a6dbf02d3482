#include "riffle/shard.hpp"

#include <cstring>
#include <string>

#include "file_io.hpp"
#include "riffle/error.hpp"

namespace riffle {

std::size_t ShardFooter::chunks_present() const noexcept {
    std::size_t n = 0;
    for (const auto& s : slots)
        if (!s.empty()) ++n;
    return n;
}

ShardFooter ShardFooter::read(const std::filesystem::path& path, std::uint64_t slot_count) {
    const auto fh = detail::FileHandle::open_read(path);
    const std::uint64_t file_size = fh.size();
    const std::uint64_t tail = footer_bytes(slot_count) + kShardMagic.size();
    if (file_size < tail)
        throw CorruptStore("shard '" + path.string() + "': truncated (size " +
                           std::to_string(file_size) + " < footer " + std::to_string(tail) + ")");

    std::vector<std::byte> buf(tail);
    fh.pread_exact(file_size - tail, buf);

    if (std::memcmp(buf.data() + footer_bytes(slot_count), kShardMagic.data(),
                    kShardMagic.size()) != 0)
        throw CorruptStore("shard '" + path.string() + "': bad footer magic");

    ShardFooter footer;
    footer.payload_bytes = file_size - tail;
    footer.slots.resize(slot_count);
    bool seen_empty = false;
    for (std::uint64_t i = 0; i < slot_count; ++i) {
        ShardSlot& slot = footer.slots[i];
        slot.offset = detail::read_le64(buf.data() + i * 16);
        slot.nbytes = detail::read_le64(buf.data() + i * 16 + 8);
        if (slot.empty()) {
            seen_empty = true;
            continue;
        }
        if (seen_empty)
            throw CorruptStore("shard '" + path.string() + "': chunk slot " + std::to_string(i) +
                               " follows an empty slot");
        if (slot.offset > footer.payload_bytes || slot.nbytes > footer.payload_bytes ||
            slot.offset + slot.nbytes > footer.payload_bytes)
            throw CorruptStore("shard '" + path.string() + "': chunk slot " + std::to_string(i) +
                               " extends past the payload area");
    }
    return footer;
}

struct ShardWriter::Impl {
    detail::FileHandle file;
    std::filesystem::path path;
    std::vector<ShardSlot> slots;
    std::uint64_t written_bytes = 0;
    std::uint64_t chunk_count = 0;
    bool finalized = false;
};

ShardWriter::ShardWriter(const std::filesystem::path& path, std::uint64_t slot_count)
    : impl_(std::make_unique<Impl>()) {
    impl_->file = detail::FileHandle::create_write(path);
    impl_->path = path;
    impl_->slots.resize(slot_count);
}

ShardWriter::ShardWriter(ShardWriter&&) noexcept = default;
ShardWriter& ShardWriter::operator=(ShardWriter&&) noexcept = default;
ShardWriter::~ShardWriter() = default;

void ShardWriter::append_chunk(std::span<const std::byte> encoded_record) {
    auto& im = *impl_;
    if (im.finalized) throw InvalidArgument("shard writer: append after finalize");
    if (im.chunk_count >= im.slots.size()) throw InvalidArgument("shard writer: shard is full");
    im.file.write_all(encoded_record);
    im.slots[im.chunk_count] = {im.written_bytes, encoded_record.size()};
    im.written_bytes += encoded_record.size();
    ++im.chunk_count;
}

std::uint64_t ShardWriter::chunks_written() const noexcept { return impl_->chunk_count; }

bool ShardWriter::full() const noexcept { return impl_->chunk_count >= impl_->slots.size(); }

void ShardWriter::finalize() {
    auto& im = *impl_;
    if (im.finalized) return;
    std::vector<std::byte> tail(ShardFooter::footer_bytes(im.slots.size()) + kShardMagic.size());
    for (std::size_t i = 0; i < im.slots.size(); ++i) {
        detail::write_le64(tail.data() + i * 16, im.slots[i].offset);
        detail::write_le64(tail.data() + i * 16 + 8, im.slots[i].nbytes);
    }
    std::memcpy(tail.data() + ShardFooter::footer_bytes(im.slots.size()), kShardMagic.data(),
                kShardMagic.size());
    im.file.write_all(tail);
    im.file = detail::FileHandle();
    im.finalized = true;
}

}  // namespace riffle
