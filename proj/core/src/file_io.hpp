#pragma once

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "riffle/error.hpp"

namespace riffle::detail {

/// RAII wrapper over a POSIX file descriptor. Reads use pread, so a handle
/// can serve concurrent readers without shared seek state.
class FileHandle {
public:
    FileHandle() = default;
    FileHandle(const FileHandle&) = delete;
    FileHandle& operator=(const FileHandle&) = delete;
    FileHandle(FileHandle&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
    FileHandle& operator=(FileHandle&& other) noexcept {
        if (this != &other) {
            close_fd();
            fd_ = std::exchange(other.fd_, -1);
        }
        return *this;
    }
    ~FileHandle() { close_fd(); }

    [[nodiscard]] bool valid() const noexcept { return fd_ >= 0; }
    [[nodiscard]] int fd() const noexcept { return fd_; }

    static FileHandle open_read(const std::filesystem::path& p) {
        FileHandle h;
        h.fd_ = ::open(p.c_str(), O_RDONLY | O_CLOEXEC);
        if (h.fd_ < 0) throw IoError("open '" + p.string() + "': " + std::strerror(errno));
        return h;
    }

    /// Best-effort unbuffered open; returns an invalid handle if the
    /// platform or filesystem refuses O_DIRECT.
    static FileHandle try_open_direct(const std::filesystem::path& p) noexcept {
        FileHandle h;
#ifdef O_DIRECT
        h.fd_ = ::open(p.c_str(), O_RDONLY | O_CLOEXEC | O_DIRECT);
#endif
        return h;
    }

    static FileHandle create_write(const std::filesystem::path& p) {
        FileHandle h;
        h.fd_ = ::open(p.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
        if (h.fd_ < 0) throw IoError("create '" + p.string() + "': " + std::strerror(errno));
        return h;
    }

    [[nodiscard]] std::uint64_t size() const {
        struct stat st{};
        if (::fstat(fd_, &st) != 0) throw IoError(std::string("fstat: ") + std::strerror(errno));
        return static_cast<std::uint64_t>(st.st_size);
    }

    /// Reads exactly `buf.size()` bytes at `offset`; throws on EOF or error.
    void pread_exact(std::uint64_t offset, std::span<std::byte> buf) const {
        std::size_t done = 0;
        while (done < buf.size()) {
            const ssize_t n = ::pread(fd_, buf.data() + done, buf.size() - done,
                                      static_cast<off_t>(offset + done));
            if (n < 0) {
                if (errno == EINTR) continue;
                throw IoError(std::string("pread: ") + std::strerror(errno));
            }
            if (n == 0)
                throw IoError("pread: unexpected end of file at offset " +
                              std::to_string(offset + done));
            done += static_cast<std::size_t>(n);
        }
    }

    /// Reads up to `buf.size()` bytes at `offset`; short only at EOF.
    [[nodiscard]] std::size_t pread_some(std::uint64_t offset, std::span<std::byte> buf,
                                         bool* failed) const noexcept {
        std::size_t done = 0;
        while (done < buf.size()) {
            const ssize_t n = ::pread(fd_, buf.data() + done, buf.size() - done,
                                      static_cast<off_t>(offset + done));
            if (n < 0) {
                if (errno == EINTR) continue;
                *failed = true;
                return done;
            }
            if (n == 0) break;
            done += static_cast<std::size_t>(n);
        }
        return done;
    }

    void write_all(std::span<const std::byte> buf) {
        std::size_t done = 0;
        while (done < buf.size()) {
            const ssize_t n = ::write(fd_, buf.data() + done, buf.size() - done);
            if (n < 0) {
                if (errno == EINTR) continue;
                throw IoError(std::string("write: ") + std::strerror(errno));
            }
            done += static_cast<std::size_t>(n);
        }
    }

private:
    void close_fd() noexcept {
        if (fd_ >= 0) {
            ::close(fd_);
            fd_ = -1;
        }
    }

    int fd_ = -1;
};

inline void write_le32(std::byte* dst, std::uint32_t v) noexcept {
    std::memcpy(dst, &v, 4);
}
inline void write_le64(std::byte* dst, std::uint64_t v) noexcept {
    std::memcpy(dst, &v, 8);
}
[[nodiscard]] inline std::uint32_t read_le32(const std::byte* src) noexcept {
    std::uint32_t v;
    std::memcpy(&v, src, 4);
    return v;
}
[[nodiscard]] inline std::uint64_t read_le64(const std::byte* src) noexcept {
    std::uint64_t v;
    std::memcpy(&v, src, 8);
    return v;
}

}  // namespace riffle::detail
