#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "riffle/dtype.hpp"

namespace riffle {

/// Encodes one chunk record. `deflate` produces a raw DEFLATE (RFC 1951)
/// stream; `none` passes bytes through.
[[nodiscard]] std::vector<std::byte> codec_encode(Codec codec, std::span<const std::byte> raw);

/// Decodes one chunk record to exactly `decoded_size` bytes. Throws
/// CorruptStore on stream errors or any size mismatch.
[[nodiscard]] std::vector<std::byte> codec_decode(Codec codec, std::span<const std::byte> encoded,
                                                  std::size_t decoded_size);

/// Decodes a record whose decoded length is not known in advance (CSR
/// records carry their own sizes in the header). `size_hint` seeds the
/// output buffer. Throws CorruptStore on stream errors.
[[nodiscard]] std::vector<std::byte> codec_decode_any(Codec codec,
                                                      std::span<const std::byte> encoded,
                                                      std::size_t size_hint);

}  // namespace riffle
