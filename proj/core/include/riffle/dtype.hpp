#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>

namespace riffle {

enum class Layout : std::uint8_t { dense, csr };

enum class ValueDtype : std::uint8_t { f32, f64, i32, u8 };

enum class IndexDtype : std::uint8_t { u32, u64 };

enum class Codec : std::uint8_t { none, deflate };

[[nodiscard]] constexpr std::size_t value_size(ValueDtype dt) noexcept {
    switch (dt) {
        case ValueDtype::f32: return 4;
        case ValueDtype::f64: return 8;
        case ValueDtype::i32: return 4;
        case ValueDtype::u8:  return 1;
    }
    return 0;
}

[[nodiscard]] constexpr std::size_t index_size(IndexDtype dt) noexcept {
    return dt == IndexDtype::u32 ? 4 : 8;
}

[[nodiscard]] constexpr std::string_view to_string(Layout l) noexcept {
    return l == Layout::dense ? "dense" : "csr";
}

[[nodiscard]] constexpr std::string_view to_string(ValueDtype dt) noexcept {
    switch (dt) {
        case ValueDtype::f32: return "f32";
        case ValueDtype::f64: return "f64";
        case ValueDtype::i32: return "i32";
        case ValueDtype::u8:  return "u8";
    }
    return "";
}

[[nodiscard]] constexpr std::string_view to_string(IndexDtype dt) noexcept {
    return dt == IndexDtype::u32 ? "u32" : "u64";
}

[[nodiscard]] constexpr std::string_view to_string(Codec c) noexcept {
    return c == Codec::none ? "none" : "deflate";
}

[[nodiscard]] constexpr std::optional<Layout> parse_layout(std::string_view s) noexcept {
    if (s == "dense") return Layout::dense;
    if (s == "csr") return Layout::csr;
    return std::nullopt;
}

[[nodiscard]] constexpr std::optional<ValueDtype> parse_value_dtype(std::string_view s) noexcept {
    if (s == "f32") return ValueDtype::f32;
    if (s == "f64") return ValueDtype::f64;
    if (s == "i32") return ValueDtype::i32;
    if (s == "u8")  return ValueDtype::u8;
    return std::nullopt;
}

[[nodiscard]] constexpr std::optional<IndexDtype> parse_index_dtype(std::string_view s) noexcept {
    if (s == "u32") return IndexDtype::u32;
    if (s == "u64") return IndexDtype::u64;
    return std::nullopt;
}

[[nodiscard]] constexpr std::optional<Codec> parse_codec(std::string_view s) noexcept {
    if (s == "none") return Codec::none;
    if (s == "deflate") return Codec::deflate;
    return std::nullopt;
}

}  // namespace riffle
