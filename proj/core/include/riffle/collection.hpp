#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "riffle/store.hpp"

namespace riffle {

enum class JoinMode : std::uint8_t { inner, outer };

[[nodiscard]] constexpr std::string_view to_string(JoinMode m) noexcept {
    return m == JoinMode::inner ? "inner" : "outer";
}
[[nodiscard]] constexpr std::optional<JoinMode> parse_join_mode(std::string_view s) noexcept {
    if (s == "inner") return JoinMode::inner;
    if (s == "outer") return JoinMode::outer;
    return std::nullopt;
}

inline constexpr std::uint64_t kMissingColumn = ~std::uint64_t{0};

/// A location of a global row inside the collection.
struct MemberRow {
    std::size_t member = 0;
    std::uint64_t local_row = 0;
};

/// An ordered set of stores presented as one concatenated matrix with a
/// unified variable axis. Inner joins keep the intersection of var names in
/// first-dataset order; outer joins keep the union in first-seen order, and
/// rows from stores lacking a column read back as zero there. Adding a
/// store that leaves some var name out of any member appends one warning
/// naming that column.
class DatasetCollection {
public:
    explicit DatasetCollection(JoinMode mode) : mode_(mode) {}

    /// Adds a store. Throws InvalidArgument when layout or value dtype do
    /// not match the collection.
    void add(std::shared_ptr<const StoreReader> store);

    [[nodiscard]] JoinMode join_mode() const noexcept { return mode_; }
    [[nodiscard]] std::size_t size() const noexcept { return members_.size(); }
    [[nodiscard]] std::uint64_t total_rows() const noexcept;
    [[nodiscard]] Layout layout() const;
    [[nodiscard]] ValueDtype value_dtype() const;
    [[nodiscard]] const std::vector<std::string>& unified_var_names() const noexcept {
        return unified_;
    }
    [[nodiscard]] const std::vector<std::string>& warnings() const noexcept { return warnings_; }

    [[nodiscard]] const StoreReader& store(std::size_t member) const {
        return *members_[member].store;
    }
    /// Column map of one member: member-local column -> unified column, or
    /// kMissingColumn when the name was dropped by an inner join.
    [[nodiscard]] const std::vector<std::uint64_t>& column_map(std::size_t member) const {
        return members_[member].col_to_unified;
    }
    /// True when the member's columns already coincide with the unified
    /// axis, so rows can be copied without reprojection.
    [[nodiscard]] bool identity_columns(std::size_t member) const {
        return members_[member].identity;
    }

    /// Global row id -> (member, local row). Row ids run over members in
    /// insertion order.
    [[nodiscard]] MemberRow locate(std::uint64_t global_row) const;
    [[nodiscard]] std::uint64_t member_row_offset(std::size_t member) const {
        return offsets_[member];
    }

private:
    struct Member {
        std::shared_ptr<const StoreReader> store;
        std::vector<std::uint64_t> col_to_unified;
        bool identity = false;
    };

    void rebuild_unified();

    JoinMode mode_;
    std::vector<Member> members_;
    std::vector<std::uint64_t> offsets_;  // cumulative row offsets, size() + 1 entries
    std::vector<std::string> unified_;
    std::vector<std::string> warnings_;
    std::vector<std::string> warned_names_;
};

}  // namespace riffle
