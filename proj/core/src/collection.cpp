#include "riffle/collection.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

#include "riffle/error.hpp"

namespace riffle {

void DatasetCollection::add(std::shared_ptr<const StoreReader> store) {
    const auto& man = store->manifest();
    if (!members_.empty()) {
        if (man.layout != layout())
            throw InvalidArgument("collection: store layout " + std::string(to_string(man.layout)) +
                                  " does not match collection layout " +
                                  std::string(to_string(layout())));
        if (man.value_dtype != value_dtype())
            throw InvalidArgument("collection: store value_dtype " +
                                  std::string(to_string(man.value_dtype)) +
                                  " does not match collection value_dtype " +
                                  std::string(to_string(value_dtype())));
    }
    members_.push_back({std::move(store), {}, false});
    rebuild_unified();
}

void DatasetCollection::rebuild_unified() {
    // Unified axis: intersection in first-dataset order (inner) or union in
    // first-seen order (outer).
    unified_.clear();
    if (mode_ == JoinMode::outer) {
        std::unordered_set<std::string> seen;
        for (const auto& member : members_) {
            for (const auto& name : member.store->manifest().var_names) {
                if (seen.insert(name).second) unified_.push_back(name);
            }
        }
    } else {
        for (const auto& name : members_.front().store->manifest().var_names) {
            bool everywhere = true;
            for (std::size_t i = 1; i < members_.size() && everywhere; ++i) {
                const auto& names = members_[i].store->manifest().var_names;
                everywhere = std::find(names.begin(), names.end(), name) != names.end();
            }
            if (everywhere) unified_.push_back(name);
        }
    }

    std::unordered_map<std::string, std::uint64_t> unified_index;
    unified_index.reserve(unified_.size());
    for (std::size_t i = 0; i < unified_.size(); ++i) unified_index.emplace(unified_[i], i);

    offsets_.assign(1, 0);
    for (auto& member : members_) {
        const auto& names = member.store->manifest().var_names;
        member.col_to_unified.assign(names.size(), kMissingColumn);
        member.identity = names.size() == unified_.size();
        for (std::size_t c = 0; c < names.size(); ++c) {
            const auto it = unified_index.find(names[c]);
            if (it != unified_index.end()) member.col_to_unified[c] = it->second;
            if (member.col_to_unified[c] != c) member.identity = false;
        }
        offsets_.push_back(offsets_.back() + member.store->manifest().n_obs);
    }

    // One warning per var name that some member lacks, emitted once.
    std::unordered_map<std::string, std::size_t> presence;
    for (const auto& member : members_)
        for (const auto& name : member.store->manifest().var_names) presence[name]++;
    for (const auto& member : members_) {
        for (const auto& name : member.store->manifest().var_names) {
            if (presence[name] == members_.size()) continue;
            if (std::find(warned_names_.begin(), warned_names_.end(), name) != warned_names_.end())
                continue;
            warned_names_.push_back(name);
            warnings_.push_back("column '" + name + "' is present in only " +
                                std::to_string(presence[name]) + " of " +
                                std::to_string(members_.size()) + " datasets");
        }
    }
}

std::uint64_t DatasetCollection::total_rows() const noexcept {
    return members_.empty() ? 0 : offsets_.back();
}

Layout DatasetCollection::layout() const {
    if (members_.empty()) throw InvalidArgument("collection: no datasets added");
    return members_.front().store->manifest().layout;
}

ValueDtype DatasetCollection::value_dtype() const {
    if (members_.empty()) throw InvalidArgument("collection: no datasets added");
    return members_.front().store->manifest().value_dtype;
}

MemberRow DatasetCollection::locate(std::uint64_t global_row) const {
    if (global_row >= total_rows())
        throw InvalidArgument("collection: row " + std::to_string(global_row) + " out of range");
    const auto it = std::upper_bound(offsets_.begin(), offsets_.end(), global_row);
    const std::size_t member = static_cast<std::size_t>(it - offsets_.begin()) - 1;
    return {member, global_row - offsets_[member]};
}

}  // namespace riffle
