#include "riffle/manifest.hpp"

#include <cinttypes>
#include <cstdio>

#include "json.hpp"
#include "riffle/error.hpp"

namespace riffle {

namespace {

using ordered_json = nlohmann::ordered_json;

template <typename Enum>
Enum parse_enum_field(const ordered_json& j, const char* key,
                      std::optional<Enum> (*parser)(std::string_view)) {
    if (!j.contains(key) || !j[key].is_string())
        throw InvalidArgument(std::string("manifest: missing or non-string field '") + key + "'");
    const auto s = j[key].get<std::string>();
    const auto v = parser(s);
    if (!v) throw InvalidArgument(std::string("manifest: bad value '") + s + "' for '" + key + "'");
    return *v;
}

std::uint64_t parse_uint_field(const ordered_json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_number_unsigned())
        throw InvalidArgument(std::string("manifest: missing or non-integer field '") + key + "'");
    return j[key].get<std::uint64_t>();
}

}  // namespace

void StoreManifest::validate() const {
    if (format_version != 1)
        throw InvalidArgument("manifest: unsupported format_version " +
                              std::to_string(format_version));
    if (chunk_rows < 1) throw InvalidArgument("manifest: chunk_rows must be >= 1");
    if (chunks_per_shard < 1) throw InvalidArgument("manifest: chunks_per_shard must be >= 1");
    if (var_names.size() != n_var)
        throw InvalidArgument("manifest: var_names length " + std::to_string(var_names.size()) +
                              " != n_var " + std::to_string(n_var));
    if ((layout == Layout::csr) != index_dtype.has_value())
        throw InvalidArgument(layout == Layout::csr
                                  ? "manifest: csr layout requires index_dtype"
                                  : "manifest: index_dtype is only valid for csr layout");
}

std::string StoreManifest::serialize() const {
    ordered_json j;
    j["format_version"] = format_version;
    j["layout"] = to_string(layout);
    j["n_obs"] = n_obs;
    j["n_var"] = n_var;
    j["value_dtype"] = to_string(value_dtype);
    if (index_dtype) j["index_dtype"] = to_string(*index_dtype);
    j["chunk_rows"] = chunk_rows;
    j["chunks_per_shard"] = chunks_per_shard;
    j["codec"] = to_string(codec);
    j["var_names"] = var_names;
    j["has_provenance"] = has_provenance;
    return j.dump(2) + "\n";
}

StoreManifest StoreManifest::parse(std::string_view json_text) {
    ordered_json j;
    try {
        j = ordered_json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw CorruptStore(std::string("manifest: invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw CorruptStore("manifest: root is not an object");

    StoreManifest m;
    m.format_version = static_cast<std::uint32_t>(parse_uint_field(j, "format_version"));
    m.layout = parse_enum_field<Layout>(j, "layout", parse_layout);
    m.n_obs = parse_uint_field(j, "n_obs");
    m.n_var = parse_uint_field(j, "n_var");
    m.value_dtype = parse_enum_field<ValueDtype>(j, "value_dtype", parse_value_dtype);
    if (j.contains("index_dtype"))
        m.index_dtype = parse_enum_field<IndexDtype>(j, "index_dtype", parse_index_dtype);
    m.chunk_rows = parse_uint_field(j, "chunk_rows");
    m.chunks_per_shard = parse_uint_field(j, "chunks_per_shard");
    m.codec = parse_enum_field<Codec>(j, "codec", parse_codec);
    if (!j.contains("var_names") || !j["var_names"].is_array())
        throw InvalidArgument("manifest: missing or non-array field 'var_names'");
    for (const auto& v : j["var_names"]) {
        if (!v.is_string()) throw InvalidArgument("manifest: var_names entries must be strings");
        m.var_names.push_back(v.get<std::string>());
    }
    if (!j.contains("has_provenance") || !j["has_provenance"].is_boolean())
        throw InvalidArgument("manifest: missing or non-boolean field 'has_provenance'");
    m.has_provenance = j["has_provenance"].get<bool>();

    m.validate();
    return m;
}

std::string shard_file_name(std::uint64_t shard_index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "s%08" PRIu64 ".bin", shard_index);
    return buf;
}

}  // namespace riffle
