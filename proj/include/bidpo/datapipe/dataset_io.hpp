#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "bidpo/datapipe/pipeline.hpp"
#include "bidpo/io.hpp"
#include "json.hpp"

namespace bidpo {

// Dataset file: JSON lines. Line 1 is the header
//   {"format":"bidpo-dataset","version":1,"records":N,"crc32":C,"manifest":{...},"config":{...}}
// followed by N pair records. C is the crc32 of the record lines, each
// including its trailing '\n'.
inline constexpr std::uint32_t kDatasetVersion = 1;
inline constexpr const char* kDatasetFormat = "bidpo-dataset";

using json = nlohmann::json;

namespace detail {

template <class E>
json opt_name(const std::optional<E>& v) {
    return v ? json(to_string(*v)) : json(nullptr);
}

template <class E, class Parse>
std::optional<E> name_opt(const json& j, Parse parse) {
    if (j.is_null()) return std::nullopt;
    return parse(j.get<std::string>());
}

template <class T, std::size_t N>
json dim_array(const std::array<T, N>& a) {
    json o = json::object();
    for (Dimension d : kAllDimensions) o[to_string(d)] = a[static_cast<std::size_t>(d)];
    return o;
}

template <class T, std::size_t N>
void dim_array(const json& j, std::array<T, N>& a) {
    for (Dimension d : kAllDimensions) a[static_cast<std::size_t>(d)] = j.at(to_string(d)).get<T>();
}

}  // namespace detail

inline json to_json(const ObjectSlot& s) {
    return {{"shape", detail::opt_name(s.shape)},
            {"color", detail::opt_name(s.color)},
            {"texture", detail::opt_name(s.texture)}};
}

inline ObjectSlot slot_from_json(const json& j) {
    return ObjectSlot{detail::name_opt<Shape>(j.at("shape"), parse_shape),
                      detail::name_opt<Color>(j.at("color"), parse_color),
                      detail::name_opt<Texture>(j.at("texture"), parse_texture)};
}

inline json to_json(const Caption& c) {
    json slots = json::array();
    for (const auto& s : c.objects) slots.push_back(to_json(s));
    return {{"dimension", to_string(c.dimension)},
            {"objects", slots},
            {"relation", detail::opt_name(c.relation)},
            {"count", c.count ? json(*c.count) : json(nullptr)}};
}

inline Caption caption_from_json(const json& j) {
    Caption c;
    c.dimension = parse_dimension_name(j.at("dimension").get<std::string>());
    for (const auto& s : j.at("objects")) c.objects.push_back(slot_from_json(s));
    c.relation = detail::name_opt<Relation>(j.at("relation"), parse_relation);
    if (!j.at("count").is_null()) c.count = j.at("count").get<int>();
    validate(c);
    return c;
}

inline json to_json(const SceneSpec& s) {
    json objs = json::array();
    for (const auto& o : s.objects)
        objs.push_back({{"shape", to_string(o.shape)},
                        {"color", to_string(o.color)},
                        {"texture", to_string(o.texture)},
                        {"bbox", {o.bbox.row, o.bbox.col, o.bbox.height, o.bbox.width}}});
    return {{"objects", objs},
            {"relation", detail::opt_name(s.relation)},
            {"count_tag", s.count_tag ? json(*s.count_tag) : json(nullptr)}};
}

inline SceneSpec scene_from_json(const json& j) {
    SceneSpec s;
    for (const auto& o : j.at("objects")) {
        const auto& b = o.at("bbox");
        if (!b.is_array() || b.size() != 4) throw FormatError(FormatError::Kind::malformed_record, "bbox needs 4 ints");
        s.objects.push_back(SceneObject{parse_shape(o.at("shape").get<std::string>()),
                                        parse_color(o.at("color").get<std::string>()),
                                        parse_texture(o.at("texture").get<std::string>()),
                                        BBox{b[0].get<int>(), b[1].get<int>(), b[2].get<int>(), b[3].get<int>()}});
    }
    s.relation = detail::name_opt<Relation>(j.at("relation"), parse_relation);
    if (!j.at("count_tag").is_null()) s.count_tag = j.at("count_tag").get<int>();
    return s;
}

inline json to_json(const Image& img) {
    return {{"grid", img.shape.grid}, {"channels", img.shape.channels}, {"data", img.data}};
}

inline Image image_from_json(const json& j) {
    Image img(ImageShape{j.at("grid").get<int>(), j.at("channels").get<int>()});
    auto data = j.at("data").get<std::vector<double>>();
    if (data.size() != img.data.size()) throw ShapeMismatch("image data length does not match grid");
    img.data = std::move(data);
    return img;
}

/// Two-level run-length encoding: runs alternate starting with `first`.
inline json to_json(const RegionMask& m) {
    json runs = json::array();
    bool first_in = !m.weights.empty() && m.weights.front() == m.w_in;
    bool cur = first_in;
    long run = 0;
    for (double w : m.weights) {
        bool in = w == m.w_in;
        if (in != cur) {
            runs.push_back(run);
            run = 0;
            cur = in;
        }
        ++run;
    }
    runs.push_back(run);
    return {{"grid", m.grid}, {"w_in", m.w_in}, {"w_out", m.w_out}, {"first", first_in ? "in" : "out"}, {"runs", runs}};
}

inline RegionMask mask_from_json(const json& j) {
    RegionMask m;
    m.grid = j.at("grid").get<int>();
    m.w_in = j.at("w_in").get<double>();
    m.w_out = j.at("w_out").get<double>();
    auto first = j.at("first").get<std::string>();
    if (first != "in" && first != "out") throw FormatError(FormatError::Kind::malformed_record, "mask: bad run start");
    bool cur = first == "in";
    for (const auto& r : j.at("runs")) {
        long n = r.get<long>();
        if (n < 0 || static_cast<long>(m.weights.size()) + n > static_cast<long>(m.grid) * m.grid)
            throw FormatError(FormatError::Kind::malformed_record, "mask: run lengths exceed grid");
        m.weights.insert(m.weights.end(), static_cast<std::size_t>(n), cur ? m.w_in : m.w_out);
        cur = !cur;
    }
    validate(m);
    return m;
}

inline json to_json(const PreferencePair& p) {
    return {{"dimension", to_string(p.dimension)},
            {"y_w", to_json(p.y_w)},
            {"y_l", to_json(p.y_l)},
            {"edited_object_indices", p.edited_object_indices},
            {"layout_seed", p.layout_seed},
            {"scene_w", to_json(p.scene_w)},
            {"scene_l", to_json(p.scene_l)},
            {"mask_w", to_json(p.mask_w)},
            {"mask_l", to_json(p.mask_l)},
            {"x0_w", to_json(p.x0_w)},
            {"x0_l", to_json(p.x0_l)}};
}

inline PreferencePair pair_from_json(const json& j) {
    PreferencePair p;
    p.dimension = parse_dimension_name(j.at("dimension").get<std::string>());
    p.y_w = caption_from_json(j.at("y_w"));
    p.y_l = caption_from_json(j.at("y_l"));
    p.edited_object_indices = j.at("edited_object_indices").get<std::set<int>>();
    p.layout_seed = j.at("layout_seed").get<std::uint64_t>();
    p.scene_w = scene_from_json(j.at("scene_w"));
    p.scene_l = scene_from_json(j.at("scene_l"));
    p.mask_w = mask_from_json(j.at("mask_w"));
    p.mask_l = mask_from_json(j.at("mask_l"));
    p.x0_w = image_from_json(j.at("x0_w"));
    p.x0_l = image_from_json(j.at("x0_l"));
    return p;
}

inline json to_json(const FilterStats& s) {
    return {{"input", detail::dim_array(s.input)},
            {"injected", detail::dim_array(s.injected)},
            {"kept", detail::dim_array(s.kept)},
            {"discarded", detail::dim_array(s.discarded)}};
}

inline json to_json(const DatasetManifest& m) {
    return {{"requested", detail::dim_array(m.requested)},
            {"realized", detail::dim_array(m.realized)},
            {"captions", detail::dim_array(m.captions)},
            {"build_discarded", detail::dim_array(m.build_discarded)},
            {"filter", to_json(m.filter)},
            {"config_hash", m.config_hash}};
}

inline DatasetManifest manifest_from_json(const json& j) {
    DatasetManifest m;
    detail::dim_array(j.at("requested"), m.requested);
    detail::dim_array(j.at("realized"), m.realized);
    detail::dim_array(j.at("captions"), m.captions);
    detail::dim_array(j.at("build_discarded"), m.build_discarded);
    const auto& f = j.at("filter");
    detail::dim_array(f.at("input"), m.filter.input);
    detail::dim_array(f.at("injected"), m.filter.injected);
    detail::dim_array(f.at("kept"), m.filter.kept);
    detail::dim_array(f.at("discarded"), m.filter.discarded);
    m.config_hash = j.at("config_hash").get<std::uint32_t>();
    return m;
}

struct Dataset {
    std::vector<PreferencePair> pairs;
    DatasetManifest manifest;
    json config;  ///< pipeline config as written (may be null)
};

inline std::string serialize_dataset(const std::vector<PreferencePair>& pairs, const DatasetManifest& manifest,
                                     const json& config = nullptr) {
    std::string body;
    for (const auto& p : pairs) {
        body += to_json(p).dump();
        body += '\n';
    }
    json header{{"format", kDatasetFormat},
                {"version", kDatasetVersion},
                {"records", pairs.size()},
                {"crc32", crc32_of(body)},
                {"manifest", to_json(manifest)},
                {"config", config}};
    return header.dump() + "\n" + body;
}

inline void write_dataset(const std::vector<PreferencePair>& pairs, const DatasetManifest& manifest,
                          const std::filesystem::path& path, const json& config = nullptr) {
    atomic_write(path, serialize_dataset(pairs, manifest, config));
}

inline Dataset deserialize_dataset(const std::string& text) {
    using K = FormatError::Kind;
    std::size_t pos = 0;
    long line_no = 0;
    auto next_line = [&](std::string& out) {
        if (pos >= text.size()) return false;
        auto nl = text.find('\n', pos);
        out = text.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
        pos = nl == std::string::npos ? text.size() : nl + 1;
        ++line_no;
        return true;
    };
    std::string line;
    if (!next_line(line)) throw FormatError(K::malformed_record, "dataset: empty file", 1);
    json header;
    std::size_t records = 0;
    std::uint32_t crc = 0;
    Dataset ds;
    try {
        header = json::parse(line);
        if (header.at("format").get<std::string>() != kDatasetFormat)
            throw FormatError(K::malformed_record, "dataset: not a dataset file", 1);
        auto version = header.at("version").get<std::uint32_t>();
        if (version != kDatasetVersion)
            throw FormatError(K::version_mismatch,
                              "dataset: version " + std::to_string(version) + " != " + std::to_string(kDatasetVersion));
        records = header.at("records").get<std::size_t>();
        crc = header.at("crc32").get<std::uint32_t>();
        ds.manifest = manifest_from_json(header.at("manifest"));
        ds.config = header.at("config");
    } catch (const FormatError&) {
        throw;
    } catch (const std::exception& e) {
        throw FormatError(K::malformed_record, std::string("dataset header: ") + e.what(), 1);
    }
    const std::size_t body_start = pos;
    for (std::size_t i = 0; i < records; ++i) {
        if (!next_line(line)) throw FormatError(K::malformed_record, "dataset: missing record", line_no + 1);
        try {
            ds.pairs.push_back(pair_from_json(json::parse(line)));
        } catch (const std::exception& e) {
            throw FormatError(K::malformed_record, std::string("dataset record: ") + e.what(), line_no);
        }
    }
    if (next_line(line) && !line.empty())
        throw FormatError(K::malformed_record, "dataset: trailing data after declared records", line_no);
    if (crc32_of(text.substr(body_start, pos - body_start)) != crc)
        throw FormatError(K::checksum_failure, "dataset: record checksum mismatch");
    return ds;
}

inline Dataset read_dataset(const std::filesystem::path& path) { return deserialize_dataset(read_file(path)); }

}  // namespace bidpo
