#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "bidpo/toyworld/vocab.hpp"

namespace bidpo {

/// Half-open integer cell rectangle [row, row+height) x [col, col+width).
struct BBox {
    int row = 0;
    int col = 0;
    int height = 0;
    int width = 0;

    [[nodiscard]] double center_row() const { return row + height / 2.0; }
    [[nodiscard]] double center_col() const { return col + width / 2.0; }
    [[nodiscard]] bool contains(int r, int c) const {
        return r >= row && r < row + height && c >= col && c < col + width;
    }
    [[nodiscard]] bool within(int grid) const {
        return row >= 0 && col >= 0 && height > 0 && width > 0 && row + height <= grid && col + width <= grid;
    }
    /// True when the boxes overlap or share an edge (4-adjacent cells).
    [[nodiscard]] bool touches(const BBox& o) const {
        bool rows = row <= o.row + o.height && o.row <= row + height;
        bool cols = col <= o.col + o.width && o.col <= col + width;
        bool overlap_rows = row < o.row + o.height && o.row < row + height;
        bool overlap_cols = col < o.col + o.width && o.col < col + width;
        return (rows && overlap_cols) || (cols && overlap_rows);
    }
    auto operator<=>(const BBox&) const = default;
};

struct SceneObject {
    Shape shape = Shape::square;
    Color color = Color::red;
    Texture texture = Texture::solid;
    BBox bbox{};

    [[nodiscard]] bool same_attributes(const SceneObject& o) const {
        return shape == o.shape && color == o.color && texture == o.texture;
    }
    auto operator<=>(const SceneObject&) const = default;
};

/// Structured ground truth behind an image. Objects are kept in canonical
/// order (attributes, then position); `count_tag` is set for scenes made of
/// 2-4 identical replicas, and `relation` (object 0 relative to object 1) is
/// set for every two-object, non-replica scene.
struct SceneSpec {
    std::vector<SceneObject> objects;
    std::optional<Relation> relation;
    std::optional<int> count_tag;

    bool operator==(const SceneSpec&) const = default;
};

/// Relation of box `a` with respect to box `b` from their centers; nullopt
/// when horizontal and vertical offsets tie.
inline std::optional<Relation> relation_between(const BBox& a, const BBox& b) {
    double dx = a.center_col() - b.center_col();
    double dy = a.center_row() - b.center_row();
    if (std::abs(dx) == std::abs(dy)) return std::nullopt;
    if (std::abs(dx) > std::abs(dy)) return dx < 0 ? Relation::left_of : Relation::right_of;
    return dy < 0 ? Relation::above : Relation::below;
}

inline bool all_replicas(const std::vector<SceneObject>& objs) {
    if (objs.size() < 2) return false;
    return std::all_of(objs.begin(), objs.end(), [&](const SceneObject& o) { return o.same_attributes(objs[0]); });
}

/// Sorts objects and re-derives relation and count tag from geometry.
inline SceneSpec canonicalize(SceneSpec s) {
    std::sort(s.objects.begin(), s.objects.end());
    s.relation.reset();
    s.count_tag.reset();
    if (all_replicas(s.objects)) {
        s.count_tag = static_cast<int>(s.objects.size());
    } else if (s.objects.size() == 2) {
        s.relation = relation_between(s.objects[0].bbox, s.objects[1].bbox);
    }
    return s;
}

inline void validate(const SceneSpec& s, int grid) {
    const auto n = s.objects.size();
    bool replicas = s.count_tag.has_value();
    if (n == 0) return;  // blank scene
    if (replicas) {
        if (*s.count_tag < 2 || *s.count_tag > kMaxCount || static_cast<std::size_t>(*s.count_tag) != n)
            throw InvalidRange("scene: count_tag must equal the replica count (2-4)");
        if (!all_replicas(s.objects)) throw InvalidRange("scene: replicas must share attributes");
        if (s.relation) throw InvalidRange("scene: replica scenes carry no relation");
    } else if (n > 2) {
        throw InvalidRange("scene: at most two distinct objects");
    } else if (n == 2 && all_replicas(s.objects)) {
        throw InvalidRange("scene: two identical objects need a count tag");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!s.objects[i].bbox.within(grid)) throw InvalidRange("scene: bbox outside grid");
        for (std::size_t j = i + 1; j < n; ++j)
            if (s.objects[i].bbox.touches(s.objects[j].bbox))
                throw InvalidRange("scene: object bboxes overlap or touch");
    }
    if (n == 2 && !replicas) {
        auto geo = relation_between(s.objects[0].bbox, s.objects[1].bbox);
        if (!geo || s.relation != geo) throw InvalidRange("scene: relation inconsistent with geometry");
    } else if (s.relation) {
        throw InvalidRange("scene: relation requires exactly two objects");
    }
}

// ---------------------------------------------------------------------------
// Captions
// ---------------------------------------------------------------------------

struct ObjectSlot {
    std::optional<Shape> shape;
    std::optional<Color> color;
    std::optional<Texture> texture;

    [[nodiscard]] bool empty() const { return !shape && !color && !texture; }
    [[nodiscard]] bool matches(const SceneObject& o) const {
        return (!shape || *shape == o.shape) && (!color || *color == o.color) && (!texture || *texture == o.texture);
    }
    auto operator<=>(const ObjectSlot&) const = default;
};

/// Structured prompt: ordered object slots plus an optional relation
/// (slot 0 relative to slot 1) or an optional count for slot 0.
struct Caption {
    Dimension dimension = Dimension::color;
    std::vector<ObjectSlot> objects;
    std::optional<Relation> relation;
    std::optional<int> count;

    [[nodiscard]] int expected_object_count() const {
        return count ? *count : static_cast<int>(objects.size());
    }
    bool operator==(const Caption&) const = default;
};

inline bool any_slot_has(const Caption& c, Dimension d) {
    for (const auto& s : c.objects) {
        if (d == Dimension::color && s.color) return true;
        if (d == Dimension::shape && s.shape) return true;
        if (d == Dimension::texture && s.texture) return true;
    }
    return false;
}

inline void validate(const Caption& c) {
    if (c.objects.empty() || c.objects.size() > static_cast<std::size_t>(kMaxSlots))
        throw InvalidRange("caption: needs 1-2 object slots");
    for (const auto& s : c.objects)
        if (s.empty()) throw InvalidRange("caption: empty object slot");
    if (c.relation && c.objects.size() != 2) throw InvalidRange("caption: relation needs two objects");
    if (c.count) {
        if (c.objects.size() != 1) throw InvalidRange("caption: count applies to a single slot");
        if (*c.count < 1 || *c.count > kMaxCount) throw InvalidRange("caption: count must be 1-4");
    }
    switch (c.dimension) {
        case Dimension::spatial:
            if (!c.relation) throw InvalidRange("caption: spatial dimension requires a relation");
            break;
        case Dimension::numeracy:
            if (!c.count) throw InvalidRange("caption: numeracy dimension requires a count");
            break;
        default:
            if (c.relation || c.count) throw InvalidRange("caption: attribute caption with relation/count");
            if (!any_slot_has(c, c.dimension)) throw InvalidRange("caption: focus attribute not filled");
    }
}

inline std::string slot_text(const ObjectSlot& s) {
    std::string out;
    auto add = [&](const std::string& w) {
        if (!out.empty()) out += ' ';
        out += w;
    };
    if (s.color) add(to_string(*s.color));
    if (s.texture) add(to_string(*s.texture));
    add(s.shape ? to_string(*s.shape) : std::string("object"));
    return out;
}

/// Human-readable rendering, e.g. "red striped square left-of blue solid disc".
inline std::string to_text(const Caption& c) {
    std::string out;
    if (c.count) out = std::to_string(*c.count) + " x ";
    for (std::size_t i = 0; i < c.objects.size(); ++i) {
        if (i > 0) out += c.relation ? " " + to_string(*c.relation) + " " : std::string(" and ");
        out += slot_text(c.objects[i]);
    }
    return out;
}

/// Order-insensitive identity of what a caption asks for; "A left-of B" and
/// "B right-of A" share a key, as do permutations of unrelated objects.
inline std::string content_key(const Caption& c) {
    std::vector<ObjectSlot> slots = c.objects;
    std::optional<Relation> rel = c.relation;
    if (slots.size() == 2 && slots[1] < slots[0]) {
        std::swap(slots[0], slots[1]);
        if (rel) rel = inverse(*rel);
    }
    std::string key;
    for (const auto& s : slots) key += "[" + slot_text(s) + "]";
    if (rel) key += "rel=" + to_string(*rel);
    if (c.count) key += "n=" + std::to_string(*c.count);
    return key;
}

inline ObjectSlot full_slot(const SceneObject& o) { return ObjectSlot{o.shape, o.color, o.texture}; }

}  // namespace bidpo
