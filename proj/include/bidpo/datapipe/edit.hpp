#pragma once

#include <algorithm>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "bidpo/datapipe/grammar.hpp"

namespace bidpo {

enum class EditKind { primary, swap, replace_forward, replace_backward };

inline std::string to_string(EditKind k) {
    switch (k) {
        case EditKind::primary: return "primary";
        case EditKind::swap: return "swap";
        case EditKind::replace_forward: return "replace-forward";
        case EditKind::replace_backward: return "replace-backward";
    }
    return "?";
}

inline EditKind parse_edit_kind(const std::string& s) {
    for (auto k : {EditKind::primary, EditKind::swap, EditKind::replace_forward, EditKind::replace_backward})
        if (to_string(k) == s) return k;
    throw VocabularyError("unknown edit kind '" + s + "'");
}

struct CaptionEdit {
    Caption caption;
    std::set<int> edited_object_indices;
    EditKind kind = EditKind::primary;

    bool operator==(const CaptionEdit&) const = default;
};

namespace detail {

template <class E>
std::optional<E>& attribute(ObjectSlot& s, Dimension d);

template <>
inline std::optional<Shape>& attribute<Shape>(ObjectSlot& s, Dimension) { return s.shape; }
template <>
inline std::optional<Color>& attribute<Color>(ObjectSlot& s, Dimension) { return s.color; }
template <>
inline std::optional<Texture>& attribute<Texture>(ObjectSlot& s, Dimension) { return s.texture; }

/// Value of the focus attribute that no slot uses yet, drawn uniformly.
template <class E>
E fresh_value(const Caption& c, int vocab, Rng& rng) {
    std::vector<E> options;
    for (int v = 0; v < vocab; ++v) {
        auto e = static_cast<E>(v);
        bool used = false;
        for (auto s : c.objects) used = used || attribute<E>(s, c.dimension) == e;
        if (!used) options.push_back(e);
    }
    return options[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(options.size()) - 1))];
}

template <class E>
void attribute_edits(const Caption& c, int vocab, Rng& rng, std::vector<CaptionEdit>& out) {
    int slot = uniform_int(rng, 0, static_cast<int>(c.objects.size()) - 1);
    Caption primary = c;
    auto& target = attribute<E>(primary.objects[static_cast<std::size_t>(slot)], c.dimension);
    if (!target) {
        // focus attribute lives on the other slot
        slot = 1 - slot;
    }
    primary = c;
    attribute<E>(primary.objects[static_cast<std::size_t>(slot)], c.dimension) = fresh_value<E>(c, vocab, rng);
    out.push_back({primary, {slot}, EditKind::primary});

    if (c.objects.size() != 2) return;
    ObjectSlot a = c.objects[0], b = c.objects[1];
    auto& va = attribute<E>(a, c.dimension);
    auto& vb = attribute<E>(b, c.dimension);
    if (!va || !vb || *va == *vb) return;

    Caption swapped = c;
    attribute<E>(swapped.objects[0], c.dimension) = *vb;
    attribute<E>(swapped.objects[1], c.dimension) = *va;
    out.push_back({swapped, {0, 1}, EditKind::swap});

    Caption forward = c;
    attribute<E>(forward.objects[1], c.dimension) = *va;
    out.push_back({forward, {1}, EditKind::replace_forward});

    Caption backward = c;
    attribute<E>(backward.objects[0], c.dimension) = *vb;
    out.push_back({backward, {0}, EditKind::replace_backward});
}

}  // namespace detail

/// Edited (dispreferred) captions for `caption`. Always one primary edit
/// that changes one slot of the caption's dimension to a value it does not
/// contain (relations are inverted, counts redrawn). Two-object attribute
/// captions whose focus values differ also get the swap and the two replace
/// augmentations.
inline std::vector<CaptionEdit> edit_caption(const Caption& caption, std::uint64_t seed) {
    validate(caption);
    Rng rng(seed);
    std::vector<CaptionEdit> out;
    Caption c = caption;
    c.dimension = parse_dimension(caption);
    switch (c.dimension) {
        case Dimension::color: detail::attribute_edits<Color>(c, kColorCount, rng, out); break;
        case Dimension::shape: detail::attribute_edits<Shape>(c, kShapeCount, rng, out); break;
        case Dimension::texture: detail::attribute_edits<Texture>(c, kTextureCount, rng, out); break;
        case Dimension::spatial: {
            Caption e = c;
            e.relation = inverse(*c.relation);
            out.push_back({e, {0, 1}, EditKind::primary});
            break;
        }
        case Dimension::numeracy: {
            Caption e = c;
            int n = uniform_int(rng, 1, kMaxCount - 1);
            e.count = n >= *c.count ? n + 1 : n;
            out.push_back({e, {0}, EditKind::primary});
            break;
        }
    }
    return out;
}

}  // namespace bidpo
