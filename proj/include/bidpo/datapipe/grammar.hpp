#pragma once

#include <cstdint>
#include <vector>

#include "bidpo/toyworld/scene.hpp"

namespace bidpo {

// Caption grammar, per dimension:
//   color/shape/texture  one or two fully specified objects; two objects have
//                        different shapes, and for the shape dimension they
//                        also differ in color or texture
//   spatial              two such objects plus a relation
//   numeracy             one fully specified object plus a count 1-4
// Fully specified slots keep every edit (including swap/replace) inside the
// grammar and keep edited two-object scenes free of identical replicas.

namespace detail {

inline std::vector<ObjectSlot> all_full_slots() {
    std::vector<ObjectSlot> out;
    for (int s = 0; s < kShapeCount; ++s)
        for (int c = 0; c < kColorCount; ++c)
            for (int t = 0; t < kTextureCount; ++t)
                out.push_back(ObjectSlot{static_cast<Shape>(s), static_cast<Color>(c), static_cast<Texture>(t)});
    return out;
}

inline bool pair_allowed(const ObjectSlot& a, const ObjectSlot& b, Dimension d) {
    if (a.shape == b.shape) return false;
    if (d == Dimension::shape) return a.color != b.color || a.texture != b.texture;
    return true;
}

}  // namespace detail

/// Every caption of the grammar for one dimension, in a fixed order.
inline std::vector<Caption> enumerate_captions(Dimension d) {
    const auto slots = detail::all_full_slots();
    std::vector<Caption> out;
    if (d == Dimension::numeracy) {
        for (const auto& s : slots)
            for (int n = 1; n <= kMaxCount; ++n) out.push_back(Caption{d, {s}, std::nullopt, n});
        return out;
    }
    if (d != Dimension::spatial)
        for (const auto& s : slots) out.push_back(Caption{d, {s}, std::nullopt, std::nullopt});
    for (const auto& a : slots)
        for (const auto& b : slots) {
            if (!detail::pair_allowed(a, b, d)) continue;
            if (d == Dimension::spatial) {
                for (int r = 0; r < kRelationCount; ++r)
                    out.push_back(Caption{d, {a, b}, static_cast<Relation>(r), std::nullopt});
            } else {
                out.push_back(Caption{d, {a, b}, std::nullopt, std::nullopt});
            }
        }
    return out;
}

/// Uniform draw from enumerate_captions(d).
class CaptionSampler {
public:
    CaptionSampler() {
        for (Dimension d : kAllDimensions) tables_.push_back(enumerate_captions(d));
    }
    [[nodiscard]] const std::vector<Caption>& captions(Dimension d) const {
        return tables_.at(static_cast<std::size_t>(d));
    }
    [[nodiscard]] Caption sample(Dimension d, Rng& rng) const {
        const auto& t = captions(d);
        return t[std::uniform_int_distribution<std::size_t>(0, t.size() - 1)(rng)];
    }

private:
    std::vector<std::vector<Caption>> tables_;
};

inline const CaptionSampler& caption_sampler() {
    static const CaptionSampler sampler;
    return sampler;
}

inline Caption sample_caption(Dimension d, std::uint64_t seed) {
    if (static_cast<int>(d) >= kDimensionCount)
        throw VocabularyError("sample_caption: unsupported dimension");
    Rng rng(seed);
    return caption_sampler().sample(d, rng);
}

/// Dimension a caption exercises: a relation wins, then a count, then the
/// attributes. Among attributes the caption's declared focus is kept when it
/// is filled; otherwise color, texture, shape in that order.
inline Dimension parse_dimension(const Caption& c) {
    if (c.relation) return Dimension::spatial;
    if (c.count) return Dimension::numeracy;
    if (is_attribute(c.dimension) && any_slot_has(c, c.dimension)) return c.dimension;
    for (Dimension d : {Dimension::color, Dimension::texture, Dimension::shape})
        if (any_slot_has(c, d)) return d;
    return Dimension::shape;
}

}  // namespace bidpo
