#pragma once

#include <algorithm>
#include <array>
#include <numeric>
#include <random>
#include <vector>

#include "bidpo/common.hpp"
#include "bidpo/toyworld/scene.hpp"

namespace bidpo {

struct RenderStyle {
    double background = 0.0;
    /// Intensity of the "off" cells of striped/checker textures.
    double dim_level = 0.4;
};

/// Squared normalized radius of the disc; below 1 so the disc is visibly
/// rounder than the square yet still touches all four bbox edges (h, w <= 12).
inline constexpr double kDiscRadiusSq = 0.85;

/// Whether cell (r, c) of a bbox-local h x w frame belongs to the shape.
inline bool shape_covers(Shape shape, int h, int w, int r, int c) {
    double y = r + 0.5;
    double x = c + 0.5;
    switch (shape) {
        case Shape::square: return true;
        case Shape::disc: {
            double ry = h / 2.0;
            double rx = w / 2.0;
            double dy = (y - ry) / ry;
            double dx = (x - rx) / rx;
            return dx * dx + dy * dy <= kDiscRadiusSq;
        }
        case Shape::triangle:
            // apex at the top centre, base spanning the bottom row
            return std::abs(x - w / 2.0) <= (r + 1.0) / h * (w / 2.0);
    }
    return false;
}

/// Multiplicative intensity of a texture at bbox-local cell (r, c).
inline double texture_intensity(Texture t, int r, int c, const RenderStyle& style = {}) {
    switch (t) {
        case Texture::solid: return 1.0;
        case Texture::striped: return r % 2 == 0 ? 1.0 : style.dim_level;
        case Texture::checker: return (r + c) % 2 == 0 ? 1.0 : style.dim_level;
    }
    return 1.0;
}

/// Draws the scene on a constant background. Each channel of each cell gets
/// a Gaussian perturbation clipped to [-jitter, jitter], then the image is
/// clamped to [-1, 1]. Deterministic given `seed`.
inline Image render(const SceneSpec& scene, std::uint64_t seed, double jitter, ImageShape shape = {},
                    const RenderStyle& style = {}) {
    if (jitter < 0) throw InvalidRange("render: jitter must be non-negative");
    if (shape.channels != 3) throw ShapeMismatch("render: palette needs 3 channels");
    Image img(shape, style.background);
    for (const auto& obj : scene.objects) {
        const BBox& b = obj.bbox;
        if (!b.within(shape.grid)) throw InvalidRange("render: bbox overflows the grid");
        const auto& rgb = kPalette[static_cast<std::size_t>(obj.color)];
        for (int r = 0; r < b.height; ++r)
            for (int c = 0; c < b.width; ++c) {
                if (!shape_covers(obj.shape, b.height, b.width, r, c)) continue;
                double k = texture_intensity(obj.texture, r, c, style);
                for (int ch = 0; ch < 3; ++ch) img.at(b.row + r, b.col + c, ch) = k * rgb[static_cast<std::size_t>(ch)];
            }
    }
    if (jitter > 0) {
        Rng rng(seed);
        std::normal_distribution<double> normal(0.0, jitter / 2.0);
        for (double& v : img.data) v += std::clamp(normal(rng), -jitter, jitter);
    }
    for (double& v : img.data) v = std::clamp(v, -1.0, 1.0);
    return img;
}

// ---------------------------------------------------------------------------
// Layouts
// ---------------------------------------------------------------------------

/// Objects sit in grid quadrants; a box of side `box` is offset within its
/// quadrant by up to `max_offset` cells.
struct LayoutConfig {
    int grid = 16;
    int box = 6;
    int max_offset = 2;
};

namespace detail {
inline BBox quadrant_box(int quadrant, int off_r, int off_c, const LayoutConfig& cfg) {
    int q = cfg.grid / 2;
    return BBox{(quadrant / 2) * q + off_r, (quadrant % 2) * q + off_c, cfg.box, cfg.box};
}

inline std::array<BBox, 4> quadrant_boxes(Rng& rng, const LayoutConfig& cfg) {
    int q = cfg.grid / 2;
    int hi = std::min(cfg.max_offset, q - cfg.box);
    if (hi < 0) throw InvalidRange("layout: box does not fit a quadrant");
    std::array<BBox, 4> boxes{};
    for (int attempt = 0;; ++attempt) {
        for (int i = 0; i < 4; ++i) boxes[static_cast<std::size_t>(i)] =
            quadrant_box(i, uniform_int(rng, 0, hi), uniform_int(rng, 0, hi), cfg);
        bool ok = true;
        for (int i = 0; i < 4 && ok; ++i)
            for (int j = i + 1; j < 4 && ok; ++j) ok = !boxes[static_cast<std::size_t>(i)].touches(boxes[static_cast<std::size_t>(j)]);
        if (ok) return boxes;
        if (attempt > 1000) throw InvalidRange("layout: cannot separate boxes");
    }
}
}  // namespace detail

/// Per-slot boxes for a caption (one box per replica for counted captions).
/// A shared `layout_seed` keeps positions fixed across caption edits: replica
/// i always lands in the same place, and flipping a relation exchanges the
/// two slot boxes.
inline std::vector<BBox> make_layout(const Caption& caption, std::uint64_t layout_seed, const LayoutConfig& cfg = {}) {
    Rng rng(derive_seed(layout_seed, 1));
    std::array<int, 4> order{0, 1, 2, 3};
    std::shuffle(order.begin(), order.end(), rng);
    auto boxes = detail::quadrant_boxes(rng, cfg);
    bool horizontal = uniform_int(rng, 0, 1) == 0;
    int lane = uniform_int(rng, 0, 1);
    bool slot0_first = uniform_int(rng, 0, 1) == 0;

    if (caption.count) {
        std::vector<BBox> out;
        for (int i = 0; i < *caption.count; ++i) out.push_back(boxes[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])]);
        return out;
    }
    if (caption.objects.size() == 1) return {boxes[static_cast<std::size_t>(order[0])]};

    if (caption.relation) {
        horizontal = is_horizontal(*caption.relation);
        slot0_first = *caption.relation == Relation::left_of || *caption.relation == Relation::above;
    }
    // quadrants: 0 1 / 2 3
    int first = horizontal ? lane * 2 : lane;
    int second = horizontal ? lane * 2 + 1 : lane + 2;
    BBox a = boxes[static_cast<std::size_t>(first)];
    BBox b = boxes[static_cast<std::size_t>(second)];
    return slot0_first ? std::vector<BBox>{a, b} : std::vector<BBox>{b, a};
}

/// Scene realizing a caption with the layout for `layout_seed`. Attributes a
/// slot leaves open are drawn from the same seed. Returns the scene in
/// caption-slot order (not canonicalized) so callers can map slots to boxes.
inline std::vector<SceneObject> scene_objects_for(const Caption& caption, std::uint64_t layout_seed,
                                                  const LayoutConfig& cfg = {}) {
    auto boxes = make_layout(caption, layout_seed, cfg);
    Rng fill(derive_seed(layout_seed, 2));
    std::vector<SceneObject> slot_objects;
    for (const auto& slot : caption.objects) {
        SceneObject o;
        o.shape = slot.shape.value_or(static_cast<Shape>(uniform_int(fill, 0, kShapeCount - 1)));
        o.color = slot.color.value_or(static_cast<Color>(uniform_int(fill, 0, kColorCount - 1)));
        o.texture = slot.texture.value_or(static_cast<Texture>(uniform_int(fill, 0, kTextureCount - 1)));
        slot_objects.push_back(o);
    }
    std::vector<SceneObject> out;
    for (std::size_t i = 0; i < boxes.size(); ++i) {
        SceneObject o = slot_objects[caption.count ? 0 : i];
        o.bbox = boxes[i];
        out.push_back(o);
    }
    return out;
}

inline SceneSpec scene_for(const Caption& caption, std::uint64_t layout_seed, const LayoutConfig& cfg = {}) {
    SceneSpec s;
    s.objects = scene_objects_for(caption, layout_seed, cfg);
    return canonicalize(std::move(s));
}

/// Caption fully describing a scene (all attributes, relation or count).
inline Caption caption_of(const SceneSpec& scene, Dimension dimension) {
    Caption c;
    c.dimension = dimension;
    if (scene.count_tag) {
        c.objects.push_back(full_slot(scene.objects.front()));
        c.count = *scene.count_tag;
        c.dimension = Dimension::numeracy;
        return c;
    }
    for (const auto& o : scene.objects) c.objects.push_back(full_slot(o));
    if (dimension == Dimension::spatial) c.relation = scene.relation;
    if (dimension == Dimension::numeracy) c.count = static_cast<int>(scene.objects.size());
    return c;
}

/// Random valid scene: one object, two distinct objects, or 2-4 replicas.
inline SceneSpec random_scene(std::uint64_t seed, const LayoutConfig& cfg = {}) {
    Rng rng(seed);
    auto slot = [&] {
        return ObjectSlot{static_cast<Shape>(uniform_int(rng, 0, kShapeCount - 1)),
                          static_cast<Color>(uniform_int(rng, 0, kColorCount - 1)),
                          static_cast<Texture>(uniform_int(rng, 0, kTextureCount - 1))};
    };
    Caption c;
    int kind = uniform_int(rng, 0, 2);
    c.objects.push_back(slot());
    if (kind == 1) {
        ObjectSlot b = slot();
        while (b == c.objects[0]) b = slot();
        c.objects.push_back(b);
    } else if (kind == 2) {
        c.dimension = Dimension::numeracy;
        c.count = uniform_int(rng, 2, kMaxCount);
    }
    return scene_for(c, derive_seed(seed, 9), cfg);
}

}  // namespace bidpo
