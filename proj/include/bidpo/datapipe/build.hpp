#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "bidpo/datapipe/edit.hpp"
#include "bidpo/datapipe/pair.hpp"
#include "bidpo/toyworld/region_mask.hpp"
#include "bidpo/toyworld/render.hpp"
#include "bidpo/toyworld/vqa.hpp"

namespace bidpo {

struct VqaInconsistency : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr double kMaskInside = 1.0;
inline constexpr double kMaskOutside = 0.5;

/// Outcome of the four VQA cross-checks of a pair.
struct CrossCheck {
    bool w_w = false;  ///< winner image vs winner caption (should pass)
    bool l_l = false;
    bool w_l = false;  ///< winner image vs loser caption (should fail)
    bool l_w = false;

    [[nodiscard]] bool consistent() const { return w_w && l_l && !w_l && !l_w; }
};

inline CrossCheck cross_check(const PreferencePair& p, const DetectConfig& cfg = {}) {
    return CrossCheck{vqa_check(p.x0_w, p.y_w, cfg).pass, vqa_check(p.x0_l, p.y_l, cfg).pass,
                      vqa_check(p.x0_w, p.y_l, cfg).pass, vqa_check(p.x0_l, p.y_w, cfg).pass};
}

namespace detail {

/// Boxes of the edited slots; a counted caption's slot covers every replica.
inline std::vector<BBox> edited_boxes(const Caption& c, const std::vector<SceneObject>& slot_objects,
                                      const std::set<int>& edited) {
    std::vector<BBox> out;
    if (c.count) {
        for (const auto& o : slot_objects) out.push_back(o.bbox);
        return out;
    }
    for (int i : edited) out.push_back(slot_objects.at(static_cast<std::size_t>(i)).bbox);
    return out;
}

}  // namespace detail

/// Renders the original caption (winner) and its edit (loser) on a shared
/// layout and checks the four VQA cross-conditions. Jitter noise is drawn
/// independently per image.
inline PreferencePair build_pair(const Caption& caption, const CaptionEdit& edit, std::uint64_t layout_seed,
                                 double jitter, const LayoutConfig& layout = {}) {
    validate(caption);
    validate(edit.caption);
    if (edit.caption == caption) throw InvalidRange("build_pair: edit equals the original caption");
    PreferencePair p;
    p.y_w = caption;
    p.y_l = edit.caption;
    p.dimension = parse_dimension(caption);
    p.edited_object_indices = edit.edited_object_indices;
    p.layout_seed = layout_seed;
    auto objs_w = scene_objects_for(caption, layout_seed, layout);
    auto objs_l = scene_objects_for(edit.caption, layout_seed, layout);
    p.scene_w = canonicalize(SceneSpec{objs_w, std::nullopt, std::nullopt});
    p.scene_l = canonicalize(SceneSpec{objs_l, std::nullopt, std::nullopt});
    ImageShape shape{layout.grid, 3};
    p.x0_w = render(p.scene_w, derive_seed(layout_seed, 10), jitter, shape);
    p.x0_l = render(p.scene_l, derive_seed(layout_seed, 11), jitter, shape);
    p.mask_w = region_mask_from_boxes(detail::edited_boxes(caption, objs_w, edit.edited_object_indices), layout.grid,
                                      kMaskInside, kMaskOutside);
    p.mask_l = region_mask_from_boxes(detail::edited_boxes(edit.caption, objs_l, edit.edited_object_indices),
                                      layout.grid, kMaskInside, kMaskOutside);
    if (!cross_check(p).consistent())
        throw VqaInconsistency("build_pair: VQA cross-check failed for '" + to_text(caption) + "' vs '" +
                               to_text(edit.caption) + "'");
    return p;
}

struct FilterStats {
    std::array<int, kDimensionCount> input{};
    std::array<int, kDimensionCount> injected{};
    std::array<int, kDimensionCount> kept{};
    std::array<int, kDimensionCount> discarded{};

    [[nodiscard]] static int total(const std::array<int, kDimensionCount>& a) {
        int s = 0;
        for (int v : a) s += v;
        return s;
    }
    [[nodiscard]] double keep_rate(Dimension d) const {
        int n = input[static_cast<std::size_t>(d)];
        return n ? static_cast<double>(kept[static_cast<std::size_t>(d)]) / n : 0.0;
    }
    bool operator==(const FilterStats&) const = default;
};

struct FilterResult {
    std::vector<PreferencePair> kept;
    std::vector<PreferencePair> discarded;
    FilterStats stats;
};

/// VQA filter. Each pair is corrupted (winner and loser captions exchanged)
/// with probability `corruption_rate` before checking, so the filter's recall
/// can be measured; only pairs passing all four cross-checks are kept.
inline FilterResult filter_pairs(const std::vector<PreferencePair>& pairs, double corruption_rate,
                                 std::uint64_t seed, const DetectConfig& cfg = {}) {
    if (!(corruption_rate >= 0.0 && corruption_rate < 1.0))
        throw InvalidRange("filter_pairs: corruption_rate must lie in [0, 1)");
    Rng rng(seed);
    std::bernoulli_distribution corrupt(corruption_rate);
    FilterResult res;
    for (const auto& original : pairs) {
        auto d = static_cast<std::size_t>(original.dimension);
        ++res.stats.input[d];
        PreferencePair p = original;
        if (corrupt(rng)) {
            std::swap(p.y_w, p.y_l);
            ++res.stats.injected[d];
        }
        if (cross_check(p, cfg).consistent()) {
            ++res.stats.kept[d];
            res.kept.push_back(std::move(p));
        } else {
            ++res.stats.discarded[d];
            res.discarded.push_back(std::move(p));
        }
    }
    return res;
}

}  // namespace bidpo
