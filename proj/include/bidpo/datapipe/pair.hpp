#pragma once

#include <cstdint>
#include <set>

#include "bidpo/toyworld/region_mask.hpp"
#include "bidpo/toyworld/scene.hpp"

namespace bidpo {

/// One row of a preference dataset: a winner and a loser image-caption pair
/// that differ in the edited slots only.
struct PreferencePair {
    Image x0_w;
    Caption y_w;
    Image x0_l;
    Caption y_l;
    SceneSpec scene_w;
    SceneSpec scene_l;
    Dimension dimension = Dimension::color;
    std::set<int> edited_object_indices;  ///< caption slot indices
    RegionMask mask_w;
    RegionMask mask_l;
    std::uint64_t layout_seed = 0;

    bool operator==(const PreferencePair&) const = default;
};

/// Winner and loser exchanged, masks and scenes included.
inline PreferencePair swapped(const PreferencePair& p) {
    PreferencePair s = p;
    std::swap(s.x0_w, s.x0_l);
    std::swap(s.y_w, s.y_l);
    std::swap(s.scene_w, s.scene_l);
    std::swap(s.mask_w, s.mask_l);
    return s;
}

/// Spatial and numeracy pairs need a global view, so they always train
/// with uniform weights.
inline bool uses_global_focus(Dimension d) { return d == Dimension::spatial || d == Dimension::numeracy; }

}  // namespace bidpo
