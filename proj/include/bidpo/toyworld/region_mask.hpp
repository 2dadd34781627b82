#pragma once

#include <set>
#include <vector>

#include "bidpo/toyworld/scene.hpp"

namespace bidpo {

/// Two-level per-cell loss weights (broadcast over channels).
struct RegionMask {
    int grid = 16;
    double w_in = 1.0;
    double w_out = 1.0;
    std::vector<double> weights;

    RegionMask() = default;
    RegionMask(int g, double inside, double outside)
        : grid(g), w_in(inside), w_out(outside), weights(static_cast<std::size_t>(g * g), outside) {}

    static RegionMask uniform(int g, double w = 1.0) { return RegionMask(g, w, w); }

    [[nodiscard]] double at(int row, int col) const { return weights[static_cast<std::size_t>(row * grid + col)]; }
    [[nodiscard]] bool is_uniform() const {
        for (double w : weights)
            if (w != weights.front()) return false;
        return true;
    }
    [[nodiscard]] double sum() const {
        double s = 0;
        for (double w : weights) s += w;
        return s;
    }

    bool operator==(const RegionMask&) const = default;
};

inline void validate(const RegionMask& m) {
    if (m.grid <= 0 || m.weights.size() != static_cast<std::size_t>(m.grid * m.grid))
        throw ShapeMismatch("region mask: size does not match grid");
    if (!(m.w_in >= 0) || !(m.w_out >= 0) || !std::isfinite(m.w_in) || !std::isfinite(m.w_out))
        throw InvalidRange("region mask: weights must be finite and non-negative");
    for (double w : m.weights)
        if (w != m.w_in && w != m.w_out) throw InvalidRange("region mask: entry is neither w_in nor w_out");
}

/// Cells inside the bbox of any listed box get `w_in`, all others `w_out`.
inline RegionMask region_mask_from_boxes(const std::vector<BBox>& boxes, int grid, double w_in, double w_out) {
    RegionMask m(grid, w_in, w_out);
    for (const auto& b : boxes)
        for (int r = std::max(0, b.row); r < std::min(grid, b.row + b.height); ++r)
            for (int c = std::max(0, b.col); c < std::min(grid, b.col + b.width); ++c)
                m.weights[static_cast<std::size_t>(r * grid + c)] = w_in;
    return m;
}

inline RegionMask region_mask(const SceneSpec& scene, const std::set<int>& edited_object_indices, double w_in,
                              double w_out, int grid) {
    std::vector<BBox> boxes;
    for (int i : edited_object_indices) {
        if (i < 0 || static_cast<std::size_t>(i) >= scene.objects.size())
            throw InvalidRange("region mask: object index out of range");
        boxes.push_back(scene.objects[static_cast<std::size_t>(i)].bbox);
    }
    return region_mask_from_boxes(boxes, grid, w_in, w_out);
}

}  // namespace bidpo
