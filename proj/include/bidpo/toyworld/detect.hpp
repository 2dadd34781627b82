#pragma once

#include <algorithm>
#include <array>
#include <optional>
#include <stdexcept>
#include <vector>

#include "bidpo/toyworld/render.hpp"

namespace bidpo {

struct DetectionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DetectConfig {
    /// A cell is foreground when some channel departs from the background by more.
    double foreground_threshold = 0.2;
    /// Components smaller than this are treated as speckle.
    int min_component_cells = 6;
    /// Components larger than a quadrant (8x8 at the default grid) cannot be
    /// one object; noise fields merge into such blobs.
    int max_component_cells = 64;
    /// Minimum |normalized channel| for a confident palette match.
    double palette_margin = 0.25;
    double min_shape_iou = 0.75;
    double shape_iou_margin = 0.1;
    /// Texture contrast separating solid from patterned, and the half-width of
    /// the undecidable band around it.
    double texture_split = 0.3;
    double texture_band = 0.1;
    RenderStyle style{};
};

/// Object recovered from pixels. Attributes the oracle cannot decide stay empty.
struct DetectedObject {
    BBox bbox{};
    int cells = 0;
    std::optional<Shape> shape;
    std::optional<Color> color;
    std::optional<Texture> texture;

    [[nodiscard]] bool complete() const { return shape && color && texture; }
};

namespace detail {

struct Component {
    std::vector<std::pair<int, int>> cells;
    BBox bbox{};
};

inline std::vector<Component> components(const Image& img, const DetectConfig& cfg) {
    const int g = img.shape.grid;
    std::vector<char> fg(static_cast<std::size_t>(g * g), 0);
    for (int r = 0; r < g; ++r)
        for (int c = 0; c < g; ++c) {
            double m = 0;
            for (int ch = 0; ch < img.shape.channels; ++ch)
                m = std::max(m, std::abs(img.at(r, c, ch) - cfg.style.background));
            fg[static_cast<std::size_t>(r * g + c)] = m > cfg.foreground_threshold;
        }
    std::vector<char> seen(fg.size(), 0);
    std::vector<Component> out;
    for (int start = 0; start < g * g; ++start) {
        if (!fg[static_cast<std::size_t>(start)] || seen[static_cast<std::size_t>(start)]) continue;
        Component comp;
        std::vector<int> stack{start};
        seen[static_cast<std::size_t>(start)] = 1;
        int r0 = g, c0 = g, r1 = -1, c1 = -1;
        while (!stack.empty()) {
            int idx = stack.back();
            stack.pop_back();
            int r = idx / g, c = idx % g;
            comp.cells.emplace_back(r, c);
            r0 = std::min(r0, r), r1 = std::max(r1, r), c0 = std::min(c0, c), c1 = std::max(c1, c);
            const std::array<std::pair<int, int>, 4> nbrs{{{r - 1, c}, {r + 1, c}, {r, c - 1}, {r, c + 1}}};
            for (auto [nr, nc] : nbrs) {
                if (nr < 0 || nc < 0 || nr >= g || nc >= g) continue;
                auto n = static_cast<std::size_t>(nr * g + nc);
                if (fg[n] && !seen[n]) {
                    seen[n] = 1;
                    stack.push_back(nr * g + nc);
                }
            }
        }
        const int n = static_cast<int>(comp.cells.size());
        if (n < cfg.min_component_cells || n > cfg.max_component_cells) continue;
        comp.bbox = BBox{r0, c0, r1 - r0 + 1, c1 - c0 + 1};
        out.push_back(std::move(comp));
    }
    return out;
}

inline std::optional<Shape> classify_shape(const Component& comp, const DetectConfig& cfg) {
    const BBox& b = comp.bbox;
    std::vector<char> mask(static_cast<std::size_t>(b.height * b.width), 0);
    for (auto [r, c] : comp.cells) mask[static_cast<std::size_t>((r - b.row) * b.width + (c - b.col))] = 1;
    std::array<double, kShapeCount> iou{};
    for (int s = 0; s < kShapeCount; ++s) {
        int inter = 0, uni = 0;
        for (int r = 0; r < b.height; ++r)
            for (int c = 0; c < b.width; ++c) {
                bool t = shape_covers(static_cast<Shape>(s), b.height, b.width, r, c);
                bool m = mask[static_cast<std::size_t>(r * b.width + c)];
                inter += t && m;
                uni += t || m;
            }
        iou[static_cast<std::size_t>(s)] = uni ? static_cast<double>(inter) / uni : 0.0;
    }
    std::array<int, kShapeCount> order{0, 1, 2};
    std::sort(order.begin(), order.end(), [&](int a, int b2) { return iou[static_cast<std::size_t>(a)] > iou[static_cast<std::size_t>(b2)]; });
    double best = iou[static_cast<std::size_t>(order[0])];
    double second = iou[static_cast<std::size_t>(order[1])];
    if (best < cfg.min_shape_iou || best - second < cfg.shape_iou_margin) return std::nullopt;
    return static_cast<Shape>(order[0]);
}

inline double cell_intensity(const Image& img, int r, int c, const DetectConfig& cfg) {
    double s = 0;
    for (int ch = 0; ch < img.shape.channels; ++ch) s += std::abs(img.at(r, c, ch) - cfg.style.background);
    return s / img.shape.channels;
}

inline std::optional<Texture> classify_texture(const Image& img, const Component& comp, const DetectConfig& cfg) {
    double stripe[2] = {0, 0}, check[2] = {0, 0};
    int stripe_n[2] = {0, 0}, check_n[2] = {0, 0};
    for (auto [r, c] : comp.cells) {
        int lr = r - comp.bbox.row, lc = c - comp.bbox.col;
        double v = cell_intensity(img, r, c, cfg);
        stripe[lr % 2] += v, ++stripe_n[lr % 2];
        check[(lr + lc) % 2] += v, ++check_n[(lr + lc) % 2];
    }
    auto contrast = [](const double* s, const int* n) {
        if (n[0] == 0 || n[1] == 0) return 0.0;
        return s[0] / n[0] - s[1] / n[1];
    };
    double cs = contrast(stripe, stripe_n);
    double cc = contrast(check, check_n);
    double best = std::max(cs, cc);
    if (std::abs(best - cfg.texture_split) < cfg.texture_band) return std::nullopt;
    if (best < cfg.texture_split) return Texture::solid;
    if (std::abs(cs - cc) < cfg.texture_band) return std::nullopt;
    return cs > cc ? Texture::striped : Texture::checker;
}

inline std::optional<Color> classify_color(const Image& img, const Component& comp, const DetectConfig& cfg) {
    std::array<double, 3> mean{0, 0, 0};
    double intensity = 0;
    for (auto [r, c] : comp.cells) {
        for (int ch = 0; ch < 3; ++ch) mean[static_cast<std::size_t>(ch)] += img.at(r, c, ch) - cfg.style.background;
        intensity += cell_intensity(img, r, c, cfg);
    }
    if (intensity <= 0) return std::nullopt;
    // normalized mean lands on a palette corner for any texture
    std::array<double, 3> n{};
    for (int ch = 0; ch < 3; ++ch) n[static_cast<std::size_t>(ch)] = mean[static_cast<std::size_t>(ch)] / intensity;
    std::size_t best = 0;
    double best_d = 1e300, second_d = 1e300;
    for (std::size_t k = 0; k < kPalette.size(); ++k) {
        double d = 0;
        for (std::size_t ch = 0; ch < 3; ++ch) d += (n[ch] - kPalette[k][ch]) * (n[ch] - kPalette[k][ch]);
        if (d < best_d) {
            second_d = best_d;
            best_d = d;
            best = k;
        } else if (d < second_d) {
            second_d = d;
        }
    }
    // corners one channel apart differ in squared distance by 4|n_ch|
    if (second_d - best_d < 4.0 * cfg.palette_margin) return std::nullopt;
    return static_cast<Color>(best);
}

}  // namespace detail

/// Lenient detector: every sufficiently large connected component becomes an
/// object; attributes it cannot decide are left empty.
inline std::vector<DetectedObject> detect_objects(const Image& img, const DetectConfig& cfg = {}) {
    if (img.shape.channels != 3) throw ShapeMismatch("detect: expects 3 channels");
    std::vector<DetectedObject> out;
    for (const auto& comp : detail::components(img, cfg)) {
        DetectedObject o;
        o.bbox = comp.bbox;
        o.cells = static_cast<int>(comp.cells.size());
        o.shape = detail::classify_shape(comp, cfg);
        o.texture = detail::classify_texture(img, comp, cfg);
        o.color = detail::classify_color(img, comp, cfg);
        out.push_back(o);
    }
    return out;
}

/// Recovers the generating scene of a rendered image. Throws DetectionError
/// when any attribute is ambiguous.
inline SceneSpec detect(const Image& img, const DetectConfig& cfg = {}) {
    SceneSpec s;
    for (const auto& d : detect_objects(img, cfg)) {
        if (!d.shape) throw DetectionError("detect: ambiguous shape");
        if (!d.color) throw DetectionError("detect: ambiguous palette match");
        if (!d.texture) throw DetectionError("detect: ambiguous texture");
        s.objects.push_back(SceneObject{*d.shape, *d.color, *d.texture, d.bbox});
    }
    return canonicalize(std::move(s));
}

}  // namespace bidpo
