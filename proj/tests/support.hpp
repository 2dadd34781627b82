#pragma once

// Shared fixtures for the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "bidpo/losses/losses.hpp"
#include "bidpo/toyworld/render.hpp"

namespace bidpo::testing {

/// 2x2x3 image, 4-wide time embedding, two hidden layers of 8: 644 weights.
inline NetConfig tiny_config() {
    NetConfig cfg;
    cfg.image = {2, 3};
    cfg.time_dim = 4;
    cfg.hidden = 8;
    return cfg;
}

/// Initialized network with a random (non-zero) output layer.
inline DenoiserParams<double> random_net(const NetConfig& cfg, std::uint64_t seed, double out_scale = 0.3) {
    auto p = init_params<double>(cfg, seed);
    Rng rng(derive_seed(seed, 77));
    std::normal_distribution<double> n(0, out_scale);
    for (auto& l : p.layers) {
        for (Eigen::Index i = 0; i < l.b.size(); ++i) l.b(i) = 0.1 * n(rng);
    }
    for (Eigen::Index i = 0; i < p.layers.back().W.size(); ++i) p.layers.back().W.data()[i] = n(rng);
    return p;
}

/// Copy of `p` with every weight nudged by N(0, scale).
inline DenoiserParams<double> perturbed(const DenoiserParams<double>& p, std::uint64_t seed, double scale) {
    auto q = p;
    q.trainable = true;
    Rng rng(seed);
    std::normal_distribution<double> n(0, scale);
    for_each_parameter(q.layers, [&](double& v) { v += n(rng); });
    return q;
}

inline Caption full_caption(Dimension d, std::vector<ObjectSlot> slots, std::optional<Relation> rel = std::nullopt,
                            std::optional<int> count = std::nullopt) {
    Caption c;
    c.dimension = d;
    c.objects = std::move(slots);
    c.relation = rel;
    c.count = count;
    return c;
}

/// Hand-built pair on an arbitrary grid: rendered on the default 16-grid
/// layout when `shape.grid == 16`, otherwise filled with Gaussian images so
/// tiny networks can consume it.
inline PreferencePair make_pair(const Caption& y_w, const Caption& y_l, ImageShape shape, std::uint64_t seed) {
    PreferencePair p;
    p.y_w = y_w;
    p.y_l = y_l;
    p.dimension = y_w.dimension;
    p.layout_seed = seed;
    p.edited_object_indices = {0};
    if (shape.grid == 16) {
        p.scene_w = scene_for(y_w, seed);
        p.scene_l = scene_for(y_l, seed);
        p.x0_w = render(p.scene_w, seed, 0.05);
        p.x0_l = render(p.scene_l, seed, 0.05);
        auto bw = make_layout(y_w, seed), bl = make_layout(y_l, seed);
        p.mask_w = region_mask_from_boxes({bw[0]}, 16, 1.0, 0.5);
        p.mask_l = region_mask_from_boxes({bl[0]}, 16, 1.0, 0.5);
    } else {
        Rng rng(seed);
        p.x0_w = gaussian_image(shape, rng);
        p.x0_l = gaussian_image(shape, rng);
        for (double& v : p.x0_w.data) v = std::tanh(v);
        for (double& v : p.x0_l.data) v = std::tanh(v);
        p.mask_w = region_mask_from_boxes({BBox{0, 0, 1, 1}}, shape.grid, 1.0, 0.5);
        p.mask_l = region_mask_from_boxes({BBox{shape.grid - 1, 0, 1, shape.grid}}, shape.grid, 1.0, 0.5);
    }
    return p;
}

inline Caption color_caption(Color a, Color b) {
    return full_caption(Dimension::color, {ObjectSlot{Shape::square, a, Texture::solid},
                                           ObjectSlot{Shape::disc, b, Texture::striped}});
}

/// Max relative error between reverse-mode gradients and central finite
/// differences, relative to max(|analytic|, |fd|, floor).
inline double gradient_check(const DenoiserParams<double>& theta,
                             const std::function<LossOutput<double>(const DenoiserParams<double>&)>& loss,
                             double h = 1e-3, double floor = 1e-6) {
    auto out = loss(theta);
    auto g = backward(theta, out.tape);
    std::vector<double> analytic;
    for_each_parameter(g.layers, [&](double& v) { analytic.push_back(v); });
    auto probe = theta;
    std::vector<double*> ptrs;
    for_each_parameter(probe.layers, [&](double& v) { ptrs.push_back(&v); });
    double worst = 0;
    for (std::size_t i = 0; i < ptrs.size(); ++i) {
        double keep = *ptrs[i];
        auto at = [&](double d) {
            *ptrs[i] = keep + d;
            return loss(probe).value;
        };
        // fourth-order central stencil; the two-point one loses ~1e-10 to
        // roundoff, which dominates for components near the floor
        double fd = (8 * (at(h) - at(-h)) - (at(2 * h) - at(-2 * h))) / (12 * h);
        *ptrs[i] = keep;
        double denom = std::max({std::abs(fd), std::abs(analytic[i]), floor});
        worst = std::max(worst, std::abs(fd - analytic[i]) / denom);
    }
    return worst;
}

/// Closed-form TextDPO loss for the one-parameter model eps(c) = w * e_c
/// against reference weight w0, shared noise: the bracket reduces to
/// -2 (w - w0)(eps[c_w] - eps[c_l]).
inline double linear_text_dpo_closed_form(double w, double w0, double eps_cw, double eps_cl, double k) {
    double bracket = -2.0 * (w - w0) * (eps_cw - eps_cl);
    return std::log1p(std::exp(k * bracket));
}

}  // namespace bidpo::testing
