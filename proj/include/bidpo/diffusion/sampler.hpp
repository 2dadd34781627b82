#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "bidpo/diffusion/schedule.hpp"
#include "bidpo/net/mlp.hpp"

namespace bidpo {

struct SampleRequest {
    Caption caption;
    std::uint64_t seed = 0;
};

/// Ancestral DDPM sampling for a batch of (caption, seed) requests. Each
/// sample draws from its own seeded stream, so results do not depend on the
/// batch it was computed in.
template <class S>
std::vector<Image> ddpm_sample_batch(const DenoiserParams<S>& params, const std::vector<SampleRequest>& requests,
                                     const DiffusionSchedule& sched) {
    params.check_shapes();
    const NetConfig& cfg = params.config;
    const int n = cfg.image.size();
    const auto B = static_cast<Eigen::Index>(requests.size());
    if (B == 0) return {};

    std::vector<Rng> rngs;
    std::vector<std::vector<double>> codes;
    Matrix<double> x(n, B);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index j = 0; j < B; ++j) {
        rngs.emplace_back(requests[static_cast<std::size_t>(j)].seed);
        codes.push_back(encode_caption(requests[static_cast<std::size_t>(j)].caption));
        for (int i = 0; i < n; ++i) x(i, j) = normal(rngs.back());
    }

    Matrix<S> X(cfg.input_dim(), B);
    for (int t = sched.T - 1; t >= 0; --t) {
        for (Eigen::Index j = 0; j < B; ++j)
            write_input_column(X, j, cfg, x.col(j).cast<S>(), t, sched.T, codes[static_cast<std::size_t>(j)]);
        Matrix<double> eps_hat;
        try {
            const auto c = output_coefficients(cfg.output, sched.alpha_bar[static_cast<std::size_t>(t)]);
            eps_hat = to_noise_prediction(forward(params, X), X, std::vector<OutputCoefficients>(X.cols(), c))
                          .template cast<double>();
        } catch (const NumericError&) {
            throw NumericDivergence("ddpm_sample: non-finite network output", t);
        }
        const auto ts = static_cast<std::size_t>(t);
        const double ab = sched.alpha_bar[ts];
        const double ab_prev = t > 0 ? sched.alpha_bar[ts - 1] : 1.0;
        const double beta = sched.beta[ts];
        const double c0 = beta * std::sqrt(ab_prev) / (1.0 - ab);
        const double ct = (1.0 - ab_prev) * std::sqrt(1.0 - beta) / (1.0 - ab);
        const double sigma = std::sqrt(beta * (1.0 - ab_prev) / (1.0 - ab));
        for (Eigen::Index j = 0; j < B; ++j)
            for (int i = 0; i < n; ++i) {
                double x0 = std::clamp((x(i, j) - std::sqrt(1.0 - ab) * eps_hat(i, j)) / std::sqrt(ab), -1.0, 1.0);
                double mean = c0 * x0 + ct * x(i, j);
                x(i, j) = t > 0 ? mean + sigma * normal(rngs[static_cast<std::size_t>(j)]) : mean;
            }
        if (!x.allFinite()) throw NumericDivergence("ddpm_sample: non-finite sample", t);
    }

    std::vector<Image> out;
    for (Eigen::Index j = 0; j < B; ++j) {
        Image img(cfg.image);
        for (int i = 0; i < n; ++i) img.data[static_cast<std::size_t>(i)] = std::clamp(x(i, j), -1.0, 1.0);
        out.push_back(std::move(img));
    }
    return out;
}

template <class S>
Image ddpm_sample(const DenoiserParams<S>& params, const Caption& caption, const DiffusionSchedule& sched,
                  std::uint64_t seed) {
    return ddpm_sample_batch(params, {SampleRequest{caption, seed}}, sched).front();
}

}  // namespace bidpo
