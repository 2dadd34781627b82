#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "bidpo/datapipe/pair.hpp"
#include "bidpo/io.hpp"
#include "bidpo/losses/losses.hpp"
#include "bidpo/trainer/config.hpp"
#include "json.hpp"

namespace bidpo {

// ---------------------------------------------------------------------------
// Optimizers
// ---------------------------------------------------------------------------

inline double warmup_lr(long step, double base_lr, long warmup_steps) {
    if (step < 0) throw InvalidRange("warmup_lr: step must be >= 0");
    if (warmup_steps <= 0 || step >= warmup_steps) return base_lr;
    return base_lr * static_cast<double>(step) / static_cast<double>(warmup_steps);
}

template <class S>
struct AdamState {
    Gradients<S> m;
    Gradients<S> v;
    long step = 0;

    static AdamState zeros_like(const DenoiserParams<S>& p) {
        return AdamState{Gradients<S>::zeros_like(p), Gradients<S>::zeros_like(p), 0};
    }
};

/// Textbook Adam with bias correction, elementwise over every weight.
template <class S>
void adam_step(DenoiserParams<S>& params, const Gradients<S>& grads, AdamState<S>& state, double lr,
               const AdamHyper& h = {}) {
    if (state.m.layers.size() != params.layers.size()) state = AdamState<S>::zeros_like(params);
    if (grads.layers.size() != params.layers.size()) throw ShapeMismatch("adam_step: gradient layer count differs");
    ++state.step;
    const double c1 = 1.0 - std::pow(h.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(h.beta2, static_cast<double>(state.step));
    auto update = [&](auto& w, const auto& g, auto& m, auto& v) {
        if (w.size() != g.size()) throw ShapeMismatch("adam_step: gradient shape differs");
        for (Eigen::Index i = 0; i < w.size(); ++i) {
            const double gi = static_cast<double>(g.data()[i]);
            double mi = h.beta1 * static_cast<double>(m.data()[i]) + (1 - h.beta1) * gi;
            double vi = h.beta2 * static_cast<double>(v.data()[i]) + (1 - h.beta2) * gi * gi;
            m.data()[i] = static_cast<S>(mi);
            v.data()[i] = static_cast<S>(vi);
            double step = lr * (mi / c1) / (std::sqrt(vi / c2) + h.eps);
            w.data()[i] = static_cast<S>(static_cast<double>(w.data()[i]) - step);
        }
    };
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        update(params.layers[l].W, grads.layers[l].W, state.m.layers[l].W, state.v.layers[l].W);
        update(params.layers[l].b, grads.layers[l].b, state.m.layers[l].b, state.v.layers[l].b);
    }
}

template <class S>
void sgd_step(DenoiserParams<S>& params, const Gradients<S>& grads, double lr) {
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        params.layers[l].W -= static_cast<S>(lr) * grads.layers[l].W;
        params.layers[l].b -= static_cast<S>(lr) * grads.layers[l].b;
    }
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

struct StepRecord {
    long step = 0;
    double loss = 0;
    double grad_norm = 0;
    /// Mean sigma argument over the step's contrasts (0 for sft).
    double margin = 0;
    double lr = 0;
    bool operator==(const StepRecord&) const = default;
};

struct EvalRecord {
    long step = 0;
    std::map<std::string, double> scores;
    bool operator==(const EvalRecord&) const = default;
};

struct MetricsLog {
    std::vector<StepRecord> steps;
    std::vector<EvalRecord> evals;
    bool operator==(const MetricsLog&) const = default;
};

inline std::string metrics_jsonl(const MetricsLog& log) {
    std::string out;
    std::size_t e = 0;
    auto flush_evals = [&](long upto) {
        for (; e < log.evals.size() && log.evals[e].step <= upto; ++e)
            out += nlohmann::json{{"step", log.evals[e].step}, {"eval", log.evals[e].scores}}.dump() + "\n";
    };
    for (const auto& r : log.steps) {
        flush_evals(r.step - 1);
        out += nlohmann::json{{"step", r.step}, {"loss", r.loss}, {"grad_norm", r.grad_norm}, {"margin", r.margin},
                              {"lr", r.lr}}
                   .dump() +
               "\n";
    }
    flush_evals(std::numeric_limits<long>::max());
    return out;
}

inline MetricsLog parse_metrics_jsonl(const std::string& text) {
    MetricsLog log;
    std::size_t pos = 0;
    long line_no = 0;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        std::string line = text.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
        pos = nl == std::string::npos ? text.size() : nl + 1;
        ++line_no;
        if (line.empty()) continue;
        try {
            auto j = nlohmann::json::parse(line);
            if (j.contains("eval")) {
                log.evals.push_back({j.at("step").get<long>(), j.at("eval").get<std::map<std::string, double>>()});
            } else {
                log.steps.push_back({j.at("step").get<long>(), j.at("loss").get<double>(),
                                     j.at("grad_norm").get<double>(), j.at("margin").get<double>(),
                                     j.at("lr").get<double>()});
            }
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(FormatError::Kind::malformed_record, std::string("metrics: ") + e.what(), line_no);
        }
    }
    return log;
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

/// Periodic callback (e.g. oracle evaluation) run every `interval` steps and
/// after the last step.
template <class S>
struct EvalHook {
    int interval = 0;
    std::function<std::map<std::string, double>(const DenoiserParams<S>&, long step)> fn;
};

template <class S>
struct TrainResult {
    DenoiserParams<S> params;
    DenoiserParams<S> reference;
    MetricsLog log;
};

/// Image/caption sample for plain epsilon-MSE training.
struct CaptionedImage {
    Image x0;
    Caption caption;
};

namespace detail {

/// Loss terms for one batch item of `method`. Every item contributes with
/// weight 1/B so the batch loss is a mean over pairs.
inline void add_batch_terms(Method method, const PreferencePair& p, int t, const Image& eps_w, const Image& eps_l,
                            double beta, double scale, const DiffusionSchedule& sched, std::vector<Contrast>& contrasts,
                            std::vector<Regression>& regressions) {
    switch (method) {
        case Method::sft:
            regressions.push_back({make_branch(p.x0_w, eps_w, t, p.y_w, std::nullopt, sched), scale});
            break;
        case Method::image_dpo: {
            // shared noise for both images, as in diffusion DPO
            LossBatchItem item{&p, t, eps_w, eps_w, beta};
            contrasts.push_back(diffusion_dpo_contrast(item, sched, scale));
            break;
        }
        case Method::text_dpo:
            contrasts.push_back(text_dpo_contrast(p.x0_w, p.y_w, p.y_l, t, eps_w, beta, sched, std::nullopt,
                                                  std::nullopt, scale));
            break;
        case Method::bidpo:
        case Method::bidpo_region:
            for (auto& c : bidpo_contrasts(p, t, eps_w, eps_l, beta, sched, method == Method::bidpo_region, scale))
                contrasts.push_back(std::move(c));
            break;
    }
}

template <class S>
using BatchBuilder = std::function<void(Rng&, std::vector<Contrast>&, std::vector<Regression>&)>;

template <class S>
TrainResult<S> run_loop(const TrainConfig& cfg, DenoiserParams<S> init, const BatchBuilder<S>& build,
                        const EvalHook<S>& hook) {
    cfg.validate();
    if (!(init.config == cfg.net)) throw ShapeMismatch("train: initial parameters do not match config.net");
    const auto sched = cfg.schedule.build();
    TrainResult<S> res;
    res.reference = clone_frozen(init);
    res.params = std::move(init);
    res.params.trainable = true;
    auto adam = AdamState<S>::zeros_like(res.params);
    Rng rng(derive_seed(cfg.seed, 1));
    auto maybe_eval = [&](long step) {
        if (hook.fn) res.log.evals.push_back({step, hook.fn(res.params, step)});
    };
    for (long step = 1; step <= cfg.steps; ++step) {
        std::vector<Contrast> contrasts;
        std::vector<Regression> regressions;
        build(rng, contrasts, regressions);
        LossOutput<S> out;
        try {
            out = composite_loss(res.params, res.reference, contrasts, regressions, sched);
        } catch (const NumericError& e) {
            throw NumericDivergence(std::string("train: ") + e.what(), step);
        }
        if (!std::isfinite(out.value)) throw NumericDivergence("train: non-finite loss", step);
        auto grads = backward(res.params, out.tape);
        const double gn = grads.norm();
        if (!std::isfinite(gn)) throw NumericDivergence("train: non-finite gradient", step);
        const double lr = warmup_lr(step, cfg.learning_rate, cfg.warmup_steps);
        if (cfg.optimizer == OptimizerKind::adam)
            adam_step(res.params, grads, adam, lr, cfg.adam);
        else
            sgd_step(res.params, grads, lr);
        res.log.steps.push_back({step, out.value, gn, out.margin, lr});
        if (hook.interval > 0 && step % hook.interval == 0 && step != cfg.steps) maybe_eval(step);
    }
    if (hook.fn) maybe_eval(cfg.steps);
    return res;
}

}  // namespace detail

template <class S>
DenoiserParams<S> initial_params(const TrainConfig& cfg) {
    return init_params<S>(cfg.net, derive_seed(cfg.seed, 0));
}

/// Preference training of `method` from `init` (or a fresh network seeded
/// from cfg.seed). The reference network is a frozen copy of `init` taken
/// before the first step. Each step draws batch_size pairs uniformly with
/// replacement and fresh (t, noise) per pair.
template <class S>
TrainResult<S> train(const TrainConfig& cfg, const std::vector<PreferencePair>& dataset,
                     std::optional<DenoiserParams<S>> init = std::nullopt, const EvalHook<S>& hook = {}) {
    if (dataset.empty()) throw InvalidRange("train: empty dataset");
    for (const auto& p : dataset)
        if (!(p.x0_w.shape == cfg.net.image) || !(p.x0_l.shape == cfg.net.image))
            throw ShapeMismatch("train: dataset image shape differs from config.net");
    const auto sched = cfg.schedule.build();
    const ImageShape shape = cfg.net.image;
    const double scale = 1.0 / cfg.batch_size;
    detail::BatchBuilder<S> build = [&](Rng& rng, std::vector<Contrast>& cs, std::vector<Regression>& rs) {
        std::uniform_int_distribution<std::size_t> pick(0, dataset.size() - 1);
        for (int b = 0; b < cfg.batch_size; ++b) {
            const auto& p = dataset[pick(rng)];
            int t = uniform_int(rng, 0, sched.T - 1);
            Image eps_w = gaussian_image(shape, rng);
            Image eps_l = gaussian_image(shape, rng);
            detail::add_batch_terms(cfg.method, p, t, eps_w, eps_l, cfg.beta, scale, sched, cs, rs);
        }
    };
    return detail::run_loop<S>(cfg, init ? std::move(*init) : initial_params<S>(cfg), build, hook);
}

/// Weight min(snr, gamma) / snr on the epsilon-MSE at step t, where
/// snr = ab / (1 - ab). gamma <= 0 means no weighting.
inline double min_snr_weight(const DiffusionSchedule& sched, int t, double gamma) {
    if (gamma <= 0) return 1.0;
    const double ab = sched.alpha_bar[static_cast<std::size_t>(t)];
    const double snr = ab / (1.0 - ab);
    return std::min(snr, gamma) / snr;
}

/// Epsilon-MSE training on captioned images (used to build a base model
/// before preference tuning), optionally min-SNR weighted. cfg.method is
/// ignored.
template <class S>
TrainResult<S> train_denoiser(const TrainConfig& cfg, const std::vector<CaptionedImage>& data,
                              std::optional<DenoiserParams<S>> init = std::nullopt, const EvalHook<S>& hook = {},
                              double min_snr_gamma = 0) {
    if (data.empty()) throw InvalidRange("train: empty dataset");
    const auto sched = cfg.schedule.build();
    const ImageShape shape = cfg.net.image;
    const double scale = 1.0 / cfg.batch_size;
    detail::BatchBuilder<S> build = [&](Rng& rng, std::vector<Contrast>&, std::vector<Regression>& rs) {
        std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
        for (int b = 0; b < cfg.batch_size; ++b) {
            const auto& d = data[pick(rng)];
            int t = uniform_int(rng, 0, sched.T - 1);
            Image eps = gaussian_image(shape, rng);
            rs.push_back({make_branch(d.x0, eps, t, d.caption, std::nullopt, sched),
                          scale * min_snr_weight(sched, t, min_snr_gamma)});
        }
    };
    return detail::run_loop<S>(cfg, init ? std::move(*init) : initial_params<S>(cfg), build, hook);
}

}  // namespace bidpo
