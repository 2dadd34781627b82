#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "bidpo/datapipe/grammar.hpp"
#include "bidpo/diffusion/sampler.hpp"
#include "bidpo/toyworld/render.hpp"
#include "bidpo/toyworld/vqa.hpp"

namespace bidpo {

/// Oracle scores over a prompt set. Accuracy per dimension is the VQA pass
/// fraction of that dimension's samples; validity is the fraction of all
/// samples whose detected object count equals the prompt's.
struct Scorecard {
    std::array<int, kDimensionCount> prompts{};
    std::array<int, kDimensionCount> samples{};
    std::array<int, kDimensionCount> passes{};
    int valid = 0;
    int sample_count = 0;
    int samples_per_prompt = 0;
    std::uint64_t seed = 0;

    [[nodiscard]] std::optional<double> accuracy(Dimension d) const {
        auto i = static_cast<std::size_t>(d);
        if (samples[i] == 0) return std::nullopt;
        return static_cast<double>(passes[i]) / samples[i];
    }
    [[nodiscard]] double validity() const {
        return sample_count ? static_cast<double>(valid) / sample_count : 0.0;
    }
    /// Unweighted mean accuracy over the attribute dimensions that were scored.
    [[nodiscard]] std::optional<double> attribute_mean() const {
        double s = 0;
        int n = 0;
        for (Dimension d : kAttributeDimensions)
            if (auto a = accuracy(d)) s += *a, ++n;
        if (n == 0) return std::nullopt;
        return s / n;
    }
    bool operator==(const Scorecard&) const = default;
};

using ImageSampler = std::function<std::vector<Image>(const std::vector<SampleRequest>&)>;

/// DDPM samples from a trained network, in chunks of `batch`.
template <class S>
ImageSampler model_sampler(const DenoiserParams<S>& params, const DiffusionSchedule& sched, std::size_t batch = 128) {
    return [&params, sched, batch](const std::vector<SampleRequest>& reqs) {
        std::vector<Image> out;
        for (std::size_t i = 0; i < reqs.size(); i += batch) {
            std::vector<SampleRequest> chunk(reqs.begin() + static_cast<std::ptrdiff_t>(i),
                                             reqs.begin() + static_cast<std::ptrdiff_t>(std::min(reqs.size(), i + batch)));
            for (auto& img : ddpm_sample_batch(params, chunk, sched)) out.push_back(std::move(img));
        }
        return out;
    };
}

/// Ground-truth renders of each prompt (the oracle upper bound).
inline ImageSampler oracle_sampler(double jitter = 0.05, const LayoutConfig& layout = {}) {
    return [jitter, layout](const std::vector<SampleRequest>& reqs) {
        std::vector<Image> out;
        for (const auto& r : reqs)
            out.push_back(render(scene_for(r.caption, r.seed, layout), derive_seed(r.seed, 1), jitter,
                                 ImageShape{layout.grid, 3}));
        return out;
    };
}

/// Uniform noise in [-1, 1] (the chance floor).
inline ImageSampler noise_sampler(ImageShape shape = {}) {
    return [shape](const std::vector<SampleRequest>& reqs) {
        std::vector<Image> out;
        for (const auto& r : reqs) {
            Rng rng(r.seed);
            std::uniform_real_distribution<double> u(-1.0, 1.0);
            Image img(shape);
            for (double& v : img.data) v = u(rng);
            out.push_back(std::move(img));
        }
        return out;
    };
}

/// Seed of sample `s` of prompt `i`; shared by every evaluated model.
inline std::uint64_t eval_sample_seed(std::uint64_t seed, std::size_t prompt, int s, int samples_per_prompt) {
    return derive_seed(seed, prompt * static_cast<std::size_t>(samples_per_prompt) + static_cast<std::size_t>(s));
}

inline Scorecard evaluate(const ImageSampler& sampler, const std::vector<Caption>& prompts, int samples_per_prompt,
                          std::uint64_t seed, const std::set<std::string>* training_keys = nullptr,
                          const DetectConfig& detect_cfg = {}) {
    if (samples_per_prompt < 1) throw InvalidRange("evaluate: samples_per_prompt must be positive");
    std::vector<SampleRequest> reqs;
    for (std::size_t i = 0; i < prompts.size(); ++i) {
        validate(prompts[i]);
        if (training_keys && training_keys->count(content_key(prompts[i])))
            throw InvalidRange("evaluate: prompt '" + to_text(prompts[i]) + "' appears in the training data");
        for (int s = 0; s < samples_per_prompt; ++s)
            reqs.push_back({prompts[i], eval_sample_seed(seed, i, s, samples_per_prompt)});
    }
    auto images = sampler(reqs);
    if (images.size() != reqs.size()) throw ShapeMismatch("evaluate: sampler returned the wrong number of images");
    Scorecard card;
    card.samples_per_prompt = samples_per_prompt;
    card.seed = seed;
    for (const auto& p : prompts) ++card.prompts[static_cast<std::size_t>(parse_dimension(p))];
    for (std::size_t k = 0; k < reqs.size(); ++k) {
        const Caption& c = reqs[k].caption;
        auto d = static_cast<std::size_t>(parse_dimension(c));
        ++card.samples[d];
        ++card.sample_count;
        bool pass = false, valid = false;
        try {
            auto objs = detect_objects(images[k], detect_cfg);
            valid = static_cast<int>(objs.size()) == c.expected_object_count();
            pass = vqa_answer(objs, c).pass;
        } catch (const std::exception&) {
            // undetectable samples score 0
        }
        card.passes[d] += pass ? 1 : 0;
        card.valid += valid ? 1 : 0;
    }
    return card;
}

template <class S>
Scorecard evaluate(const DenoiserParams<S>& params, const std::vector<Caption>& prompts, int samples_per_prompt,
                   const DiffusionSchedule& sched, std::uint64_t seed,
                   const std::set<std::string>* training_keys = nullptr) {
    return evaluate(model_sampler(params, sched), prompts, samples_per_prompt, seed, training_keys);
}

/// `per_dim` grammar prompts per dimension whose content keys avoid
/// `exclude` (typically the training captions) and each other.
inline std::vector<Caption> held_out_prompts(const std::vector<Dimension>& dims, int per_dim, std::uint64_t seed,
                                             const std::set<std::string>& exclude = {}) {
    std::vector<Caption> out;
    std::set<std::string> used = exclude;
    for (Dimension d : dims) {
        Rng rng(derive_seed(seed, 500 + static_cast<std::size_t>(d)));
        const auto& table = caption_sampler().captions(d);
        int got = 0;
        for (std::size_t tries = 0; got < per_dim; ++tries) {
            if (tries > 50 * table.size()) throw InvalidRange("held_out_prompts: grammar exhausted for " + to_string(d));
            Caption c = caption_sampler().sample(d, rng);
            if (!used.insert(content_key(c)).second) continue;
            out.push_back(c);
            ++got;
        }
    }
    return out;
}

}  // namespace bidpo
