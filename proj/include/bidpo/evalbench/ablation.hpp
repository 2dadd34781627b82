#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "bidpo/datapipe/pipeline.hpp"
#include "bidpo/evalbench/evaluate.hpp"
#include "bidpo/net/checkpoint.hpp"
#include "bidpo/trainer/trainer.hpp"

namespace bidpo {

/// Captioned renders over the whole grammar (all dimensions equally often),
/// used to pretrain the base model. Prompts whose content key is in
/// `exclude` are skipped.
inline std::vector<CaptionedImage> pretrain_corpus(int n, std::uint64_t seed, double jitter = 0.05,
                                                   const std::set<std::string>& exclude = {},
                                                   const LayoutConfig& layout = {}) {
    std::vector<CaptionedImage> out;
    Rng rng(seed);
    while (static_cast<int>(out.size()) < n) {
        auto d = static_cast<Dimension>(uniform_int(rng, 0, kDimensionCount - 1));
        Caption c = caption_sampler().sample(d, rng);
        std::uint64_t s = rng();
        if (exclude.count(content_key(c))) continue;
        out.push_back({render(scene_for(c, s, layout), derive_seed(s, 1), jitter, ImageShape{layout.grid, 3}), c});
    }
    return out;
}

/// Row label for the pretrained model without preference tuning.
inline constexpr const char* kBaselineRow = "baseline";

inline std::vector<std::string> ablation_row_names() {
    std::vector<std::string> out{kBaselineRow};
    for (Method m : kAllMethods) out.push_back(to_string(m));
    return out;
}

struct AblationConfig {
    /// Per-row training config; `method` is set per row.
    TrainConfig train{};
    /// Rows to run, in order; any of ablation_row_names().
    std::vector<std::string> rows = ablation_row_names();
    int samples_per_prompt = 8;
    std::uint64_t eval_seed = 0;
    /// Base-model pretraining (skipped when a base is supplied).
    int pretrain_steps = 4000;
    int pretrain_corpus_size = 4000;
    double pretrain_lr = 1e-3;
    int pretrain_batch = 64;
    double pretrain_min_snr = 0;
};

inline nlohmann::json to_json(const AblationConfig& c) {
    return {{"train", to_json(c.train)},
            {"rows", c.rows},
            {"samples_per_prompt", c.samples_per_prompt},
            {"eval_seed", c.eval_seed},
            {"pretrain_steps", c.pretrain_steps},
            {"pretrain_corpus_size", c.pretrain_corpus_size},
            {"pretrain_lr", c.pretrain_lr},
            {"pretrain_batch", c.pretrain_batch},
            {"pretrain_min_snr", c.pretrain_min_snr}};
}

inline AblationConfig ablation_config_from_json(const nlohmann::json& j) {
    AblationConfig c;
    try {
        if (j.contains("train")) c.train = train_config_from_json(j.at("train"));
        if (j.contains("rows")) c.rows = j.at("rows").get<std::vector<std::string>>();
        c.samples_per_prompt = j.value("samples_per_prompt", c.samples_per_prompt);
        c.eval_seed = j.value("eval_seed", c.eval_seed);
        c.pretrain_steps = j.value("pretrain_steps", c.pretrain_steps);
        c.pretrain_corpus_size = j.value("pretrain_corpus_size", c.pretrain_corpus_size);
        c.pretrain_lr = j.value("pretrain_lr", c.pretrain_lr);
        c.pretrain_batch = j.value("pretrain_batch", c.pretrain_batch);
        c.pretrain_min_snr = j.value("pretrain_min_snr", c.pretrain_min_snr);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(FormatError::Kind::malformed_record, std::string("ablation config: ") + e.what());
    }
    const auto names = ablation_row_names();
    for (const auto& r : c.rows)
        if (std::find(names.begin(), names.end(), r) == names.end()) throw InvalidRange("unknown ablation row '" + r + "'");
    if (c.samples_per_prompt < 1 || c.pretrain_steps < 0 || c.pretrain_corpus_size < 1 || c.pretrain_batch < 1)
        throw InvalidRange("ablation config: counts must be positive");
    return c;
}

struct AblationRow {
    std::string method;
    bool ok = false;
    std::string error;
    Scorecard card;
    std::uint32_t params_checksum = 0;

    bool operator==(const AblationRow&) const = default;
};

struct AblationReport {
    std::vector<AblationRow> rows;
    std::vector<Caption> prompts;
    std::uint64_t eval_seed = 0;
    int samples_per_prompt = 0;
    std::uint32_t base_checksum = 0;

    [[nodiscard]] const AblationRow* row(const std::string& name) const {
        for (const auto& r : rows)
            if (r.method == name) return &r;
        return nullptr;
    }
    [[nodiscard]] bool any_failed() const {
        for (const auto& r : rows)
            if (!r.ok) return true;
        return false;
    }
    bool operator==(const AblationReport&) const = default;
};

/// Base model: epsilon-MSE pretraining on a grammar corpus that avoids the
/// evaluation prompts.
template <class S>
DenoiserParams<S> pretrain_base(const AblationConfig& cfg, const std::set<std::string>& exclude) {
    TrainConfig pc = cfg.train;
    pc.method = Method::sft;
    pc.steps = cfg.pretrain_steps;
    pc.learning_rate = cfg.pretrain_lr;
    pc.batch_size = cfg.pretrain_batch;
    auto corpus = pretrain_corpus(cfg.pretrain_corpus_size, derive_seed(cfg.train.seed, 404), 0.05, exclude,
                                  LayoutConfig{cfg.train.net.image.grid, 6, 2});
    return train_denoiser<S>(pc, corpus, std::nullopt, {}, cfg.pretrain_min_snr).params;
}

/// Trains every requested row from the same base and seed, then scores each
/// on the same prompts and sample seeds. A row that throws is recorded as
/// failed. When `out_dir` is given, each row's checkpoint and metrics land
/// there.
template <class S>
AblationReport run_ablation(const AblationConfig& cfg, const std::vector<PreferencePair>& dataset,
                            const std::vector<Caption>& prompts, const std::optional<std::filesystem::path>& out_dir,
                            std::optional<DenoiserParams<S>> base = std::nullopt) {
    const auto train_keys = caption_keys(dataset);
    for (const auto& p : prompts)
        if (train_keys.count(content_key(p)))
            throw InvalidRange("run_ablation: prompt '" + to_text(p) + "' appears in the training data");
    if (out_dir) std::filesystem::create_directories(*out_dir);
    if (!base) {
        std::set<std::string> exclude;
        for (const auto& p : prompts) exclude.insert(content_key(p));
        base = pretrain_base<S>(cfg, exclude);
    }
    const auto sched = cfg.train.schedule.build();
    AblationReport report;
    report.prompts = prompts;
    report.eval_seed = cfg.eval_seed;
    report.samples_per_prompt = cfg.samples_per_prompt;
    report.base_checksum = params_checksum(*base);
    for (const auto& name : cfg.rows) {
        AblationRow row;
        row.method = name;
        try {
            DenoiserParams<S> params = *base;
            if (name != kBaselineRow) {
                TrainConfig tc = cfg.train;
                tc.method = parse_method(name);
                auto res = train<S>(tc, dataset, *base);
                params = std::move(res.params);
                if (out_dir) atomic_write(*out_dir / (name + ".metrics.jsonl"), metrics_jsonl(res.log));
            }
            if (out_dir) save_checkpoint(params, *out_dir / (name + ".ckpt"));
            row.params_checksum = params_checksum(params);
            row.card = evaluate(params, prompts, cfg.samples_per_prompt, sched, cfg.eval_seed, &train_keys);
            row.ok = true;
        } catch (const std::exception& e) {
            row.ok = false;
            row.error = e.what();
        }
        report.rows.push_back(std::move(row));
    }
    return report;
}

}  // namespace bidpo
