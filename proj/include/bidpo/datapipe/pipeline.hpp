#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "bidpo/datapipe/build.hpp"
#include "bidpo/io.hpp"
#include "json.hpp"

namespace bidpo {

/// Edited-image counts per dimension in the reference preference corpus
/// (color, shape, texture, spatial, numeracy); used as the default mix.
inline constexpr std::array<double, kDimensionCount> kReferenceMix{46006, 8473, 17345, 7919, 11112};

struct PipelineConfig {
    std::vector<Dimension> dims{kAllDimensions.begin(), kAllDimensions.end()};
    /// Pairs requested per dimension; ignored when `total` > 0.
    int count_per_dim = 100;
    /// Total pairs split across `dims` in proportion to kReferenceMix.
    int total = 0;
    std::uint64_t seed = 0;
    double jitter = 0.05;
    double corruption_rate = 0.0;

    bool operator==(const PipelineConfig&) const = default;
};

struct DatasetManifest {
    std::array<int, kDimensionCount> requested{};
    std::array<int, kDimensionCount> realized{};
    /// Captions drawn per dimension.
    std::array<int, kDimensionCount> captions{};
    /// Pairs rejected while building (VQA-inconsistent renders).
    std::array<int, kDimensionCount> build_discarded{};
    FilterStats filter{};
    std::uint32_t config_hash = 0;

    bool operator==(const DatasetManifest&) const = default;
};

/// Largest-remainder split of `total` in proportion to the reference mix.
inline std::array<int, kDimensionCount> mix_counts(int total, const std::vector<Dimension>& dims) {
    std::array<int, kDimensionCount> out{};
    if (dims.empty() || total <= 0) return out;
    double wsum = 0;
    for (Dimension d : dims) wsum += kReferenceMix[static_cast<std::size_t>(d)];
    std::vector<std::pair<double, Dimension>> rema;
    int assigned = 0;
    for (Dimension d : dims) {
        double exact = total * kReferenceMix[static_cast<std::size_t>(d)] / wsum;
        int base = static_cast<int>(std::floor(exact));
        out[static_cast<std::size_t>(d)] = base;
        assigned += base;
        rema.emplace_back(exact - base, d);
    }
    std::stable_sort(rema.begin(), rema.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    for (int i = 0; assigned < total; ++i, ++assigned) ++out[static_cast<std::size_t>(rema[static_cast<std::size_t>(i)].second)];
    return out;
}

struct PipelineResult {
    std::vector<PreferencePair> pairs;
    DatasetManifest manifest;
};

inline nlohmann::json to_json(const PipelineConfig& cfg) {
    nlohmann::json dims = nlohmann::json::array();
    for (Dimension d : cfg.dims) dims.push_back(to_string(d));
    return {{"dims", dims},
            {"count_per_dim", cfg.count_per_dim},
            {"total", cfg.total},
            {"seed", cfg.seed},
            {"jitter", cfg.jitter},
            {"corruption_rate", cfg.corruption_rate}};
}

inline std::uint32_t pipeline_config_hash(const PipelineConfig& cfg) { return crc32_of(to_json(cfg).dump()); }

/// Grammar sampling -> editing -> paired rendering -> VQA filtering.
/// Output order is deterministic: dimensions in `cfg.dims` order, captions in
/// draw order, edits in edit_caption order.
inline PipelineResult run_pipeline(const PipelineConfig& cfg, const DetectConfig& detect_cfg = {}) {
    if (cfg.count_per_dim < 0 || cfg.total < 0) throw InvalidRange("pipeline: counts must be non-negative");
    if (!(cfg.jitter >= 0 && cfg.jitter <= 0.1)) throw InvalidRange("pipeline: jitter must lie in [0, 0.1]");
    PipelineResult res;
    auto& m = res.manifest;
    if (cfg.total > 0) {
        m.requested = mix_counts(cfg.total, cfg.dims);
    } else {
        for (Dimension d : cfg.dims) m.requested[static_cast<std::size_t>(d)] = cfg.count_per_dim;
    }
    std::vector<PreferencePair> built;
    for (Dimension d : cfg.dims) {
        const auto di = static_cast<std::size_t>(d);
        int have = 0;
        const int want = m.requested[di];
        Rng rng(derive_seed(cfg.seed, 1000 + di));
        for (int attempt = 0; have < want; ++attempt) {
            if (attempt > 10 * want + 100) break;  // grammar cannot supply more
            std::uint64_t cseed = rng();
            Caption cap = caption_sampler().sample(d, rng);
            ++m.captions[di];
            for (const auto& e : edit_caption(cap, derive_seed(cseed, 1))) {
                if (have >= want) break;
                try {
                    built.push_back(build_pair(cap, e, derive_seed(cseed, 2), cfg.jitter));
                    ++have;
                } catch (const VqaInconsistency&) {
                    ++m.build_discarded[di];
                }
            }
        }
    }
    auto filtered = filter_pairs(built, cfg.corruption_rate, derive_seed(cfg.seed, 99), detect_cfg);
    m.filter = filtered.stats;
    m.realized = filtered.stats.kept;
    m.config_hash = pipeline_config_hash(cfg);
    res.pairs = std::move(filtered.kept);
    return res;
}

/// Content keys of every caption (winner and loser) in a dataset.
inline std::set<std::string> caption_keys(const std::vector<PreferencePair>& pairs) {
    std::set<std::string> keys;
    for (const auto& p : pairs) keys.insert(content_key(p.y_w)), keys.insert(content_key(p.y_l));
    return keys;
}

}  // namespace bidpo
