#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "bidpo/diffusion/schedule.hpp"
#include "bidpo/io.hpp"
#include "bidpo/net/params.hpp"
#include "json.hpp"

namespace bidpo {

enum class Method { sft, image_dpo, text_dpo, bidpo, bidpo_region };
inline constexpr std::array<Method, 5> kAllMethods{Method::sft, Method::image_dpo, Method::text_dpo, Method::bidpo,
                                                   Method::bidpo_region};

inline std::string to_string(Method m) {
    switch (m) {
        case Method::sft: return "sft";
        case Method::image_dpo: return "image_dpo";
        case Method::text_dpo: return "text_dpo";
        case Method::bidpo: return "bidpo";
        case Method::bidpo_region: return "bidpo_region";
    }
    return "?";
}

inline Method parse_method(const std::string& s) {
    for (Method m : kAllMethods)
        if (to_string(m) == s) return m;
    throw InvalidRange("unknown method '" + s + "'");
}

enum class OptimizerKind { sgd, adam };

inline std::string to_string(OptimizerKind o) { return o == OptimizerKind::sgd ? "sgd" : "adam"; }
inline OptimizerKind parse_optimizer(const std::string& s) {
    if (s == "sgd") return OptimizerKind::sgd;
    if (s == "adam") return OptimizerKind::adam;
    throw InvalidRange("unknown optimizer '" + s + "'");
}

struct AdamHyper {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    bool operator==(const AdamHyper&) const = default;
};

struct ScheduleConfig {
    int T = 100;
    /// Defaults follow default_schedule(T): DDPM betas scaled by 1000/T.
    double beta_start = 1e-3;
    double beta_end = 0.2;
    OmegaMode omega_mode = OmegaMode::constant;
    double omega_clip = 5.0;

    [[nodiscard]] DiffusionSchedule build() const {
        return make_schedule(T, beta_start, beta_end, omega_mode, omega_clip);
    }
    bool operator==(const ScheduleConfig&) const = default;
};

inline constexpr int kTrainConfigVersion = 1;

struct TrainConfig {
    Method method = Method::bidpo;
    int steps = 2000;
    int batch_size = 64;
    double learning_rate = 1e-3;
    int warmup_steps = 50;
    double beta = 0.1;
    OptimizerKind optimizer = OptimizerKind::adam;
    AdamHyper adam{};
    std::uint64_t seed = 0;
    ScheduleConfig schedule{};
    NetConfig net{};

    void validate() const {
        if (steps < 0) throw InvalidRange("train config: steps must be >= 0");
        if (batch_size < 1) throw InvalidRange("train config: batch_size must be positive");
        if (!(learning_rate > 0) || !std::isfinite(learning_rate))
            throw InvalidRange("train config: learning_rate must be positive");
        if (warmup_steps < 0) throw InvalidRange("train config: warmup_steps must be >= 0");
        if (!(beta > 0) || !std::isfinite(beta)) throw InvalidRange("train config: beta must be positive");
        if (!(adam.beta1 >= 0 && adam.beta1 < 1) || !(adam.beta2 >= 0 && adam.beta2 < 1) || !(adam.eps > 0))
            throw InvalidRange("train config: adam hyperparameters out of range");
        net.validate();
        (void)schedule.build();
    }
    bool operator==(const TrainConfig&) const = default;
};

inline nlohmann::json to_json(const NetConfig& n) {
    return {{"grid", n.image.grid},   {"channels", n.image.channels}, {"time_dim", n.time_dim},
            {"hidden", n.hidden},     {"depth", n.depth},             {"activation", to_string(n.activation)},
            {"output", to_string(n.output)}};
}

inline NetConfig net_config_from_json(const nlohmann::json& j, NetConfig n = {}) {
    n.image.grid = j.value("grid", n.image.grid);
    n.image.channels = j.value("channels", n.image.channels);
    n.time_dim = j.value("time_dim", n.time_dim);
    n.hidden = j.value("hidden", n.hidden);
    n.depth = j.value("depth", n.depth);
    if (j.contains("activation")) n.activation = parse_activation(j.at("activation").get<std::string>());
    if (j.contains("output")) n.output = parse_parameterization(j.at("output").get<std::string>());
    return n;
}

inline nlohmann::json to_json(const TrainConfig& c) {
    return {{"version", kTrainConfigVersion},
            {"method", to_string(c.method)},
            {"steps", c.steps},
            {"batch_size", c.batch_size},
            {"learning_rate", c.learning_rate},
            {"warmup_steps", c.warmup_steps},
            {"beta", c.beta},
            {"optimizer", to_string(c.optimizer)},
            {"adam", {{"beta1", c.adam.beta1}, {"beta2", c.adam.beta2}, {"eps", c.adam.eps}}},
            {"seed", c.seed},
            {"schedule",
             {{"T", c.schedule.T},
              {"beta_start", c.schedule.beta_start},
              {"beta_end", c.schedule.beta_end},
              {"omega", to_string(c.schedule.omega_mode)},
              {"omega_clip", c.schedule.omega_clip}}},
            {"net", to_json(c.net)}};
}

/// Missing keys keep their defaults. A `"region": true` flag is accepted only
/// together with method bidpo (it selects bidpo_region).
inline TrainConfig train_config_from_json(const nlohmann::json& j) {
    TrainConfig c;
    try {
        int version = j.value("version", kTrainConfigVersion);
        if (version != kTrainConfigVersion)
            throw FormatError(FormatError::Kind::version_mismatch,
                              "train config: version " + std::to_string(version) + " is not supported");
        if (j.contains("method")) c.method = parse_method(j.at("method").get<std::string>());
        if (j.value("region", false)) {
            if (c.method != Method::bidpo && c.method != Method::bidpo_region)
                throw InvalidRange("train config: region guidance requires method bidpo");
            c.method = Method::bidpo_region;
        }
        c.steps = j.value("steps", c.steps);
        c.batch_size = j.value("batch_size", c.batch_size);
        c.learning_rate = j.value("learning_rate", c.learning_rate);
        c.warmup_steps = j.value("warmup_steps", c.warmup_steps);
        c.beta = j.value("beta", c.beta);
        if (j.contains("optimizer")) c.optimizer = parse_optimizer(j.at("optimizer").get<std::string>());
        if (j.contains("adam")) {
            const auto& a = j.at("adam");
            c.adam.beta1 = a.value("beta1", c.adam.beta1);
            c.adam.beta2 = a.value("beta2", c.adam.beta2);
            c.adam.eps = a.value("eps", c.adam.eps);
        }
        c.seed = j.value("seed", c.seed);
        if (j.contains("schedule")) {
            const auto& s = j.at("schedule");
            c.schedule.T = s.value("T", c.schedule.T);
            c.schedule.beta_start = s.value("beta_start", c.schedule.beta_start);
            c.schedule.beta_end = s.value("beta_end", c.schedule.beta_end);
            if (s.contains("omega")) c.schedule.omega_mode = parse_omega_mode(s.at("omega").get<std::string>());
            c.schedule.omega_clip = s.value("omega_clip", c.schedule.omega_clip);
        }
        if (j.contains("net")) c.net = net_config_from_json(j.at("net"), c.net);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(FormatError::Kind::malformed_record, std::string("train config: ") + e.what());
    }
    c.validate();
    return c;
}

inline TrainConfig load_train_config(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(FormatError::Kind::malformed_record, "train config: " + std::string(e.what()));
    }
    return train_config_from_json(j);
}

}  // namespace bidpo
