#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "bidpo/common.hpp"

namespace bidpo {

enum class OmegaMode { constant, snr };

inline std::string to_string(OmegaMode m) { return m == OmegaMode::constant ? "constant" : "snr"; }
inline OmegaMode parse_omega_mode(const std::string& s) {
    if (s == "constant") return OmegaMode::constant;
    if (s == "snr") return OmegaMode::snr;
    throw InvalidRange("unknown omega mode '" + s + "'");
}

/// Discrete forward process: per-step variances, cumulative signal fraction,
/// log-SNR and the loss weighting mode.
struct DiffusionSchedule {
    int T = 0;
    std::vector<double> beta;
    std::vector<double> alpha_bar;
    std::vector<double> lambda_log_snr;
    OmegaMode omega_mode = OmegaMode::constant;
    double omega_clip = 5.0;

    void check_step(int t) const {
        if (t < 0 || t >= T) throw InvalidRange("diffusion step " + std::to_string(t) + " outside [0, T)");
    }
};

/// Linear beta schedule from beta_start to beta_end over T steps.
inline DiffusionSchedule make_schedule(int T, double beta_start, double beta_end,
                                       OmegaMode omega_mode = OmegaMode::constant, double omega_clip = 5.0) {
    if (T < 1) throw InvalidRange("make_schedule: T must be >= 1");
    if (!(beta_start > 0) || !(beta_start <= beta_end) || !(beta_end < 1))
        throw InvalidRange("make_schedule: need 0 < beta_start <= beta_end < 1");
    if (!(omega_clip > 0)) throw InvalidRange("make_schedule: omega_clip must be positive");
    DiffusionSchedule s;
    s.T = T;
    s.omega_mode = omega_mode;
    s.omega_clip = omega_clip;
    s.beta.resize(static_cast<std::size_t>(T));
    s.alpha_bar.resize(static_cast<std::size_t>(T));
    s.lambda_log_snr.resize(static_cast<std::size_t>(T));
    double prod = 1.0;
    for (int t = 0; t < T; ++t) {
        double b = T == 1 ? beta_start : beta_start + (beta_end - beta_start) * t / (T - 1);
        s.beta[static_cast<std::size_t>(t)] = b;
        prod *= 1.0 - b;
        s.alpha_bar[static_cast<std::size_t>(t)] = prod;
        s.lambda_log_snr[static_cast<std::size_t>(t)] = std::log(prod / (1.0 - prod));
    }
    return s;
}

/// Desk default: betas scaled by 1000/T so the last step is close to pure noise.
inline DiffusionSchedule default_schedule(int T = 100, OmegaMode mode = OmegaMode::constant) {
    double k = 1000.0 / T;
    return make_schedule(T, std::min(1e-4 * k, 0.5), std::min(0.02 * k, 0.999), mode);
}

/// x_t = sqrt(alpha_bar[t]) x0 + sqrt(1 - alpha_bar[t]) eps
inline Image q_sample(const Image& x0, int t, const Image& eps, const DiffusionSchedule& sched) {
    require_same_shape(x0, eps, "q_sample");
    sched.check_step(t);
    double a = std::sqrt(sched.alpha_bar[static_cast<std::size_t>(t)]);
    double s = std::sqrt(1.0 - sched.alpha_bar[static_cast<std::size_t>(t)]);
    Image out(x0.shape);
    for (std::size_t i = 0; i < x0.data.size(); ++i) out.data[i] = a * x0.data[i] + s * eps.data[i];
    return out;
}

/// Loss weight omega(lambda_t).
inline double omega(const DiffusionSchedule& sched, int t) {
    sched.check_step(t);
    if (sched.omega_mode == OmegaMode::constant) return 1.0;
    return std::min(std::exp(sched.lambda_log_snr[static_cast<std::size_t>(t)]), sched.omega_clip);
}

}  // namespace bidpo
