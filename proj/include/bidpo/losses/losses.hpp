#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "bidpo/datapipe/pair.hpp"
#include "bidpo/diffusion/schedule.hpp"
#include "bidpo/net/mlp.hpp"

namespace bidpo {

// ---------------------------------------------------------------------------
// Scalar pieces
// ---------------------------------------------------------------------------

/// sum over cells and channels of mask * (eps - eps_hat)^2; the mask is
/// per cell and broadcast over channels.
inline double masked_sq_err(const Image& eps, const Image& eps_hat, const RegionMask& mask) {
    require_same_shape(eps, eps_hat, "masked_sq_err");
    if (mask.grid != eps.shape.grid || mask.weights.size() != static_cast<std::size_t>(eps.shape.cells()))
        throw ShapeMismatch("masked_sq_err: mask grid differs from image grid");
    const int ch = eps.shape.channels;
    double s = 0;
    for (std::size_t i = 0; i < eps.data.size(); ++i) {
        double d = eps.data[i] - eps_hat.data[i];
        s += mask.weights[i / static_cast<std::size_t>(ch)] * (d * d);
    }
    return s;
}

inline double sq_err(const Image& eps, const Image& eps_hat) {
    require_same_shape(eps, eps_hat, "sq_err");
    double s = 0;
    for (std::size_t i = 0; i < eps.data.size(); ++i) {
        double d = eps.data[i] - eps_hat.data[i];
        s += d * d;
    }
    return s;
}

/// Numerically stable log(1 + exp(x)).
inline double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
inline double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

/// The four squared errors of one preference contrast. "w" is the preferred
/// branch, "l" the dispreferred one.
struct ContrastErrors {
    double theta_w = 0;
    double ref_w = 0;
    double theta_l = 0;
    double ref_l = 0;

    [[nodiscard]] double bracket() const { return (theta_w - ref_w) - (theta_l - ref_l); }
};

/// sigma argument  -k * [(theta_w - ref_w) - (theta_l - ref_l)],  k = beta T omega.
inline double dpo_sigma_argument(const ContrastErrors& e, double k) { return -k * e.bracket(); }

/// -log sigma(a)
inline double dpo_loss_from_errors(const ContrastErrors& e, double k) {
    return softplus(-dpo_sigma_argument(e, k));
}

inline double dpo_weight(const DiffusionSchedule& sched, int t, double beta) {
    return beta * sched.T * omega(sched, t);
}

// ---------------------------------------------------------------------------
// Batched contrast engine
// ---------------------------------------------------------------------------

/// One network evaluation inside a contrast: a noisy input x_t at step t,
/// the condition, the target noise and the per-cell weights (empty = none).
struct Branch {
    Image x_t;
    Image eps;
    int t = 0;
    Caption condition;
    std::optional<RegionMask> mask;
};

/// -log sigma(-k [(theta_w - ref_w) - (theta_l - ref_l)]) scaled by `scale`.
struct Contrast {
    Branch w;
    Branch l;
    double k = 1.0;
    double scale = 1.0;
};

/// One epsilon-MSE term: scale * ||eps - eps_theta||^2 / (G G C).
struct Regression {
    Branch branch;
    double scale = 1.0;
};

template <class S>
struct LossOutput {
    double value = 0;
    /// Mean sigma argument over contrasts (0 for pure regression losses).
    double margin = 0;
    Tape<S> tape;
};

namespace detail {

inline double branch_err(const Branch& b, const Image& pred) {
    return b.mask ? masked_sq_err(b.eps, pred, *b.mask) : sq_err(b.eps, pred);
}

template <class S>
Image column_image(const Matrix<S>& Y, Eigen::Index col, ImageShape shape) {
    Image img(shape);
    for (int i = 0; i < shape.size(); ++i) img.data[static_cast<std::size_t>(i)] = static_cast<double>(Y(i, col));
    return img;
}

template <class S>
Matrix<S> input_matrix(const NetConfig& cfg, const std::vector<const Branch*>& branches, int T) {
    Matrix<S> X(cfg.input_dim(), static_cast<Eigen::Index>(branches.size()));
    for (std::size_t j = 0; j < branches.size(); ++j) {
        const Branch& b = *branches[j];
        if (!(b.x_t.shape == cfg.image) || !(b.eps.shape == cfg.image))
            throw ShapeMismatch("loss: image shape differs from the network");
        Eigen::Map<const Vector<double>> x(b.x_t.data.data(), static_cast<Eigen::Index>(b.x_t.data.size()));
        write_input_column(X, static_cast<Eigen::Index>(j), cfg, x.cast<S>(), b.t, T, encode_caption(b.condition));
    }
    return X;
}

/// d/d eps_hat of the (masked) squared error, times `coef`.
template <class S>
void add_err_cotangent(Matrix<S>& cot, Eigen::Index col, const Branch& b, const Matrix<S>& Y, double coef) {
    const int ch = b.eps.shape.channels;
    for (Eigen::Index i = 0; i < cot.rows(); ++i) {
        double w = b.mask ? b.mask->weights[static_cast<std::size_t>(i / ch)] : 1.0;
        double g = -2.0 * w * (b.eps.data[static_cast<std::size_t>(i)] - static_cast<double>(Y(i, col)));
        cot(i, col) += static_cast<S>(coef * g);
    }
}

inline void check_term(double v, const char* term, std::size_t index) {
    if (!std::isfinite(v))
        throw NumericError(std::string("loss: non-finite ") + term + " term in item " + std::to_string(index));
}

}  // namespace detail

/// Evaluates sum(contrasts) + sum(regressions). The policy passes are
/// recorded on the returned tape; reference passes are plain evaluations and
/// never reach the gradient.
template <class S>
LossOutput<S> composite_loss(const DenoiserParams<S>& theta, const DenoiserParams<S>& ref,
                             const std::vector<Contrast>& contrasts, const std::vector<Regression>& regressions,
                             const DiffusionSchedule& sched) {
    if (!contrasts.empty() && !(ref.config == theta.config))
        throw ShapeMismatch("loss: policy and reference networks differ in shape");
    std::vector<const Branch*> branches;
    for (const auto& c : contrasts) branches.push_back(&c.w), branches.push_back(&c.l);
    for (const auto& r : regressions) branches.push_back(&r.branch);
    for (const Branch* b : branches) sched.check_step(b->t);

    LossOutput<S> out;
    if (branches.empty()) {
        out.tape.set_root(S(0));
        return out;
    }
    Matrix<S> X = detail::input_matrix<S>(theta.config, branches, sched.T);
    typename Tape<S>::NodeId node;
    try {
        node = out.tape.forward(theta, X);
    } catch (const NumericError&) {
        throw NumericError("loss: non-finite policy network output (eps_theta term)");
    }
    std::vector<OutputCoefficients> coef;
    for (const Branch* b : branches)
        coef.push_back(output_coefficients(theta.config.output, sched.alpha_bar[static_cast<std::size_t>(b->t)]));
    const Matrix<S> Y = to_noise_prediction(out.tape.output(node), X, coef);
    Matrix<S> Yref;
    if (!contrasts.empty()) {
        auto nc = static_cast<Eigen::Index>(2 * contrasts.size());
        Matrix<S> Xref = X.leftCols(nc);
        try {
            Yref = to_noise_prediction(forward(ref, Xref), Xref,
                                       std::vector<OutputCoefficients>(coef.begin(), coef.begin() + nc));
        } catch (const NumericError&) {
            throw NumericError("loss: non-finite reference network output (eps_ref term)");
        }
    }

    Matrix<S> cot = Matrix<S>::Zero(Y.rows(), Y.cols());
    const ImageShape shape = theta.config.image;
    double total = 0, margin = 0;
    for (std::size_t i = 0; i < contrasts.size(); ++i) {
        const Contrast& c = contrasts[i];
        auto cw = static_cast<Eigen::Index>(2 * i), cl = cw + 1;
        ContrastErrors e;
        e.theta_w = detail::branch_err(c.w, detail::column_image(Y, cw, shape));
        e.ref_w = detail::branch_err(c.w, detail::column_image(Yref, cw, shape));
        e.theta_l = detail::branch_err(c.l, detail::column_image(Y, cl, shape));
        e.ref_l = detail::branch_err(c.l, detail::column_image(Yref, cl, shape));
        detail::check_term(e.theta_w, "eps_theta(winner)", i);
        detail::check_term(e.ref_w, "eps_ref(winner)", i);
        detail::check_term(e.theta_l, "eps_theta(loser)", i);
        detail::check_term(e.ref_l, "eps_ref(loser)", i);
        double a = dpo_sigma_argument(e, c.k);
        double v = softplus(-a);
        detail::check_term(v, "sigma", i);
        total += c.scale * v;
        margin += a;
        // dL/da = -sigma(-a); da/d theta_w = -k; da/d theta_l = +k
        double dl_da = -sigmoid(-a) * c.scale;
        detail::add_err_cotangent(cot, cw, c.w, Y, dl_da * -c.k);
        detail::add_err_cotangent(cot, cl, c.l, Y, dl_da * c.k);
    }
    const double n = shape.size();
    for (std::size_t i = 0; i < regressions.size(); ++i) {
        const Regression& r = regressions[i];
        auto col = static_cast<Eigen::Index>(2 * contrasts.size() + i);
        double err = detail::branch_err(r.branch, detail::column_image(Y, col, shape));
        detail::check_term(err, "eps_theta", i);
        total += r.scale * err / n;
        detail::add_err_cotangent(cot, col, r.branch, Y, r.scale / n);
    }
    out.value = total;
    out.margin = contrasts.empty() ? 0.0 : margin / static_cast<double>(contrasts.size());
    for (Eigen::Index j = 0; j < cot.cols(); ++j) cot.col(j) *= static_cast<S>(coef[static_cast<std::size_t>(j)].scale);
    out.tape.seed(node, cot);
    out.tape.set_root(static_cast<S>(total));
    return out;
}

// ---------------------------------------------------------------------------
// The loss family
// ---------------------------------------------------------------------------

struct LossBatchItem {
    const PreferencePair* pair = nullptr;
    int t = 0;
    Image eps_w;
    Image eps_l;
    double beta = 0.1;
};

inline Branch make_branch(const Image& x0, const Image& eps, int t, const Caption& cond,
                          std::optional<RegionMask> mask, const DiffusionSchedule& sched) {
    return Branch{q_sample(x0, t, eps, sched), eps, t, cond, std::move(mask)};
}

/// Image-side contrast: winner and loser images, both conditioned on y_w.
inline Contrast diffusion_dpo_contrast(const LossBatchItem& item, const DiffusionSchedule& sched,
                                       double scale = 1.0) {
    if (!item.pair) throw InvalidRange("diffusion_dpo: item has no pair");
    const auto& p = *item.pair;
    return Contrast{make_branch(p.x0_w, item.eps_w, item.t, p.y_w, std::nullopt, sched),
                    make_branch(p.x0_l, item.eps_l, item.t, p.y_w, std::nullopt, sched),
                    dpo_weight(sched, item.t, item.beta), scale};
}

/// Caption-side contrast on one image: condition y_w (preferred) against y_l.
/// With `eps_l` given, the y_l branch uses its own noise draw.
inline Contrast text_dpo_contrast(const Image& x0_w, const Caption& y_w, const Caption& y_l, int t, const Image& eps,
                                  double beta, const DiffusionSchedule& sched,
                                  const std::optional<RegionMask>& mask = std::nullopt,
                                  const std::optional<Image>& eps_l = std::nullopt, double scale = 1.0) {
    if (mask) validate(*mask);
    return Contrast{make_branch(x0_w, eps, t, y_w, mask, sched),
                    make_branch(x0_w, eps_l ? *eps_l : eps, t, y_l, mask, sched), dpo_weight(sched, t, beta), scale};
}

/// The two caption-side contrasts of a pair, one per image.
inline std::vector<Contrast> bidpo_contrasts(const PreferencePair& pair, int t, const Image& eps_w, const Image& eps_l,
                                             double beta, const DiffusionSchedule& sched, bool use_region,
                                             double scale = 1.0) {
    std::optional<RegionMask> mw, ml;
    if (use_region && !uses_global_focus(pair.dimension)) mw = pair.mask_w, ml = pair.mask_l;
    return {text_dpo_contrast(pair.x0_w, pair.y_w, pair.y_l, t, eps_w, beta, sched, mw, std::nullopt, scale),
            text_dpo_contrast(pair.x0_l, pair.y_l, pair.y_w, t, eps_l, beta, sched, ml, std::nullopt, scale)};
}

template <class S>
LossOutput<S> diffusion_dpo_loss(const DenoiserParams<S>& theta, const DenoiserParams<S>& ref,
                                 const LossBatchItem& item, const DiffusionSchedule& sched) {
    return composite_loss(theta, ref, {diffusion_dpo_contrast(item, sched)}, {}, sched);
}

template <class S>
LossOutput<S> text_dpo_loss(const DenoiserParams<S>& theta, const DenoiserParams<S>& ref, const Image& x0_w,
                            const Caption& y_w, const Caption& y_l, int t, const Image& eps, double beta,
                            const DiffusionSchedule& sched, const std::optional<RegionMask>& mask = std::nullopt,
                            const std::optional<Image>& eps_l = std::nullopt) {
    return composite_loss(theta, ref, {text_dpo_contrast(x0_w, y_w, y_l, t, eps, beta, sched, mask, eps_l)}, {},
                          sched);
}

template <class S>
LossOutput<S> bidpo_loss(const DenoiserParams<S>& theta, const DenoiserParams<S>& ref, const PreferencePair& pair,
                         int t, const Image& eps_w, const Image& eps_l, double beta, const DiffusionSchedule& sched,
                         bool use_region) {
    return composite_loss(theta, ref, bidpo_contrasts(pair, t, eps_w, eps_l, beta, sched, use_region), {}, sched);
}

/// ||eps - eps_theta(x_t, t, c)||^2 / (G G C)
template <class S>
LossOutput<S> sft_loss(const DenoiserParams<S>& theta, const Image& x0, const Caption& y, int t, const Image& eps,
                       const DiffusionSchedule& sched) {
    require_same_shape(x0, eps, "sft_loss");
    return composite_loss(theta, theta, {}, {Regression{make_branch(x0, eps, t, y, std::nullopt, sched), 1.0}},
                          sched);
}

}  // namespace bidpo
