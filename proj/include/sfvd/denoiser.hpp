#pragma once

#include <optional>
#include <span>

#include "sfvd/core.hpp"
#include "sfvd/schedule.hpp"
#include "sfvd/unet.hpp"
#include "sfvd/video.hpp"

namespace sfvd {

enum class DenoiserRole { Scene, Motion };

std::string to_string(DenoiserRole r);
DenoiserRole denoiser_role_from_string(const std::string& s);

// Condition channels for predict. Null pointer = ABSENT sentinel: the mask
// sentinel is an all-(-1) channel (valid masks are {0,1}), a missing frame
// is an all-0 channel. frame_distance is the signed offset
// target_index - ref_index and must be present iff a reference frame is.
struct ConditionSet {
    const Mask* mask = nullptr;
    const Plane* ref1 = nullptr;
    const Plane* ref2 = nullptr;
    std::optional<int> frame_distance;
};

struct DenoiserModel {
    DenoiserRole role = DenoiserRole::Scene;
    NetDesc desc;
    std::vector<float> params;
    ScheduleKind sched_kind = ScheduleKind::Cosine;
    int sched_T = 1000;
    double beta_start = 1e-4;
    double beta_end = 0.02;
    uint64_t train_seed = 0;

    NoiseSchedule schedule() const { return build_schedule(sched_kind, sched_T, beta_start, beta_end); }
};

constexpr int kTimeEmbDim = 32;

DenoiserModel make_denoiser(DenoiserRole role, int base_width, ScheduleKind kind, int T,
                            double beta_start, double beta_end, uint64_t seed);

void validate_condition(DenoiserRole role, const ConditionSet& cond, int h, int w);

struct Prediction {
    Plane eps_hat;
    Plane v_hat;  // elementwise in (0,1)
};

Prediction predict(const DenoiserModel& model, const Plane& x_t, int t, const ConditionSet& cond);

struct LossParts {
    double total = 0, simple = 0, vlb = 0;
};

// L_simple + lambda * L_vlb at one (x0, t, eps). The VLB term is the KL to
// the exact posterior for t >= 2 and the discretized Gaussian NLL at t = 1,
// in bits, with the mean path gradient-stopped (IDDPM hybrid objective).
LossParts hybrid_loss(const DenoiserModel& model, const Plane& x0, int t, const Plane& eps,
                      const ConditionSet& cond, float lambda = 1e-3f);

// ---------------------------------------------------------------------------
// Templated loss core, shared by float training and the 64-bit gradient
// checks. `input` is the assembled condition stack with x_t at channel 0.
// When grad_params is non-empty a backward pass accumulates into it;
// full_grad additionally propagates the VLB mean path (finite differences
// see the total derivative, so checks run with full_grad = true while
// production training keeps the IDDPM stop-gradient).
// ---------------------------------------------------------------------------
namespace lossdetail {

template <class T>
inline T norm_cdf(T z) {
    return T(0.5) * std::erfc(-z * T(0.7071067811865475244));
}

template <class T>
inline T norm_pdf(T z) {
    return T(0.3989422804014326779) * std::exp(T(-0.5) * z * z);
}

}  // namespace lossdetail

template <class T>
struct HybridLossOut {
    T total = 0, simple = 0, vlb = 0;
};

template <class T>
HybridLossOut<T> hybrid_loss_core(UNetEval<T>& net, std::span<const T> params,
                                  std::span<const T> x0, const FmapT<T>& input,
                                  std::span<const T> emb, int t, const NoiseSchedule& sched,
                                  std::span<const T> eps, T lambda, bool full_grad,
                                  std::span<T> grad_params) {
    const size_t n = x0.size();
    const T* x_t = input.ch(0);
    const auto& y = net.forward(params, input, emb);
    const T* eps_hat_raw = y.ch(0);
    const T* v_raw = y.ch(1);

    const T ln2 = T(0.69314718055994530942);
    const T alpha = T(sched.alpha(t));
    const T sqrt_alpha = std::sqrt(alpha);
    const T mean_coef = (T(1) - alpha) / std::sqrt(T(1) - T(sched.alpha_bar(t)));
    const T vf = T(sched.v_lower(t));
    const T vr = T(sched.v_upper(t));
    const T log_btilde = T(std::log(t >= 2 ? sched.posterior_var(t) : sched.beta(t)));
    const T post_c0 = T(std::sqrt(sched.alpha_bar_prev(t)) * sched.beta(t) / (1.0 - sched.alpha_bar(t)));
    const T post_ct = T(std::sqrt(sched.alpha(t)) * (1.0 - sched.alpha_bar_prev(t)) / (1.0 - sched.alpha_bar(t)));
    const T bin_half = T(1.0 / 255.0);

    HybridLossOut<T> out;
    bool want_grad = !grad_params.empty();
    FmapT<T> gy;
    if (want_grad) gy.resize(2, input.h, input.w);

    T sum_sq = 0, sum_vlb = 0;
    for (size_t i = 0; i < n; ++i) {
        const T d_eps = eps_hat_raw[i] - eps[i];
        sum_sq += d_eps * d_eps;

        const T v_hat = detail::sigmoid(v_raw[i]);
        const T log_var = v_hat * vf + (T(1) - v_hat) * vr;
        const T mu_p = (x_t[i] - mean_coef * eps_hat_raw[i]) / sqrt_alpha;

        T vlb_px, d_dlogvar, d_dmu;
        if (t >= 2) {
            const T mu_q = post_c0 * x0[i] + post_ct * x_t[i];
            const T diff = mu_q - mu_p;
            const T e_q_p = std::exp(log_btilde - log_var);
            const T e_neg = std::exp(-log_var);
            vlb_px = T(0.5) * (T(-1) + log_var - log_btilde + e_q_p + diff * diff * e_neg);
            d_dlogvar = T(0.5) * (T(1) - e_q_p - diff * diff * e_neg);
            d_dmu = -diff * e_neg;
        } else {
            // discretized Gaussian NLL against x0 with IDDPM bin handling
            const T sigma = std::exp(T(0.5) * log_var);
            const T c = x0[i] - mu_p;
            const T zp = (c + bin_half) / sigma;
            const T zm = (c - bin_half) / sigma;
            const T floor_p = T(1e-12);
            if (x0[i] < T(-0.999)) {
                T cdf = lossdetail::norm_cdf(zp);
                if (cdf < floor_p) {
                    vlb_px = -std::log(floor_p);
                    d_dmu = 0; d_dlogvar = 0;
                } else {
                    vlb_px = -std::log(cdf);
                    T pdf = lossdetail::norm_pdf(zp);
                    d_dmu = pdf / (sigma * cdf);
                    d_dlogvar = T(0.5) * zp * pdf / cdf;
                }
            } else if (x0[i] > T(0.999)) {
                T sf = T(1) - lossdetail::norm_cdf(zm);
                if (sf < floor_p) {
                    vlb_px = -std::log(floor_p);
                    d_dmu = 0; d_dlogvar = 0;
                } else {
                    vlb_px = -std::log(sf);
                    T pdf = lossdetail::norm_pdf(zm);
                    d_dmu = -pdf / (sigma * sf);
                    d_dlogvar = -T(0.5) * zm * pdf / sf;
                }
            } else {
                T mass = lossdetail::norm_cdf(zp) - lossdetail::norm_cdf(zm);
                if (mass < floor_p) {
                    vlb_px = -std::log(floor_p);
                    d_dmu = 0; d_dlogvar = 0;
                } else {
                    vlb_px = -std::log(mass);
                    T pp = lossdetail::norm_pdf(zp);
                    T pm = lossdetail::norm_pdf(zm);
                    // d mass / d mu = (pdf(zm) - pdf(zp)) / sigma
                    d_dmu = -(pm - pp) / (sigma * mass);
                    // d mass / d logvar = -0.5 (zp pdf(zp) - zm pdf(zm))
                    d_dlogvar = T(0.5) * (zp * pp - zm * pm) / mass;
                }
            }
        }
        sum_vlb += vlb_px;

        if (want_grad) {
            const T scale = lambda / (T(n) * ln2);
            T g0 = T(2) * d_eps / T(n);
            if (full_grad) g0 += scale * d_dmu * (-mean_coef / sqrt_alpha);
            gy.ch(0)[i] = g0;
            gy.ch(1)[i] = scale * d_dlogvar * (vf - vr) * v_hat * (T(1) - v_hat);
        }
    }

    out.simple = sum_sq / T(n);
    out.vlb = sum_vlb / (T(n) * ln2);
    out.total = out.simple + lambda * out.vlb;
    if (want_grad) net.backward(params, gy, grad_params, nullptr);
    return out;
}

// Assembles the input channel stack for a role. x_t occupies channel 0.
template <class T>
FmapT<T> assemble_input(DenoiserRole role, std::span<const T> x_t, const ConditionSet& cond,
                        int h, int w) {
    const size_t hw = size_t(h) * w;
    FmapT<T> in(role == DenoiserRole::Scene ? 2 : 4, h, w);
    std::copy(x_t.begin(), x_t.end(), in.ch(0));
    T* mc = in.ch(1);
    if (cond.mask) {
        for (size_t i = 0; i < hw; ++i) mc[i] = T(cond.mask->v[i]);
    } else {
        std::fill(mc, mc + hw, T(-1));
    }
    if (role == DenoiserRole::Motion) {
        T* r1 = in.ch(2);
        T* r2 = in.ch(3);
        if (cond.ref1) for (size_t i = 0; i < hw; ++i) r1[i] = T(cond.ref1->v[i]);
        if (cond.ref2) for (size_t i = 0; i < hw; ++i) r2[i] = T(cond.ref2->v[i]);
    }
    return in;
}

// Sinusoidal embedding of t, with the signed frame distance appended for the
// motion role (zeros when the reference is absent).
template <class T>
std::vector<T> denoiser_embedding(DenoiserRole role, int t, const std::optional<int>& delta) {
    std::vector<T> emb(role == DenoiserRole::Scene ? kTimeEmbDim : 2 * kTimeEmbDim, T(0));
    sinusoidal_embed(double(t), kTimeEmbDim, emb.data());
    if (role == DenoiserRole::Motion && delta.has_value()) {
        sinusoidal_embed(double(*delta), kTimeEmbDim, emb.data() + kTimeEmbDim);
    }
    return emb;
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------
struct SceneFrame {
    const Plane* image = nullptr;
    const Mask* mask = nullptr;  // nullptr when unannotated
};

struct TrainConfig {
    int steps = 2000;
    int batch = 16;
    float lr = 1e-4f;
    float lambda_vlb = 1e-3f;
    float clip_norm = 1.0f;
    float p_drop = 0.2f;  // motion reference-frame dropout
    uint64_t seed = 0;
    // early stop once the trailing smoothed loss falls to ratio x initial
    // smoothed loss (0 disables); window below defines "smoothed"
    float early_stop_ratio = 0.0f;
    int smooth_window = 50;
};

struct LossRow {
    int step;
    double loss, l_simple, l_vlb;
};

struct TrainResult {
    std::vector<LossRow> log;
    int steps_run = 0;
    double initial_smoothed = 0.0;
    double final_smoothed = 0.0;
    // instrumentation
    int64_t ref_present = 0, ref_absent = 0;
    int64_t delta_pos = 0, delta_neg = 0;
    int64_t noised_inputs = 0;
};

// Flattens videos to the mixed annotated/unannotated frame pool for
// train_scene. Unannotated frames carry a null mask.
std::vector<SceneFrame> scene_pool_from_videos(std::span<const LabeledVideo> videos);

TrainResult train_scene(DenoiserModel& model, std::span<const SceneFrame> data, const TrainConfig& cfg);
TrainResult train_motion(DenoiserModel& model, std::span<const LabeledVideo> videos, const TrainConfig& cfg);

}  // namespace sfvd
