#pragma once

#include <span>

#include "sfvd/core.hpp"
#include "sfvd/schedule.hpp"
#include "sfvd/unet.hpp"
#include "sfvd/video.hpp"

namespace sfvd {

struct SegmenterModel {
    NetDesc desc;  // in 1, out 1 logit channel
    std::vector<float> params;
    bool noise_augment = false;  // trained on diffusion-noised inputs
    ScheduleKind sched_kind = ScheduleKind::Cosine;
    int sched_T = 1000;
    double beta_start = 1e-4;
    double beta_end = 0.02;
    uint64_t train_seed = 0;
};

SegmenterModel make_segmenter(int base_width, uint64_t seed);

struct SegFrame {
    const Plane* image = nullptr;
    const Mask* mask = nullptr;
};

// annotated frames only
std::vector<SegFrame> seg_pool_from_videos(std::span<const LabeledVideo> videos);

struct SegTrainConfig {
    int steps = 2000;
    int batch = 16;
    float lr = 1e-3f;
    float clip_norm = 1.0f;
    uint64_t seed = 0;
    float early_stop_ratio = 0.0f;
    int smooth_window = 50;
    // mixed-source training: when extra pool is supplied, each batch draws
    // primary and extra samples 1:1
};

struct SegTrainResult {
    std::vector<std::pair<int, double>> log;  // step, loss
    int steps_run = 0;
    double initial_smoothed = 0.0;
    double final_smoothed = 0.0;
    int64_t noised_inputs = 0;
};

SegTrainResult train_segmenter(SegmenterModel& model, std::span<const SegFrame> data,
                               const SegTrainConfig& cfg, bool noise_augment,
                               std::span<const SegFrame> extra = {});

// Per-pixel wire probability in (0,1); deterministic.
Plane segment(const SegmenterModel& psi, const Plane& frame);

// Raw logits (sigmoid(logits) == segment output).
Plane segment_logits(const SegmenterModel& psi, const Plane& frame);

Mask threshold_mask(const Plane& prob, float thresh = 0.5f);

// sum over pixels of M log s + (1-M) log(1-s)
double seg_log_likelihood(const SegmenterModel& psi, const Plane& frame, const Mask& mask);

// ---------------------------------------------------------------------------
// Templated forward + input-gradient core shared with the 64-bit checks in
// the guidance tests. Returns the log-likelihood; grad_input, when non-null,
// receives d(log-likelihood)/d(input pixel).
// ---------------------------------------------------------------------------
template <class T>
T seg_log_likelihood_core(UNetEval<T>& net, std::span<const T> params, const FmapT<T>& input,
                          const Mask& mask, FmapT<T>* grad_input, std::span<T> scratch_grad) {
    const auto& y = net.forward(params, input, {});
    const T* z = y.ch(0);
    T ll = 0;
    FmapT<T> gy(1, input.h, input.w);
    for (size_t i = 0; i < mask.v.size(); ++i) {
        T m = T(mask.v[i]);
        // stable log sigmoid forms
        T zi = z[i];
        T log_s = zi >= T(0) ? -std::log1p(std::exp(-zi)) : zi - std::log1p(std::exp(zi));
        T log_1ms = zi >= T(0) ? -zi - std::log1p(std::exp(-zi)) : -std::log1p(std::exp(zi));
        ll += m * log_s + (T(1) - m) * log_1ms;
        gy.ch(0)[i] = m - detail::sigmoid(zi);  // d ll / d logit
    }
    if (grad_input) net.backward(params, gy, scratch_grad, grad_input);
    return ll;
}

}  // namespace sfvd
