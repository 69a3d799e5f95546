#pragma once

#include "sfvd/core.hpp"
#include "sfvd/segmenter.hpp"

namespace sfvd {

enum class GuidanceMode { Scene, MotionSingle, MotionPair };

// Per-frame guidance parameters; mode picks the combine operation. gamma is
// clamped into [0, 15] on construction.
struct GuidanceSpec {
    float omega = 0.7f;
    float gamma = 0.0f;
    GuidanceMode mode = GuidanceMode::Scene;
};

GuidanceSpec make_guidance_spec(GuidanceMode mode, float omega, float gamma);

// Pipeline-level knobs with the published defaults; generate_video derives
// per-frame specs from these and draws gamma once per video.
struct GuidanceConfig {
    float omega_scene = 0.7f;
    float omega_concluding = -2.5f;
    float omega_intermediate = -1.5f;
    float gamma_max = 15.0f;  // gamma ~ U[0, gamma_max], 0 disables guidance
};

// (1-w) eps_u + w eps_c, computed as eps_u + w (eps_c - eps_u) so the
// equal-input fixed point and the w = 0/1 degeneracies are exact in float.
Plane combine_scene(const Plane& eps_u, const Plane& eps_c, float omega);

// (1-w) eps_m + w eps_mf — same algebra as combine_scene, different roles.
Plane combine_motion(const Plane& eps_m, const Plane& eps_mf, float omega);

// (1-2w) eps_m + w eps_mf1 + w eps_mf2, symmetric in the two frame branches.
Plane combine_fc(const Plane& eps_m, const Plane& eps_mf1, const Plane& eps_mf2, float omega);

// Gradient wrt x of sum_px [M log s(x) + (1-M) log(1-s(x))] by
// backpropagation through psi.
Plane seg_log_likelihood_grad(const SegmenterModel& psi, const Plane& x_t, const Mask& mask);

// mu + gamma sigma^2 grad; gamma must be >= 0.
Plane seg_guided_mean(const Plane& mu, const Plane& sigma2, const Plane& grad, float gamma);

}  // namespace sfvd
