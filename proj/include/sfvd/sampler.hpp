#pragma once

#include <span>

#include "sfvd/denoiser.hpp"
#include "sfvd/guidance.hpp"
#include "sfvd/schedule.hpp"
#include "sfvd/segmenter.hpp"

namespace sfvd {

enum class StageTag { Leading, Concluding, Intermediate };

// One generation step. Stored distances follow the plan convention: dist1 is
// the (positive) offset back to a preceding reference, dist2 forward to a
// following one. The model's signed frame-distance input is
// target - ref, so a pair step feeds +dist1 and -dist2.
struct PlanStep {
    int target = 0;
    StageTag stage = StageTag::Leading;
    int ref1 = -1;  // -1 = no reference
    int ref2 = -1;
    int dist1 = 0;
    int dist2 = 0;
};

struct FramePlan {
    int frame_count = 0;
    std::vector<PlanStep> steps;
};

// Leading frame, concluding frame, then breadth-first midpoint insertion
// (floor midpoints, segments left-to-right per level).
FramePlan subdivision_order(int frame_count);

// Leading frame, then each frame conditioned on its predecessor (the
// frame-consistency-off ablation mode).
FramePlan chronological_order(int frame_count);

void validate_plan(const FramePlan& plan);

enum class SampleMode { Subdivision, Chronological };

struct SamplerConfig {
    int sample_steps = 100;  // respaced reverse steps out of the model's T
    SampleMode mode = SampleMode::Subdivision;
    GuidanceConfig guidance;
};

struct GeneratedVideo {
    std::vector<Plane> frames;
    std::vector<Mask> masks;
    float gamma = 0.0f;
    uint64_t seed = 0;
};

// One reverse diffusion step: mean from eps_bar, learned-interpolation
// variance, segmentation-guided mean shift, then Gaussian noise (none at
// t = 1). eps_bar must already be the composed guidance output.
Plane reverse_step(const Plane& x_t, int t, const Plane& eps_bar, const Plane& v_hat,
                   const NoiseSchedule& sched, Rng& rng, float gamma, const Plane& seg_grad);

// Runs the full reverse loop from pure noise for one plan step. frames holds
// already-generated frames by index (empty planes elsewhere).
Plane generate_frame(const PlanStep& step, std::span<const Mask> masks,
                     std::span<const Plane> frames, const DenoiserModel& scene,
                     const DenoiserModel& motion, const SegmenterModel& psi,
                     const RespacedSchedule& rs, const GuidanceConfig& guide, float gamma,
                     Rng& rng);

GeneratedVideo generate_video(std::span<const Mask> masks, const DenoiserModel& scene,
                              const DenoiserModel& motion, const SegmenterModel& psi,
                              const SamplerConfig& cfg, uint64_t seed);

}  // namespace sfvd
