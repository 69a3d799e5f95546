#pragma once

#include <span>

#include "sfvd/metrics.hpp"
#include "sfvd/sampler.hpp"
#include "sfvd/segmenter.hpp"
#include "sfvd/synth.hpp"

namespace sfvd {

struct MetricsReport {
    uint64_t seed = 0;
    std::vector<SegMetrics> per_video;  // test split, split order
    SegMetrics aggregate;
};

// Segments every annotated frame of each test video and averages the
// per-frame metrics per video.
MetricsReport evaluate_on_videos(const SegmenterModel& psi, std::span<const LabeledVideo> videos,
                                 std::span<const int> ids, uint64_t seed, double tol_px = 2.0);

struct AugmentationOutcome {
    std::vector<MetricsReport> baseline;   // one per seed
    std::vector<MetricsReport> augmented;  // one per seed
};

// Trains one segmenter on the real training split and one on real+synthetic
// (1:1 mixed batches), evaluates both on the held-out test split. Split
// hygiene is enforced by video id: synthesized videos must not derive their
// masks from val/test videos.
AugmentationOutcome augmentation_experiment(std::span<const LabeledVideo> real,
                                            const SplitSpec& split,
                                            std::span<const LabeledVideo> synthesized,
                                            const SegTrainConfig& seg_cfg,
                                            std::span<const uint64_t> seeds);

// Synthesizes `count` videos from the training split's mask sequences,
// cycling donors with fresh seeds. Synth meta.source_id records the donor.
std::vector<LabeledVideo> synthesize_from_masks(std::span<const LabeledVideo> real,
                                                std::span<const int> donor_ids,
                                                const DenoiserModel& scene,
                                                const DenoiserModel& motion,
                                                const SegmenterModel& psi_guide,
                                                const SamplerConfig& cfg, int count,
                                                uint64_t seed);

struct AblationCell {
    bool frame_consistency = false;
    bool seg_guidance = false;
    SegMetrics metrics;         // downstream segmentation, test split
    double consec_mse = 0.0;    // mean consecutive-frame MSE of the cell's videos
};

// The four-cell FC x SG grid: synthesize per cell, train an augmented
// segmenter per cell, evaluate all six metrics on the test split.
std::vector<AblationCell> ablation_grid(std::span<const LabeledVideo> real, const SplitSpec& split,
                                        const DenoiserModel& scene, const DenoiserModel& motion,
                                        const SegmenterModel& psi_guide,
                                        const SamplerConfig& base_cfg, int videos_per_cell,
                                        const SegTrainConfig& seg_cfg, uint64_t seed);

}  // namespace sfvd
