#pragma once

#include <span>

#include "sfvd/core.hpp"
#include "sfvd/video.hpp"

namespace sfvd {

// Parameters for one synthetic scene. The whole module is a stand-in for
// private clinical data: thin dark wires moving over textured, breathing
// backgrounds. Realism targets are construction contracts, not claims.
struct SceneConfig {
    int height = 32;
    int width = 32;
    int frame_count = 8;

    // background: smooth random field + translating soft edge (diaphragm
    // analogue, slow) + static high-contrast bands (rib analogue)
    float base_level = 0.15f;
    float field_amp = 0.16f;
    int field_waves = 4;
    float edge_depth = 0.30f;
    float edge_softness = 2.5f;
    float edge_speed = 0.30f;  // px per frame
    int rib_count = 2;
    float rib_depth = 0.22f;
    float rib_width = 1.6f;

    // wire: smooth open curve, darker than the local background, displaced
    // per frame faster than the background edge
    int wire_points = 5;
    float wire_width = 1.4f;  // rasterized mask is ~1-3 px wide
    float wire_contrast_min = 0.5f;
    float wire_contrast_max = 0.85f;
    float wire_speed = 1.1f;  // px per frame

    float noise_sigma = 0.03f;

    void validate() const;
};

// Deterministic per (cfg, seed). Masks are the exact rasterized wire.
LabeledVideo make_video(const SceneConfig& cfg, uint64_t seed);

// Fully annotated video corpus (F-video analogue). meta.id = index.
std::vector<LabeledVideo> make_fvideo_set(int count, const SceneConfig& cfg, uint64_t seed);

// Partially annotated frame corpus (P-image analogue): flattening these
// videos gives the mixed frame pool for train_scene. The annotated count is
// apportioned exactly (largest remainder across videos), so the requested
// fraction is reproduced at any scale.
std::vector<LabeledVideo> make_pimage_set(int video_count, double annotated_fraction,
                                          const SceneConfig& cfg, uint64_t seed);

// mean over consecutive frame pairs of per-pixel squared difference
double consecutive_frame_mse(std::span<const Plane> frames);

// 80/10/10 split by video index, deterministically shuffled per seed.
struct SplitSpec {
    std::vector<int> train, val, test;
};
SplitSpec make_split(int video_count, uint64_t seed);

}  // namespace sfvd
