#pragma once

#include <vector>

#include "sfvd/core.hpp"

namespace sfvd {

struct VideoMeta {
    uint64_t scene_seed = 0;
    int wire_count = 1;
    float contrast = 0.0f;
    int id = -1;         // dataset-level identity, used for split hygiene
    int source_id = -1;  // mask donor for synthesized videos
};

// N grayscale frames in [-1,1] with per-frame wire masks and annotation
// flags. annotated[i] == 0 means masks[i] is an all-zero placeholder and
// must not be used as supervision.
struct LabeledVideo {
    std::vector<Plane> frames;
    std::vector<Mask> masks;
    std::vector<uint8_t> annotated;
    VideoMeta meta;

    int frame_count() const { return int(frames.size()); }
    int height() const { return frames.empty() ? 0 : frames[0].h; }
    int width() const { return frames.empty() ? 0 : frames[0].w; }
};

}  // namespace sfvd
