#include "sfvd/synth.hpp"

#include <cmath>
#include <numeric>

namespace sfvd {

void SceneConfig::validate() const {
    if (height < 8 || width < 8 || height % 4 != 0 || width % 4 != 0)
        throw std::invalid_argument("SceneConfig: size must be >= 8 and divisible by 4");
    if (frame_count < 1) throw std::invalid_argument("SceneConfig: frame_count must be >= 1");
    if (wire_points < 2) throw std::invalid_argument("SceneConfig: wire_points must be >= 2");
    if (wire_width < 0.5f || wire_width > 3.0f)
        throw std::invalid_argument("SceneConfig: wire_width outside [0.5, 3]");
    if (!(wire_contrast_min > 0.0f) || wire_contrast_max < wire_contrast_min ||
        wire_contrast_max > 1.5f)
        throw std::invalid_argument("SceneConfig: bad wire contrast range");
    if (noise_sigma < 0.0f || noise_sigma > 0.3f)
        throw std::invalid_argument("SceneConfig: noise_sigma outside [0, 0.3]");
    if (field_amp < 0.0f || edge_depth < 0.0f || rib_depth < 0.0f)
        throw std::invalid_argument("SceneConfig: negative amplitude");
}

namespace {

struct Vec2 {
    float x = 0, y = 0;
};

// Catmull-Rom interpolation through control points (endpoints doubled).
Vec2 catmull_rom(const std::vector<Vec2>& p, float u) {
    int segs = int(p.size()) - 1;
    float s = u * segs;
    int i = std::min(int(s), segs - 1);
    float t = s - i;
    Vec2 p0 = p[std::max(i - 1, 0)];
    Vec2 p1 = p[i];
    Vec2 p2 = p[i + 1];
    Vec2 p3 = p[std::min(i + 2, segs)];
    auto cr = [t](float a, float b, float c, float d) {
        return 0.5f * ((2 * b) + (-a + c) * t + (2 * a - 5 * b + 4 * c - d) * t * t +
                       (-a + 3 * b - 3 * c + d) * t * t * t);
    };
    return {cr(p0.x, p1.x, p2.x, p3.x), cr(p0.y, p1.y, p2.y, p3.y)};
}

float dist_to_segment(float px, float py, Vec2 a, Vec2 b) {
    float vx = b.x - a.x, vy = b.y - a.y;
    float wx = px - a.x, wy = py - a.y;
    float len2 = vx * vx + vy * vy;
    float t = len2 > 0 ? std::clamp((wx * vx + wy * vy) / len2, 0.0f, 1.0f) : 0.0f;
    float dx = px - (a.x + t * vx), dy = py - (a.y + t * vy);
    return std::sqrt(dx * dx + dy * dy);
}

}  // namespace

LabeledVideo make_video(const SceneConfig& cfg, uint64_t seed) {
    cfg.validate();
    const int H = cfg.height, W = cfg.width, N = cfg.frame_count;
    Rng rng(mix_seed(seed, 0x5CEE));

    // static smooth field: a few random low-frequency plane waves
    Plane field(H, W, 0.0f);
    for (int k = 0; k < cfg.field_waves; ++k) {
        float fx = float(rng.uniform(0.5, 1.6)) / W;
        float fy = float(rng.uniform(0.5, 1.6)) / H;
        if (rng.uniform() < 0.5) fx = -fx;
        float phase = float(rng.uniform(0.0, 6.283185307));
        float amp = cfg.field_amp / cfg.field_waves * float(rng.uniform(0.6, 1.4));
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x)
                field.at(y, x) += amp * std::cos(6.2831853f * (fx * x + fy * y) + phase);
    }

    // static rib bands: slightly tilted dark gaussians across the image
    struct Rib {
        float y0, slope, depth, width;
    };
    std::vector<Rib> ribs;
    for (int r = 0; r < cfg.rib_count; ++r) {
        ribs.push_back({float(rng.uniform(0.1, 0.9)) * H, float(rng.uniform(-0.2, 0.2)),
                        cfg.rib_depth * float(rng.uniform(0.7, 1.3)),
                        cfg.rib_width * float(rng.uniform(0.8, 1.3))});
    }

    // diaphragm analogue: soft vertical edge translating horizontally
    float edge_x0 = float(rng.uniform(0.25, 0.75)) * W;
    float edge_dir = rng.uniform() < 0.5 ? 1.0f : -1.0f;

    // wire: control points spanning the image with perpendicular jitter
    float angle = float(rng.uniform(0.0, 6.283185307));
    Vec2 dir{std::cos(angle), std::sin(angle)};
    Vec2 perp{-dir.y, dir.x};
    Vec2 center{W * 0.5f + float(rng.uniform(-0.15, 0.15)) * W,
                H * 0.5f + float(rng.uniform(-0.15, 0.15)) * H};
    float span = 0.75f * std::min(H, W);
    std::vector<Vec2> ctrl(cfg.wire_points);
    for (int i = 0; i < cfg.wire_points; ++i) {
        float a = (float(i) / (cfg.wire_points - 1) - 0.5f) * span;
        float b = float(rng.uniform(-0.12, 0.12)) * span;
        ctrl[i] = {center.x + a * dir.x + b * perp.x, center.y + a * dir.y + b * perp.y};
    }
    float contrast = float(rng.uniform(cfg.wire_contrast_min, cfg.wire_contrast_max));

    // per-frame wire offsets: smooth random-walk direction, fixed speed, so
    // the wire moves faster than the background edge
    float wire_heading = float(rng.uniform(0.0, 6.283185307));
    std::vector<Vec2> wire_off(N, {0, 0});
    for (int f = 1; f < N; ++f) {
        wire_heading += float(rng.uniform(-0.5, 0.5));
        wire_off[f] = {wire_off[f - 1].x + cfg.wire_speed * std::cos(wire_heading),
                       wire_off[f - 1].y + cfg.wire_speed * std::sin(wire_heading)};
    }

    LabeledVideo video;
    video.meta.scene_seed = seed;
    video.meta.contrast = contrast;
    video.frames.reserve(N);
    video.masks.reserve(N);
    video.annotated.assign(N, 1);

    const int curve_samples = 16 * cfg.wire_points;
    for (int f = 0; f < N; ++f) {
        // bounce the wire off the borders so it stays in view
        Vec2 off = wire_off[f];
        auto fold = [](float v, float lim) {
            float m = std::fmod(std::fabs(v), 2.0f * lim);
            return m <= lim ? m : 2.0f * lim - m;
        };
        off.x = (off.x >= 0 ? 1.0f : -1.0f) * fold(off.x, W * 0.25f);
        off.y = (off.y >= 0 ? 1.0f : -1.0f) * fold(off.y, H * 0.25f);

        std::vector<Vec2> pts(curve_samples);
        std::vector<Vec2> moved(ctrl.size());
        for (size_t i = 0; i < ctrl.size(); ++i) moved[i] = {ctrl[i].x + off.x, ctrl[i].y + off.y};
        for (int s = 0; s < curve_samples; ++s) {
            pts[s] = catmull_rom(moved, float(s) / (curve_samples - 1));
        }

        float edge_x = edge_x0 + edge_dir * cfg.edge_speed * f;
        Plane frame(H, W);
        Mask mask(H, W);
        for (int y = 0; y < H; ++y) {
            for (int x = 0; x < W; ++x) {
                float v = cfg.base_level + field.at(y, x);
                v -= cfg.edge_depth / (1.0f + std::exp((x - edge_x) / cfg.edge_softness));
                for (const Rib& r : ribs) {
                    float d = y - (r.y0 + r.slope * x);
                    v -= r.depth * std::exp(-(d * d) / (2.0f * r.width * r.width));
                }
                float dmin = 1e9f;
                for (int s = 0; s + 1 < curve_samples; ++s) {
                    dmin = std::min(dmin, dist_to_segment(float(x), float(y), pts[s], pts[s + 1]));
                }
                float half = cfg.wire_width * 0.5f;
                if (dmin <= half) mask.at(y, x) = 1;
                v -= contrast * std::exp(-(dmin * dmin) / (2.0f * half * half));
                frame.at(y, x) = v;
            }
        }
        for (auto& v : frame.v) {
            v += cfg.noise_sigma * rng.normal_f();
            v = std::clamp(v, -1.0f, 1.0f);
        }
        video.frames.push_back(std::move(frame));
        video.masks.push_back(std::move(mask));
    }
    return video;
}

std::vector<LabeledVideo> make_fvideo_set(int count, const SceneConfig& cfg, uint64_t seed) {
    if (count < 1) throw std::invalid_argument("make_fvideo_set: count must be >= 1");
    std::vector<LabeledVideo> out(count);
    parallel_for(count, [&](int i) {
        out[i] = make_video(cfg, mix_seed(seed, uint64_t(i)));
        out[i].meta.id = i;
    });
    return out;
}

std::vector<LabeledVideo> make_pimage_set(int video_count, double annotated_fraction,
                                          const SceneConfig& cfg, uint64_t seed) {
    if (video_count < 1) throw std::invalid_argument("make_pimage_set: video count must be >= 1");
    if (annotated_fraction < 0.0 || annotated_fraction > 1.0)
        throw std::invalid_argument("make_pimage_set: fraction outside [0,1]");
    std::vector<LabeledVideo> out(video_count);
    parallel_for(video_count, [&](int i) {
        out[i] = make_video(cfg, mix_seed(seed ^ 0x9197, uint64_t(i)));
        out[i].meta.id = i;
    });

    // exact largest-remainder apportionment of annotated frames per video
    const int per_video = cfg.frame_count;
    const int total = video_count * per_video;
    int want = int(std::llround(annotated_fraction * total));
    std::vector<int> alloc(video_count, 0);
    int base = want / video_count;
    int rem = want - base * video_count;
    for (int i = 0; i < video_count; ++i) alloc[i] = std::min(base + (i < rem ? 1 : 0), per_video);
    // redistribute any clipped surplus
    int assigned = std::accumulate(alloc.begin(), alloc.end(), 0);
    for (int i = 0; i < video_count && assigned < want; ++i) {
        int room = per_video - alloc[i];
        int add = std::min(room, want - assigned);
        alloc[i] += add;
        assigned += add;
    }

    Rng rng(mix_seed(seed, 0xF14C));
    for (int i = 0; i < video_count; ++i) {
        std::vector<int> idx(per_video);
        std::iota(idx.begin(), idx.end(), 0);
        // partial Fisher-Yates selects alloc[i] annotated frames
        for (int k = 0; k < alloc[i]; ++k) {
            int j = k + int(rng.below(uint64_t(per_video - k)));
            std::swap(idx[k], idx[j]);
        }
        std::fill(out[i].annotated.begin(), out[i].annotated.end(), 0);
        for (int k = 0; k < alloc[i]; ++k) out[i].annotated[idx[k]] = 1;
        for (int f = 0; f < per_video; ++f) {
            if (!out[i].annotated[f]) out[i].masks[f] = Mask(cfg.height, cfg.width, 0);
        }
    }
    return out;
}

double consecutive_frame_mse(std::span<const Plane> frames) {
    if (frames.size() < 2) throw std::invalid_argument("consecutive_frame_mse: need >= 2 frames");
    double total = 0;
    for (size_t f = 0; f + 1 < frames.size(); ++f) {
        double s = 0;
        for (size_t i = 0; i < frames[f].size(); ++i) {
            double d = double(frames[f + 1].v[i]) - frames[f].v[i];
            s += d * d;
        }
        total += s / double(frames[f].size());
    }
    return total / double(frames.size() - 1);
}

SplitSpec make_split(int video_count, uint64_t seed) {
    std::vector<int> idx(video_count);
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(mix_seed(seed, 0x5817));
    for (int i = video_count - 1; i > 0; --i) {
        int j = int(rng.below(uint64_t(i + 1)));
        std::swap(idx[i], idx[j]);
    }
    SplitSpec s;
    int n_test = std::max(1, video_count / 10);
    int n_val = std::max(1, video_count / 10);
    int n_train = video_count - n_test - n_val;
    if (n_train < 1) throw std::invalid_argument("make_split: too few videos");
    s.train.assign(idx.begin(), idx.begin() + n_train);
    s.val.assign(idx.begin() + n_train, idx.begin() + n_train + n_val);
    s.test.assign(idx.begin() + n_train + n_val, idx.end());
    return s;
}

}  // namespace sfvd
