#include "sfvd/experiment.hpp"

#include <algorithm>
#include <set>

namespace sfvd {

MetricsReport evaluate_on_videos(const SegmenterModel& psi, std::span<const LabeledVideo> videos,
                                 std::span<const int> ids, uint64_t seed, double tol_px) {
    MetricsReport report;
    report.seed = seed;
    report.per_video.resize(ids.size());
    std::vector<const LabeledVideo*> picked;
    for (int id : ids) {
        auto it = std::find_if(videos.begin(), videos.end(),
                               [id](const LabeledVideo& v) { return v.meta.id == id; });
        if (it == videos.end()) throw std::invalid_argument("evaluate_on_videos: unknown video id");
        picked.push_back(&*it);
    }
    parallel_for(int(picked.size()), [&](int i) {
        const LabeledVideo& v = *picked[i];
        std::vector<SegMetrics> frame_rows;
        for (size_t f = 0; f < v.frames.size(); ++f) {
            if (!v.annotated[f]) continue;
            Mask pred = threshold_mask(segment(psi, v.frames[f]));
            frame_rows.push_back(evaluate_masks(pred, v.masks[f], tol_px));
        }
        report.per_video[i] = mean_metrics(frame_rows);
    });
    report.aggregate = mean_metrics(report.per_video);
    return report;
}

namespace {

std::vector<const LabeledVideo*> select_by_ids(std::span<const LabeledVideo> videos,
                                               std::span<const int> ids) {
    std::vector<const LabeledVideo*> out;
    for (int id : ids) {
        auto it = std::find_if(videos.begin(), videos.end(),
                               [id](const LabeledVideo& v) { return v.meta.id == id; });
        if (it == videos.end()) throw std::invalid_argument("unknown video id in split");
        out.push_back(&*it);
    }
    return out;
}

std::vector<SegFrame> pool_from_ptrs(const std::vector<const LabeledVideo*>& vids) {
    std::vector<SegFrame> pool;
    for (const auto* v : vids) {
        for (size_t i = 0; i < v->frames.size(); ++i) {
            if (v->annotated[i]) pool.push_back({&v->frames[i], &v->masks[i]});
        }
    }
    return pool;
}

void check_split_hygiene(const SplitSpec& split, std::span<const LabeledVideo> synthesized) {
    std::set<int> train(split.train.begin(), split.train.end());
    std::set<int> val(split.val.begin(), split.val.end());
    std::set<int> test(split.test.begin(), split.test.end());
    for (int id : split.train)
        if (val.count(id) || test.count(id))
            throw std::invalid_argument("split leak: train overlaps val/test");
    for (int id : split.val)
        if (test.count(id)) throw std::invalid_argument("split leak: val overlaps test");
    for (const auto& v : synthesized) {
        if (v.meta.source_id >= 0 && (val.count(v.meta.source_id) || test.count(v.meta.source_id)))
            throw std::invalid_argument("split leak: synthesized video derives from val/test masks");
    }
}

}  // namespace

AugmentationOutcome augmentation_experiment(std::span<const LabeledVideo> real,
                                            const SplitSpec& split,
                                            std::span<const LabeledVideo> synthesized,
                                            const SegTrainConfig& seg_cfg,
                                            std::span<const uint64_t> seeds) {
    check_split_hygiene(split, synthesized);
    auto train_vids = select_by_ids(real, split.train);
    std::vector<SegFrame> real_pool = pool_from_ptrs(train_vids);
    std::vector<SegFrame> synth_pool;
    for (const auto& v : synthesized) {
        for (size_t i = 0; i < v.frames.size(); ++i) {
            if (v.annotated[i]) synth_pool.push_back({&v.frames[i], &v.masks[i]});
        }
    }
    if (real_pool.empty()) throw std::invalid_argument("augmentation_experiment: empty train split");
    if (synth_pool.empty()) throw std::invalid_argument("augmentation_experiment: no synthesized frames");

    AugmentationOutcome out;
    for (uint64_t seed : seeds) {
        SegTrainConfig cfg = seg_cfg;
        cfg.seed = seed;
        SegmenterModel base = make_segmenter(16, mix_seed(seed, 0xBA5E));
        train_segmenter(base, real_pool, cfg, /*noise_augment=*/false);
        out.baseline.push_back(evaluate_on_videos(base, real, split.test, seed));

        SegmenterModel aug = make_segmenter(16, mix_seed(seed, 0xBA5E));
        train_segmenter(aug, real_pool, cfg, /*noise_augment=*/false, synth_pool);
        out.augmented.push_back(evaluate_on_videos(aug, real, split.test, seed));
    }
    return out;
}

std::vector<LabeledVideo> synthesize_from_masks(std::span<const LabeledVideo> real,
                                                std::span<const int> donor_ids,
                                                const DenoiserModel& scene,
                                                const DenoiserModel& motion,
                                                const SegmenterModel& psi_guide,
                                                const SamplerConfig& cfg, int count,
                                                uint64_t seed) {
    if (count < 1) throw std::invalid_argument("synthesize_from_masks: count must be >= 1");
    auto donors = select_by_ids(real, donor_ids);
    std::vector<LabeledVideo> out(count);
    parallel_for(count, [&](int i) {
        const LabeledVideo& donor = *donors[size_t(i) % donors.size()];
        GeneratedVideo g = generate_video(donor.masks, scene, motion, psi_guide, cfg,
                                          mix_seed(seed, uint64_t(i)));
        LabeledVideo v;
        v.frames = std::move(g.frames);
        v.masks = std::move(g.masks);
        v.annotated.assign(v.frames.size(), 1);
        v.meta.id = 100000 + i;
        v.meta.source_id = donor.meta.id;
        v.meta.scene_seed = g.seed;
        v.meta.contrast = g.gamma;
        out[i] = std::move(v);
    });
    return out;
}

std::vector<AblationCell> ablation_grid(std::span<const LabeledVideo> real, const SplitSpec& split,
                                        const DenoiserModel& scene, const DenoiserModel& motion,
                                        const SegmenterModel& psi_guide,
                                        const SamplerConfig& base_cfg, int videos_per_cell,
                                        const SegTrainConfig& seg_cfg, uint64_t seed) {
    std::vector<AblationCell> cells;
    for (bool fc : {false, true}) {
        for (bool sg : {false, true}) {
            SamplerConfig cfg = base_cfg;
            cfg.mode = fc ? SampleMode::Subdivision : SampleMode::Chronological;
            cfg.guidance.gamma_max = sg ? base_cfg.guidance.gamma_max : 0.0f;
            // matched seeds across cells so FC on/off pairs share noise
            auto synth = synthesize_from_masks(real, split.train, scene, motion, psi_guide, cfg,
                                               videos_per_cell, seed);
            double mse = 0;
            for (const auto& v : synth) mse += consecutive_frame_mse(v.frames);
            mse /= double(synth.size());

            auto outcome = augmentation_experiment(real, split, synth, seg_cfg,
                                                   std::vector<uint64_t>{seed});
            AblationCell cell;
            cell.frame_consistency = fc;
            cell.seg_guidance = sg;
            cell.metrics = outcome.augmented[0].aggregate;
            cell.consec_mse = mse;
            cells.push_back(cell);
        }
    }
    return cells;
}

}  // namespace sfvd
