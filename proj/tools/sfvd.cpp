// sfvd: command-line surface for the labeled-video synthesis pipeline.
// Subcommands mirror the pipeline stages: gen-data, train-scene,
// train-motion, train-seg, synthesize, augment-eval, metrics, ablate.
// Config precedence: CLI flag > --config JSON file > built-in default.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>

#include "json.hpp"
#include "sfvd/experiment.hpp"
#include "sfvd/io.hpp"
#include "sfvd/sampler.hpp"
#include "sfvd/synth.hpp"

using namespace sfvd;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json g_config;  // loaded from --config, empty otherwise

// CLI flag wins; otherwise the config file; otherwise the built-in default
// already stored in var.
template <class T>
void merge_opt(const CLI::App* cmd, const std::string& flag, const std::string& key, T& var) {
    if (cmd->count(flag) > 0) return;
    if (g_config.contains(key)) var = g_config.at(key).get<T>();
}

void print_effective(const std::string& cmd, const json& effective) {
    std::cout << "[sfvd] " << cmd << " effective config: " << effective.dump() << "\n";
}

struct DataDir {
    std::vector<LabeledVideo> fvideo;
    std::vector<LabeledVideo> pimage;
    SplitSpec split;
};

DataDir load_data_dir(const std::string& dir) {
    DataDir d;
    json manifest = json::parse(read_text_file((fs::path(dir) / "manifest.json").string()));
    int id = 0;
    for (const auto& rel : manifest.at("fvideo")) {
        LabeledVideo v = read_fvd((fs::path(dir) / rel.get<std::string>()).string());
        v.meta.id = id++;
        d.fvideo.push_back(std::move(v));
    }
    for (const auto& rel : manifest.at("pimage")) {
        LabeledVideo v = read_fvd((fs::path(dir) / rel.get<std::string>()).string());
        v.meta.id = -1;  // pool data, not split-tracked
        d.pimage.push_back(std::move(v));
    }
    const auto& sp = manifest.at("splits");
    d.split.train = sp.at("train").get<std::vector<int>>();
    d.split.val = sp.at("val").get<std::vector<int>>();
    d.split.test = sp.at("test").get<std::vector<int>>();
    return d;
}

std::vector<const LabeledVideo*> split_videos(const DataDir& d, const std::vector<int>& ids) {
    std::vector<const LabeledVideo*> out;
    for (int id : ids) out.push_back(&d.fvideo.at(size_t(id)));
    return out;
}

std::vector<LabeledVideo> copy_split(const DataDir& d, const std::vector<int>& ids) {
    std::vector<LabeledVideo> out;
    for (int id : ids) out.push_back(d.fvideo.at(size_t(id)));
    return out;
}

SegMetrics metrics_of_pair(const LabeledVideo& pred, const LabeledVideo& gt, double tol) {
    if (pred.frame_count() != gt.frame_count())
        throw std::invalid_argument("metrics: frame counts differ");
    std::vector<SegMetrics> rows;
    for (int f = 0; f < pred.frame_count(); ++f) {
        rows.push_back(evaluate_masks(pred.masks[f], gt.masks[f], tol));
    }
    return mean_metrics(rows);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SF-VD labeled fluoroscopy-proxy video synthesis pipeline"};
    app.require_subcommand(1);
    app.fallthrough(true);  // lets --config appear after the subcommand name

    std::string config_path;
    app.add_option("--config", config_path, "JSON config file (flags override it)");

    // ---- gen-data ------------------------------------------------------
    auto* gen = app.add_subcommand("gen-data", "generate the synthetic dataset");
    std::string gen_out;
    int gen_fvideos = 40, gen_pvideos = 25, gen_frames = 8, gen_size = 32;
    double gen_fraction = 4000.0 / 14000.0;
    uint64_t gen_seed = 1;
    gen->add_option("--out", gen_out, "output directory")->required();
    gen->add_option("--fvideos", gen_fvideos, "fully annotated video count");
    gen->add_option("--pimage-videos", gen_pvideos, "partially annotated video count");
    gen->add_option("--annotated-fraction", gen_fraction, "annotated frame fraction in the P set");
    gen->add_option("--frames", gen_frames, "frames per video");
    gen->add_option("--size", gen_size, "image height/width");
    gen->add_option("--seed", gen_seed, "dataset seed");

    // ---- shared training options ---------------------------------------
    struct TrainArgs {
        std::string data, out, loss_log;
        int steps = 2000, batch = 16, width = 16, T = 1000;
        double lr = 1e-4, lambda = 1e-3, p_drop = 0.2;
        std::string schedule = "cosine", split = "train";
        uint64_t seed = 0;
        bool noise_augment = false;
    };
    auto add_train_opts = [](CLI::App* cmd, TrainArgs& a, bool denoiser) {
        cmd->add_option("--data", a.data, "gen-data output directory")->required();
        cmd->add_option("--out", a.out, "checkpoint path")->required();
        cmd->add_option("--loss-log", a.loss_log, "CSV loss log path");
        cmd->add_option("--steps", a.steps, "training steps");
        cmd->add_option("--batch", a.batch, "batch size");
        cmd->add_option("--lr", a.lr, "Adam learning rate");
        cmd->add_option("--width", a.width, "base channel width");
        cmd->add_option("--seed", a.seed, "training seed");
        cmd->add_option("--split", a.split, "train on 'train' split or 'all'");
        if (denoiser) {
            cmd->add_option("--lambda", a.lambda, "VLB weight in the hybrid loss");
            cmd->add_option("--schedule", a.schedule, "noise schedule kind (linear|cosine)");
            cmd->add_option("--T", a.T, "diffusion step count");
        }
    };

    auto* tscene = app.add_subcommand("train-scene", "train the scene-distribution model");
    TrainArgs scene_args;
    add_train_opts(tscene, scene_args, true);

    auto* tmotion = app.add_subcommand("train-motion", "train the motion-distribution model");
    TrainArgs motion_args;
    motion_args.steps = 2000;
    add_train_opts(tmotion, motion_args, true);
    tmotion->add_option("--p-drop", motion_args.p_drop, "reference-frame dropout probability");

    auto* tseg = app.add_subcommand("train-seg", "train a wire segmenter");
    TrainArgs seg_args;
    seg_args.steps = 1500;
    seg_args.lr = 1e-3;
    add_train_opts(tseg, seg_args, false);
    tseg->add_flag("--noise-augment", seg_args.noise_augment,
                   "train on diffusion-noised inputs (guidance instance)");

    // ---- synthesize ------------------------------------------------------
    auto* synth = app.add_subcommand("synthesize", "generate a labeled video from a mask sequence");
    std::string sy_masks, sy_scene, sy_motion, sy_seg, sy_out, sy_mode = "subdivision";
    double sy_omega_scene = 0.7, sy_omega_concl = -2.5, sy_omega_inter = -1.5, sy_gamma_max = 15.0;
    int sy_steps = 100;
    uint64_t sy_seed = 0;
    bool sy_no_sheet = false;
    synth->add_option("--masks", sy_masks, "mask source .fvd")->required();
    synth->add_option("--scene", sy_scene, "scene model checkpoint")->required();
    synth->add_option("--motion", sy_motion, "motion model checkpoint")->required();
    synth->add_option("--seg", sy_seg, "guidance segmenter checkpoint")->required();
    synth->add_option("--out", sy_out, "output .fvd path")->required();
    synth->add_option("--omega-scene", sy_omega_scene, "scene guidance weight");
    synth->add_option("--omega-concluding", sy_omega_concl, "concluding-frame guidance weight");
    synth->add_option("--omega-intermediate", sy_omega_inter, "intermediate-frame guidance weight");
    synth->add_option("--gamma-max", sy_gamma_max, "wire-contrast guidance strength bound");
    synth->add_option("--mode", sy_mode, "subdivision|chronological");
    synth->add_option("--steps", sy_steps, "reverse sampling steps");
    synth->add_option("--seed", sy_seed, "sampling seed");
    synth->add_flag("--no-sheet", sy_no_sheet, "skip the contact-sheet PNG");

    // ---- augment-eval ----------------------------------------------------
    auto* aug = app.add_subcommand("augment-eval", "paired baseline/augmented segmentation runs");
    std::string ag_data, ag_out, ag_synth_dir, ag_scene, ag_motion, ag_seg;
    int ag_seeds = 3, ag_steps = 1500, ag_batch = 16, ag_synthesize = 0, ag_sample_steps = 100;
    double ag_lr = 1e-3, ag_gamma_max = 15.0;
    uint64_t ag_seed_base = 0;
    aug->add_option("--data", ag_data, "gen-data output directory")->required();
    aug->add_option("--out", ag_out, "report output directory")->required();
    aug->add_option("--synth-dir", ag_synth_dir, "directory of synthesized .fvd files");
    aug->add_option("--synthesize", ag_synthesize, "generate this many videos in-process instead");
    aug->add_option("--scene", ag_scene, "scene checkpoint (for --synthesize)");
    aug->add_option("--motion", ag_motion, "motion checkpoint (for --synthesize)");
    aug->add_option("--seg-guide", ag_seg, "guidance segmenter checkpoint (for --synthesize)");
    aug->add_option("--seeds", ag_seeds, "number of experiment seeds");
    aug->add_option("--seed-base", ag_seed_base, "first experiment seed");
    aug->add_option("--steps", ag_steps, "segmenter training steps");
    aug->add_option("--batch", ag_batch, "segmenter batch size");
    aug->add_option("--lr", ag_lr, "segmenter learning rate");
    aug->add_option("--sample-steps", ag_sample_steps, "reverse steps for --synthesize");
    aug->add_option("--gamma-max", ag_gamma_max, "gamma bound for --synthesize");

    // ---- metrics ---------------------------------------------------------
    auto* met = app.add_subcommand("metrics", "evaluate saved predictions against ground truth");
    std::vector<std::string> me_pred, me_gt;
    std::string me_out;
    double me_tol = 2.0;
    met->add_option("--pred", me_pred, "prediction .fvd (mask payload is scored)")->required();
    met->add_option("--gt", me_gt, "ground-truth .fvd, paired with --pred in order")->required();
    met->add_option("--out", me_out, "report CSV path")->required();
    met->add_option("--tolerance", me_tol, "sensitivity/precision tolerance in px");

    // ---- ablate ----------------------------------------------------------
    auto* abl = app.add_subcommand("ablate", "run the frame-consistency x seg-guidance grid");
    std::string ab_data, ab_scene, ab_motion, ab_seg, ab_out;
    int ab_videos = 12, ab_steps = 1200, ab_sample_steps = 100;
    double ab_gamma_max = 15.0, ab_lr = 1e-3;
    uint64_t ab_seed = 0;
    abl->add_option("--data", ab_data, "gen-data output directory")->required();
    abl->add_option("--scene", ab_scene, "scene checkpoint")->required();
    abl->add_option("--motion", ab_motion, "motion checkpoint")->required();
    abl->add_option("--seg-guide", ab_seg, "guidance segmenter checkpoint")->required();
    abl->add_option("--out", ab_out, "output directory")->required();
    abl->add_option("--videos-per-cell", ab_videos, "synthesized videos per grid cell");
    abl->add_option("--steps", ab_steps, "segmenter training steps per cell");
    abl->add_option("--lr", ab_lr, "segmenter learning rate");
    abl->add_option("--sample-steps", ab_sample_steps, "reverse sampling steps");
    abl->add_option("--gamma-max", ab_gamma_max, "gamma bound for the SG-on cells");
    abl->add_option("--seed", ab_seed, "grid seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (!config_path.empty()) g_config = json::parse(read_text_file(config_path));

        if (gen->parsed()) {
            merge_opt(gen, "--fvideos", "fvideos", gen_fvideos);
            merge_opt(gen, "--pimage-videos", "pimage_videos", gen_pvideos);
            merge_opt(gen, "--annotated-fraction", "annotated_fraction", gen_fraction);
            merge_opt(gen, "--frames", "frames", gen_frames);
            merge_opt(gen, "--size", "size", gen_size);
            merge_opt(gen, "--seed", "seed", gen_seed);
            print_effective("gen-data", {{"out", gen_out},
                                         {"fvideos", gen_fvideos},
                                         {"pimage_videos", gen_pvideos},
                                         {"annotated_fraction", gen_fraction},
                                         {"frames", gen_frames},
                                         {"size", gen_size},
                                         {"seed", gen_seed}});
            SceneConfig cfg;
            cfg.height = gen_size;
            cfg.width = gen_size;
            cfg.frame_count = gen_frames;
            fs::create_directories(gen_out);
            auto fset = make_fvideo_set(gen_fvideos, cfg, gen_seed);
            auto pset = make_pimage_set(gen_pvideos, gen_fraction, cfg, mix_seed(gen_seed, 2));
            SplitSpec split = make_split(gen_fvideos, mix_seed(gen_seed, 3));
            json manifest;
            char name[64];
            for (size_t i = 0; i < fset.size(); ++i) {
                std::snprintf(name, sizeof(name), "fvideo_%03zu.fvd", i);
                write_fvd((fs::path(gen_out) / name).string(), fset[i]);
                manifest["fvideo"].push_back(name);
            }
            for (size_t i = 0; i < pset.size(); ++i) {
                std::snprintf(name, sizeof(name), "pimage_%03zu.fvd", i);
                write_fvd((fs::path(gen_out) / name).string(), pset[i]);
                manifest["pimage"].push_back(name);
            }
            manifest["splits"] = {{"train", split.train}, {"val", split.val}, {"test", split.test}};
            write_text_file((fs::path(gen_out) / "manifest.json").string(), manifest.dump(2) + "\n");
            std::cout << "[sfvd] wrote " << fset.size() << " F-videos, " << pset.size()
                      << " P-videos to " << gen_out << "\n";
        }

        auto run_denoiser_cmd = [&](CLI::App* cmd, TrainArgs& a, DenoiserRole role) {
            merge_opt(cmd, "--steps", "steps", a.steps);
            merge_opt(cmd, "--batch", "batch", a.batch);
            merge_opt(cmd, "--lr", "lr", a.lr);
            merge_opt(cmd, "--lambda", "lambda", a.lambda);
            merge_opt(cmd, "--width", "width", a.width);
            merge_opt(cmd, "--schedule", "schedule", a.schedule);
            merge_opt(cmd, "--T", "T", a.T);
            merge_opt(cmd, "--seed", "seed", a.seed);
            merge_opt(cmd, "--split", "split", a.split);
            if (role == DenoiserRole::Motion) merge_opt(cmd, "--p-drop", "p_drop", a.p_drop);
            print_effective(cmd->get_name(),
                            {{"data", a.data}, {"out", a.out}, {"steps", a.steps},
                             {"batch", a.batch}, {"lr", a.lr}, {"lambda", a.lambda},
                             {"width", a.width}, {"schedule", a.schedule}, {"T", a.T},
                             {"p_drop", a.p_drop}, {"seed", a.seed}, {"split", a.split}});

            DataDir d = load_data_dir(a.data);
            DenoiserModel model = make_denoiser(role, a.width, schedule_kind_from_string(a.schedule),
                                                a.T, 1e-4, 0.02, a.seed);
            TrainConfig tc;
            tc.steps = a.steps;
            tc.batch = a.batch;
            tc.lr = float(a.lr);
            tc.lambda_vlb = float(a.lambda);
            tc.p_drop = float(a.p_drop);
            tc.seed = a.seed;

            std::vector<LabeledVideo> train_vids =
                a.split == "all" ? d.fvideo : copy_split(d, d.split.train);
            TrainResult res;
            if (role == DenoiserRole::Scene) {
                // mixed pool: annotated F frames + partially annotated P frames
                std::vector<LabeledVideo> all = train_vids;
                for (const auto& v : d.pimage) all.push_back(v);
                auto pool = scene_pool_from_videos(all);
                res = train_scene(model, pool, tc);
            } else {
                res = train_motion(model, train_vids, tc);
            }
            write_checkpoint(a.out, model);
            if (!a.loss_log.empty()) write_loss_csv(a.loss_log, res.log);
            std::cout << "[sfvd] " << cmd->get_name() << ": " << res.steps_run
                      << " steps, smoothed loss " << res.initial_smoothed << " -> "
                      << res.final_smoothed << ", checkpoint " << a.out << "\n";
        };

        if (tscene->parsed()) run_denoiser_cmd(tscene, scene_args, DenoiserRole::Scene);
        if (tmotion->parsed()) run_denoiser_cmd(tmotion, motion_args, DenoiserRole::Motion);

        if (tseg->parsed()) {
            TrainArgs& a = seg_args;
            merge_opt(tseg, "--steps", "steps", a.steps);
            merge_opt(tseg, "--batch", "batch", a.batch);
            merge_opt(tseg, "--lr", "lr", a.lr);
            merge_opt(tseg, "--width", "width", a.width);
            merge_opt(tseg, "--seed", "seed", a.seed);
            merge_opt(tseg, "--split", "split", a.split);
            print_effective("train-seg", {{"data", a.data}, {"out", a.out}, {"steps", a.steps},
                                          {"batch", a.batch}, {"lr", a.lr}, {"width", a.width},
                                          {"noise_augment", a.noise_augment}, {"seed", a.seed},
                                          {"split", a.split}});
            DataDir d = load_data_dir(a.data);
            std::vector<LabeledVideo> train_vids =
                a.split == "all" ? d.fvideo : copy_split(d, d.split.train);
            auto pool = seg_pool_from_videos(train_vids);
            SegmenterModel model = make_segmenter(a.width, a.seed);
            SegTrainConfig tc;
            tc.steps = a.steps;
            tc.batch = a.batch;
            tc.lr = float(a.lr);
            tc.seed = a.seed;
            auto res = train_segmenter(model, pool, tc, a.noise_augment);
            write_checkpoint(a.out, model);
            if (!a.loss_log.empty()) {
                std::vector<LossRow> rows;
                for (auto [step, loss] : res.log) rows.push_back({step, loss, loss, 0.0});
                write_loss_csv(a.loss_log, rows);
            }
            std::cout << "[sfvd] train-seg: " << res.steps_run << " steps, smoothed loss "
                      << res.initial_smoothed << " -> " << res.final_smoothed << ", checkpoint "
                      << a.out << "\n";
        }

        if (synth->parsed()) {
            merge_opt(synth, "--omega-scene", "omega_scene", sy_omega_scene);
            merge_opt(synth, "--omega-concluding", "omega_concluding", sy_omega_concl);
            merge_opt(synth, "--omega-intermediate", "omega_intermediate", sy_omega_inter);
            merge_opt(synth, "--gamma-max", "gamma_max", sy_gamma_max);
            merge_opt(synth, "--mode", "mode", sy_mode);
            merge_opt(synth, "--steps", "sample_steps", sy_steps);
            merge_opt(synth, "--seed", "seed", sy_seed);
            print_effective("synthesize",
                            {{"masks", sy_masks}, {"out", sy_out}, {"omega_scene", sy_omega_scene},
                             {"omega_concluding", sy_omega_concl},
                             {"omega_intermediate", sy_omega_inter}, {"gamma_max", sy_gamma_max},
                             {"mode", sy_mode}, {"steps", sy_steps}, {"seed", sy_seed}});
            if (sy_gamma_max < 0.0)
                throw std::invalid_argument("gamma-max must be >= 0");
            if (sy_mode != "subdivision" && sy_mode != "chronological")
                throw std::invalid_argument("mode must be subdivision or chronological");

            LabeledVideo masks_src = read_fvd(sy_masks);
            DenoiserModel scene = read_denoiser_checkpoint(sy_scene);
            DenoiserModel motion = read_denoiser_checkpoint(sy_motion);
            if (scene.role != DenoiserRole::Scene || motion.role != DenoiserRole::Motion)
                throw std::invalid_argument("checkpoint roles do not match --scene/--motion");
            SegmenterModel psi = read_segmenter_checkpoint(sy_seg);

            SamplerConfig cfg;
            cfg.sample_steps = sy_steps;
            cfg.mode = sy_mode == "subdivision" ? SampleMode::Subdivision : SampleMode::Chronological;
            cfg.guidance.omega_scene = float(sy_omega_scene);
            cfg.guidance.omega_concluding = float(sy_omega_concl);
            cfg.guidance.omega_intermediate = float(sy_omega_inter);
            cfg.guidance.gamma_max = float(sy_gamma_max);

            GeneratedVideo g = generate_video(masks_src.masks, scene, motion, psi, cfg, sy_seed);
            LabeledVideo out;
            out.frames = g.frames;
            out.masks = g.masks;
            out.annotated.assign(g.frames.size(), 1);
            write_fvd(sy_out, out);
            if (!sy_no_sheet) {
                fs::path sheet = fs::path(sy_out).replace_extension(".png");
                write_png_gray(sheet.string(), contact_sheet(out.frames));
            }
            std::cout << "[sfvd] synthesized " << out.frames.size() << " frames (gamma="
                      << g.gamma << ") -> " << sy_out << "\n";
        }

        if (aug->parsed()) {
            merge_opt(aug, "--seeds", "seeds", ag_seeds);
            merge_opt(aug, "--steps", "steps", ag_steps);
            merge_opt(aug, "--batch", "batch", ag_batch);
            merge_opt(aug, "--lr", "lr", ag_lr);
            merge_opt(aug, "--sample-steps", "sample_steps", ag_sample_steps);
            merge_opt(aug, "--gamma-max", "gamma_max", ag_gamma_max);
            print_effective("augment-eval",
                            {{"data", ag_data}, {"out", ag_out}, {"seeds", ag_seeds},
                             {"steps", ag_steps}, {"batch", ag_batch}, {"lr", ag_lr},
                             {"synthesize", ag_synthesize}, {"synth_dir", ag_synth_dir}});
            DataDir d = load_data_dir(ag_data);

            std::vector<LabeledVideo> synth_videos;
            if (ag_synthesize > 0) {
                if (ag_scene.empty() || ag_motion.empty() || ag_seg.empty())
                    throw std::invalid_argument(
                        "--synthesize needs --scene, --motion and --seg-guide");
                DenoiserModel scene = read_denoiser_checkpoint(ag_scene);
                DenoiserModel motion = read_denoiser_checkpoint(ag_motion);
                SegmenterModel psi = read_segmenter_checkpoint(ag_seg);
                SamplerConfig cfg;
                cfg.sample_steps = ag_sample_steps;
                cfg.guidance.gamma_max = float(ag_gamma_max);
                synth_videos = synthesize_from_masks(d.fvideo, d.split.train, scene, motion, psi,
                                                     cfg, ag_synthesize, ag_seed_base);
            } else if (!ag_synth_dir.empty()) {
                int id = 100000;
                std::vector<fs::path> files;
                for (const auto& e : fs::directory_iterator(ag_synth_dir)) {
                    if (e.path().extension() == ".fvd") files.push_back(e.path());
                }
                std::sort(files.begin(), files.end());
                for (const auto& p : files) {
                    LabeledVideo v = read_fvd(p.string());
                    v.meta.id = id++;
                    synth_videos.push_back(std::move(v));
                }
            } else {
                throw std::invalid_argument("need --synth-dir or --synthesize N");
            }
            if (synth_videos.empty()) throw std::invalid_argument("no synthesized videos found");

            std::vector<uint64_t> seeds;
            for (int i = 0; i < ag_seeds; ++i) seeds.push_back(ag_seed_base + uint64_t(i));
            SegTrainConfig tc;
            tc.steps = ag_steps;
            tc.batch = ag_batch;
            tc.lr = float(ag_lr);
            auto outcome = augmentation_experiment(d.fvideo, d.split, synth_videos, tc, seeds);

            fs::create_directories(ag_out);
            json summary;
            for (size_t s = 0; s < seeds.size(); ++s) {
                char name[64];
                std::snprintf(name, sizeof(name), "baseline_seed%zu.csv", size_t(seeds[s]));
                write_metrics_csv((fs::path(ag_out) / name).string(), outcome.baseline[s].per_video,
                                  outcome.baseline[s].aggregate);
                std::snprintf(name, sizeof(name), "augmented_seed%zu.csv", size_t(seeds[s]));
                write_metrics_csv((fs::path(ag_out) / name).string(),
                                  outcome.augmented[s].per_video, outcome.augmented[s].aggregate);
                summary["runs"].push_back(
                    {{"seed", seeds[s]},
                     {"baseline_dice", outcome.baseline[s].aggregate.dice},
                     {"augmented_dice", outcome.augmented[s].aggregate.dice},
                     {"baseline_hd", outcome.baseline[s].aggregate.hd},
                     {"augmented_hd", outcome.augmented[s].aggregate.hd}});
                std::cout << "[sfvd] seed " << seeds[s] << ": dice "
                          << outcome.baseline[s].aggregate.dice << " -> "
                          << outcome.augmented[s].aggregate.dice << "\n";
            }
            write_text_file((fs::path(ag_out) / "summary.json").string(), summary.dump(2) + "\n");
        }

        if (met->parsed()) {
            if (me_pred.size() != me_gt.size())
                throw std::invalid_argument("--pred and --gt counts differ");
            std::vector<SegMetrics> rows;
            for (size_t i = 0; i < me_pred.size(); ++i) {
                rows.push_back(metrics_of_pair(read_fvd(me_pred[i]), read_fvd(me_gt[i]), me_tol));
            }
            write_metrics_csv(me_out, rows, mean_metrics(rows));
            std::cout << "[sfvd] wrote " << rows.size() << " video rows to " << me_out << "\n";
        }

        if (abl->parsed()) {
            merge_opt(abl, "--videos-per-cell", "videos_per_cell", ab_videos);
            merge_opt(abl, "--steps", "steps", ab_steps);
            merge_opt(abl, "--lr", "lr", ab_lr);
            merge_opt(abl, "--sample-steps", "sample_steps", ab_sample_steps);
            merge_opt(abl, "--gamma-max", "gamma_max", ab_gamma_max);
            merge_opt(abl, "--seed", "seed", ab_seed);
            print_effective("ablate", {{"data", ab_data}, {"out", ab_out},
                                       {"videos_per_cell", ab_videos}, {"steps", ab_steps},
                                       {"sample_steps", ab_sample_steps},
                                       {"gamma_max", ab_gamma_max}, {"seed", ab_seed}});
            DataDir d = load_data_dir(ab_data);
            DenoiserModel scene = read_denoiser_checkpoint(ab_scene);
            DenoiserModel motion = read_denoiser_checkpoint(ab_motion);
            SegmenterModel psi = read_segmenter_checkpoint(ab_seg);
            SamplerConfig cfg;
            cfg.sample_steps = ab_sample_steps;
            cfg.guidance.gamma_max = float(ab_gamma_max);
            SegTrainConfig tc;
            tc.steps = ab_steps;
            tc.lr = float(ab_lr);
            auto cells = ablation_grid(d.fvideo, d.split, scene, motion, psi, cfg, ab_videos, tc,
                                       ab_seed);
            fs::create_directories(ab_out);
            std::string csv = "fc,sg,dice,hd,g2re,r2ge,sensitivity,precision,consec_mse\n";
            for (const auto& c : cells) {
                char row[256];
                std::snprintf(row, sizeof(row), "%d,%d,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n",
                              c.frame_consistency ? 1 : 0, c.seg_guidance ? 1 : 0, c.metrics.dice,
                              c.metrics.hd, c.metrics.g2re, c.metrics.r2ge, c.metrics.sensitivity,
                              c.metrics.precision, c.consec_mse);
                csv += row;
                std::cout << "[sfvd] cell FC" << (c.frame_consistency ? "+" : "-") << " SG"
                          << (c.seg_guidance ? "+" : "-") << ": dice " << c.metrics.dice
                          << " hd " << c.metrics.hd << " consec_mse " << c.consec_mse << "\n";
            }
            write_text_file((fs::path(ab_out) / "ablation.csv").string(), csv);
        }
    } catch (const std::exception& e) {
        std::cerr << "sfvd: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
