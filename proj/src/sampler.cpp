#include "sfvd/sampler.hpp"

#include <deque>
#include <functional>

namespace sfvd {

FramePlan subdivision_order(int frame_count) {
    if (frame_count < 1) throw std::invalid_argument("subdivision_order: N must be >= 1");
    FramePlan plan;
    plan.frame_count = frame_count;
    plan.steps.push_back({0, StageTag::Leading, -1, -1, 0, 0});
    if (frame_count == 1) return plan;
    int last = frame_count - 1;
    plan.steps.push_back({last, StageTag::Concluding, 0, -1, last, 0});
    // BFS over generated-adjacent segments visits levels left-to-right
    std::deque<std::pair<int, int>> segs;
    segs.emplace_back(0, last);
    while (!segs.empty()) {
        auto [a, b] = segs.front();
        segs.pop_front();
        if (b - a < 2) continue;
        int m = (a + b) / 2;
        plan.steps.push_back({m, StageTag::Intermediate, a, b, m - a, b - m});
        segs.emplace_back(a, m);
        segs.emplace_back(m, b);
    }
    return plan;
}

FramePlan chronological_order(int frame_count) {
    if (frame_count < 1) throw std::invalid_argument("chronological_order: N must be >= 1");
    FramePlan plan;
    plan.frame_count = frame_count;
    plan.steps.push_back({0, StageTag::Leading, -1, -1, 0, 0});
    for (int i = 1; i < frame_count; ++i) {
        plan.steps.push_back({i, StageTag::Concluding, i - 1, -1, 1, 0});
    }
    return plan;
}

void validate_plan(const FramePlan& plan) {
    std::vector<char> seen(plan.frame_count, 0);
    for (const auto& s : plan.steps) {
        if (s.target < 0 || s.target >= plan.frame_count || seen[s.target])
            throw std::logic_error("plan: bad target coverage");
        if (s.ref1 >= 0 && !seen[s.ref1]) throw std::logic_error("plan: ref1 not yet generated");
        if (s.ref2 >= 0 && !seen[s.ref2]) throw std::logic_error("plan: ref2 not yet generated");
        switch (s.stage) {
            case StageTag::Leading:
                if (s.ref1 >= 0 || s.ref2 >= 0) throw std::logic_error("plan: leading has conditioning");
                break;
            case StageTag::Concluding:
                if (s.ref1 < 0 || s.ref2 >= 0) throw std::logic_error("plan: concluding needs one ref");
                break;
            case StageTag::Intermediate:
                if (s.ref1 < 0 || s.ref2 < 0) throw std::logic_error("plan: intermediate needs two refs");
                break;
        }
        seen[s.target] = 1;
    }
    for (char c : seen)
        if (!c) throw std::logic_error("plan: frame never targeted");
}

Plane reverse_step(const Plane& x_t, int t, const Plane& eps_bar, const Plane& v_hat,
                   const NoiseSchedule& sched, Rng& rng, float gamma, const Plane& seg_grad) {
    Plane mu = reverse_mean(x_t, eps_bar, t, sched);
    Plane sigma2 = reverse_variance(v_hat, t, sched);
    Plane shifted = seg_guided_mean(mu, sigma2, seg_grad, gamma);
    if (t == 1) return shifted;
    for (size_t i = 0; i < shifted.size(); ++i) {
        shifted.v[i] += std::sqrt(sigma2.v[i]) * rng.normal_f();
    }
    return shifted;
}

Plane generate_frame(const PlanStep& step, std::span<const Mask> masks,
                     std::span<const Plane> frames, const DenoiserModel& scene,
                     const DenoiserModel& motion, const SegmenterModel& psi,
                     const RespacedSchedule& rs, const GuidanceConfig& guide, float gamma,
                     Rng& rng) {
    const Mask& mask = masks[step.target];
    const int h = mask.h, w = mask.w;
    if (step.ref1 >= 0 && frames[step.ref1].size() == 0)
        throw std::invalid_argument("generate_frame: reference frame missing");
    if (step.ref2 >= 0 && frames[step.ref2].size() == 0)
        throw std::invalid_argument("generate_frame: reference frame missing");

    Plane x(h, w);
    fill_normal(x, rng);

    const int S = int(rs.orig_timestep.size());
    Plane zero_grad(h, w, 0.0f);
    for (int i = S; i >= 1; --i) {
        const int t_model = rs.orig_timestep[i - 1];
        Plane eps_bar, v_hat, grad;

        // the guidance branches and the segmenter gradient are independent;
        // run them side by side
        std::vector<std::function<void()>> tasks;
        Prediction pa, pb, pc;
        switch (step.stage) {
            case StageTag::Leading:
                tasks.push_back([&] { pa = predict(scene, x, t_model, ConditionSet{}); });
                tasks.push_back([&] { pb = predict(scene, x, t_model, ConditionSet{&mask}); });
                break;
            case StageTag::Concluding:
                tasks.push_back([&] { pa = predict(motion, x, t_model, ConditionSet{&mask}); });
                tasks.push_back([&] {
                    pb = predict(motion, x, t_model,
                                 ConditionSet{&mask, &frames[step.ref1], nullptr, step.dist1});
                });
                break;
            case StageTag::Intermediate:
                tasks.push_back([&] { pa = predict(motion, x, t_model, ConditionSet{&mask}); });
                tasks.push_back([&] {
                    pb = predict(motion, x, t_model,
                                 ConditionSet{&mask, &frames[step.ref1], nullptr, step.dist1});
                });
                tasks.push_back([&] {
                    pc = predict(motion, x, t_model,
                                 ConditionSet{&mask, &frames[step.ref2], nullptr, -step.dist2});
                });
                break;
        }
        if (gamma > 0.0f) {
            tasks.push_back([&] { grad = seg_log_likelihood_grad(psi, x, mask); });
        }
        parallel_for(int(tasks.size()), [&](int k) { tasks[k](); });

        // variance from the conditional branch of the active composition:
        // scene/single use the conditioned prediction, the pair stage keeps
        // the mask-only branch
        switch (step.stage) {
            case StageTag::Leading:
                eps_bar = combine_scene(pa.eps_hat, pb.eps_hat, guide.omega_scene);
                v_hat = std::move(pb.v_hat);
                break;
            case StageTag::Concluding:
                eps_bar = combine_motion(pa.eps_hat, pb.eps_hat, guide.omega_concluding);
                v_hat = std::move(pb.v_hat);
                break;
            case StageTag::Intermediate:
                eps_bar = combine_fc(pa.eps_hat, pb.eps_hat, pc.eps_hat, guide.omega_intermediate);
                v_hat = std::move(pa.v_hat);
                break;
        }
        x = reverse_step(x, i, eps_bar, v_hat, rs.sched, rng,
                         gamma, gamma > 0.0f ? grad : zero_grad);
    }
    for (auto& v : x.v) v = std::clamp(v, -1.0f, 1.0f);
    return x;
}

GeneratedVideo generate_video(std::span<const Mask> masks, const DenoiserModel& scene,
                              const DenoiserModel& motion, const SegmenterModel& psi,
                              const SamplerConfig& cfg, uint64_t seed) {
    if (masks.empty()) throw std::invalid_argument("generate_video: empty mask sequence");
    for (const auto& m : masks) {
        if (!m.same_shape(masks[0])) throw std::invalid_argument("generate_video: mask shapes differ");
    }
    const int n = int(masks.size());
    FramePlan plan = cfg.mode == SampleMode::Subdivision ? subdivision_order(n)
                                                         : chronological_order(n);
    NoiseSchedule base = scene.schedule();
    RespacedSchedule rs = respace_schedule(base, std::min(cfg.sample_steps, base.step_count));

    GeneratedVideo out;
    out.seed = seed;
    Rng gamma_rng(mix_seed(seed, 0x6a33a));
    out.gamma = cfg.guidance.gamma_max > 0.0f
                    ? float(gamma_rng.uniform(0.0, double(cfg.guidance.gamma_max)))
                    : 0.0f;

    out.frames.assign(n, Plane{});
    out.masks.assign(masks.begin(), masks.end());
    for (const auto& step : plan.steps) {
        Rng frame_rng(mix_seed(seed, 0x1000 + uint64_t(step.target)));
        out.frames[step.target] =
            generate_frame(step, masks, out.frames, scene, motion, psi, rs, cfg.guidance,
                           out.gamma, frame_rng);
    }
    return out;
}

}  // namespace sfvd
