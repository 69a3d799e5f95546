#include "sfvd/denoiser.hpp"

#include <deque>

namespace sfvd {

std::string to_string(DenoiserRole r) {
    return r == DenoiserRole::Scene ? "scene" : "motion";
}

DenoiserRole denoiser_role_from_string(const std::string& s) {
    if (s == "scene") return DenoiserRole::Scene;
    if (s == "motion") return DenoiserRole::Motion;
    throw std::invalid_argument("unknown denoiser role: " + s);
}

DenoiserModel make_denoiser(DenoiserRole role, int base_width, ScheduleKind kind, int T,
                            double beta_start, double beta_end, uint64_t seed) {
    DenoiserModel m;
    m.role = role;
    m.desc.in_ch = role == DenoiserRole::Scene ? 2 : 4;
    m.desc.out_ch = 2;
    m.desc.base_width = base_width;
    m.desc.emb_dim = role == DenoiserRole::Scene ? kTimeEmbDim : 2 * kTimeEmbDim;
    m.sched_kind = kind;
    m.sched_T = T;
    m.beta_start = beta_start;
    m.beta_end = beta_end;
    m.train_seed = seed;
    m.params = init_params(m.desc, seed);
    return m;
}

void validate_condition(DenoiserRole role, const ConditionSet& cond, int h, int w) {
    auto check_plane = [&](const Plane* p, const char* what) {
        if (p && (p->h != h || p->w != w))
            throw std::invalid_argument(std::string("condition ") + what + ": shape mismatch");
    };
    if (cond.mask && (cond.mask->h != h || cond.mask->w != w))
        throw std::invalid_argument("condition mask: shape mismatch");
    check_plane(cond.ref1, "ref1");
    check_plane(cond.ref2, "ref2");
    if (role == DenoiserRole::Scene) {
        if (cond.ref1 || cond.ref2 || cond.frame_distance.has_value())
            throw std::invalid_argument("scene model accepts only the mask condition");
    } else {
        if (!cond.mask) throw std::invalid_argument("motion model requires a mask condition");
        bool has_ref = cond.ref1 || cond.ref2;
        if (has_ref != cond.frame_distance.has_value())
            throw std::invalid_argument("frame distance must be present iff a reference frame is");
    }
}

Prediction predict(const DenoiserModel& model, const Plane& x_t, int t, const ConditionSet& cond) {
    if (t < 1 || t > model.sched_T) throw std::invalid_argument("predict: t out of schedule range");
    validate_condition(model.role, cond, x_t.h, x_t.w);
    FmapT<float> in = assemble_input<float>(model.role, std::span<const float>(x_t.v), cond, x_t.h, x_t.w);
    std::vector<float> emb = denoiser_embedding<float>(model.role, t, cond.frame_distance);
    auto& net = cached_eval<float>(model.desc, x_t.h, x_t.w);
    const auto& y = net.forward(std::span<const float>(model.params), in, emb);

    Prediction out;
    out.eps_hat = Plane(x_t.h, x_t.w);
    out.v_hat = Plane(x_t.h, x_t.w);
    const float* e = y.ch(0);
    const float* v = y.ch(1);
    for (size_t i = 0; i < out.eps_hat.size(); ++i) {
        out.eps_hat.v[i] = e[i];
        out.v_hat.v[i] = detail::sigmoid(v[i]);
    }
    return out;
}

LossParts hybrid_loss(const DenoiserModel& model, const Plane& x0, int t, const Plane& eps,
                      const ConditionSet& cond, float lambda) {
    require_same_shape(x0, eps, "hybrid_loss");
    validate_condition(model.role, cond, x0.h, x0.w);
    NoiseSchedule sched = model.schedule();
    Plane x_t = forward_sample(x0, t, eps, sched);
    FmapT<float> in = assemble_input<float>(model.role, std::span<const float>(x_t.v), cond, x0.h, x0.w);
    std::vector<float> emb = denoiser_embedding<float>(model.role, t, cond.frame_distance);
    auto& net = cached_eval<float>(model.desc, x0.h, x0.w);
    auto r = hybrid_loss_core<float>(net, std::span<const float>(model.params),
                                     std::span<const float>(x0.v), in, emb, t, sched,
                                     std::span<const float>(eps.v), lambda,
                                     /*full_grad=*/false, {});
    return {r.total, r.simple, r.vlb};
}

std::vector<SceneFrame> scene_pool_from_videos(std::span<const LabeledVideo> videos) {
    std::vector<SceneFrame> pool;
    for (const auto& v : videos) {
        for (size_t i = 0; i < v.frames.size(); ++i) {
            pool.push_back({&v.frames[i], v.annotated[i] ? &v.masks[i] : nullptr});
        }
    }
    return pool;
}

namespace {

// One queued training example, fully drawn up front so the parallel section
// is a pure function of its slot.
struct DrawnExample {
    const Plane* x0 = nullptr;
    const Mask* mask = nullptr;
    const Plane* ref1 = nullptr;
    std::optional<int> delta;
    int t = 1;
    Plane eps;
};

class SmoothTracker {
public:
    explicit SmoothTracker(int window) : window_(std::max(window, 1)) {}

    void push(double loss) {
        recent_.push_back(loss);
        sum_ += loss;
        if (int(recent_.size()) > window_) {
            sum_ -= recent_.front();
            recent_.pop_front();
        }
        ++count_;
        if (count_ == window_) initial_ = sum_ / window_;
    }

    bool full() const { return int(recent_.size()) == window_; }
    double trailing() const { return recent_.empty() ? 0.0 : sum_ / double(recent_.size()); }
    // mean of the first `window` losses; falls back to the running mean when
    // the run is shorter than one window
    double initial() const { return count_ >= window_ ? initial_ : trailing(); }

private:
    int window_;
    int count_ = 0;
    double sum_ = 0.0;
    double initial_ = 0.0;
    std::deque<double> recent_;
};

TrainResult run_denoiser_training(DenoiserModel& model, const TrainConfig& cfg,
                                  const std::function<DrawnExample(Rng&)>& draw) {
    NoiseSchedule sched = model.schedule();
    const size_t np = model.params.size();
    AdamState adam;
    adam.init(np);
    Rng rng(mix_seed(cfg.seed, 0x7261));

    std::vector<DrawnExample> batch(cfg.batch);
    std::vector<std::vector<float>> grads(cfg.batch, std::vector<float>(np, 0.0f));
    std::vector<HybridLossOut<float>> losses(cfg.batch);
    std::vector<float> grad(np);

    TrainResult res;
    SmoothTracker smooth(cfg.smooth_window);

    for (int step = 1; step <= cfg.steps; ++step) {
        for (int b = 0; b < cfg.batch; ++b) {
            batch[b] = draw(rng);
            batch[b].t = 1 + int(rng.below(uint64_t(sched.step_count)));
            batch[b].eps = Plane(batch[b].x0->h, batch[b].x0->w);
            fill_normal(batch[b].eps, rng);
        }
        parallel_for(cfg.batch, [&](int b) {
            const DrawnExample& ex = batch[b];
            Plane x_t = forward_sample(*ex.x0, ex.t, ex.eps, sched);
            ConditionSet cond{ex.mask, ex.ref1, nullptr, ex.delta};
            FmapT<float> in = assemble_input<float>(model.role, std::span<const float>(x_t.v),
                                                    cond, x_t.h, x_t.w);
            std::vector<float> emb = denoiser_embedding<float>(model.role, ex.t, ex.delta);
            auto& net = cached_eval<float>(model.desc, x_t.h, x_t.w);
            std::fill(grads[b].begin(), grads[b].end(), 0.0f);
            losses[b] = hybrid_loss_core<float>(net, std::span<const float>(model.params),
                                                std::span<const float>(ex.x0->v), in, emb, ex.t,
                                                sched, std::span<const float>(ex.eps.v),
                                                cfg.lambda_vlb, /*full_grad=*/false, grads[b]);
        });

        std::fill(grad.begin(), grad.end(), 0.0f);
        double loss = 0, l_simple = 0, l_vlb = 0;
        const float inv_b = 1.0f / float(cfg.batch);
        for (int b = 0; b < cfg.batch; ++b) {
            for (size_t i = 0; i < np; ++i) grad[i] += grads[b][i] * inv_b;
            loss += losses[b].total;
            l_simple += losses[b].simple;
            l_vlb += losses[b].vlb;
        }
        loss /= cfg.batch;
        l_simple /= cfg.batch;
        l_vlb /= cfg.batch;

        clip_global_norm(grad, cfg.clip_norm);
        adam_step(model.params, grad, adam, cfg.lr);

        res.log.push_back({step, loss, l_simple, l_vlb});
        smooth.push(loss);
        res.steps_run = step;
        if (cfg.early_stop_ratio > 0.0f && smooth.full() && step >= 2 * cfg.smooth_window &&
            smooth.trailing() <= cfg.early_stop_ratio * smooth.initial()) {
            break;
        }
    }
    res.initial_smoothed = smooth.initial();
    res.final_smoothed = smooth.trailing();
    return res;
}

}  // namespace

TrainResult train_scene(DenoiserModel& model, std::span<const SceneFrame> data, const TrainConfig& cfg) {
    if (model.role != DenoiserRole::Scene) throw std::invalid_argument("train_scene: wrong model role");
    if (data.empty()) throw std::invalid_argument("train_scene: empty dataset");
    bool any_annotated = false;
    for (const auto& f : data) any_annotated = any_annotated || f.mask != nullptr;
    if (!any_annotated)
        throw std::invalid_argument("train_scene: no annotated frames, conditioning untrainable");

    auto draw = [&data](Rng& rng) {
        const SceneFrame& f = data[rng.below(data.size())];
        DrawnExample ex;
        ex.x0 = f.image;
        ex.mask = f.mask;  // null mask = ABSENT sentinel: the unconditional branch
        return ex;
    };
    return run_denoiser_training(model, cfg, draw);
}

TrainResult train_motion(DenoiserModel& model, std::span<const LabeledVideo> videos, const TrainConfig& cfg) {
    if (model.role != DenoiserRole::Motion) throw std::invalid_argument("train_motion: wrong model role");
    if (videos.empty()) throw std::invalid_argument("train_motion: empty dataset");
    for (const auto& v : videos) {
        if (v.frame_count() < 2) throw std::invalid_argument("train_motion: videos need >= 2 frames");
        for (uint8_t a : v.annotated)
            if (!a) throw std::invalid_argument("train_motion: all frames must carry masks");
    }

    TrainResult* stats = nullptr;
    auto draw = [&videos, &stats, p_drop = cfg.p_drop](Rng& rng) {
        const LabeledVideo& v = videos[rng.below(videos.size())];
        int n = v.frame_count();
        int target = int(rng.below(uint64_t(n)));
        int ref = int(rng.below(uint64_t(n - 1)));
        if (ref >= target) ++ref;  // ref != target, so |delta| >= 1
        DrawnExample ex;
        ex.x0 = &v.frames[target];
        ex.mask = &v.masks[target];
        if (rng.uniform() < p_drop) {
            // reference dropout teaches the eps(x_t, t, M) branch
            stats->ref_absent++;
        } else {
            ex.ref1 = &v.frames[ref];
            ex.delta = target - ref;
            stats->ref_present++;
            (*ex.delta > 0 ? stats->delta_pos : stats->delta_neg)++;
        }
        return ex;
    };

    // two-phase so the lambda can record into the result object
    TrainResult res;
    stats = &res;
    TrainResult run = run_denoiser_training(model, cfg, draw);
    run.ref_present = res.ref_present;
    run.ref_absent = res.ref_absent;
    run.delta_pos = res.delta_pos;
    run.delta_neg = res.delta_neg;
    return run;
}

}  // namespace sfvd
