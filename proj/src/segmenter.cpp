#include "sfvd/segmenter.hpp"

#include <deque>

namespace sfvd {

SegmenterModel make_segmenter(int base_width, uint64_t seed) {
    SegmenterModel m;
    m.desc.in_ch = 1;
    m.desc.out_ch = 1;
    m.desc.base_width = base_width;
    m.desc.emb_dim = 0;
    m.train_seed = seed;
    m.params = init_params(m.desc, seed);
    return m;
}

std::vector<SegFrame> seg_pool_from_videos(std::span<const LabeledVideo> videos) {
    std::vector<SegFrame> pool;
    for (const auto& v : videos) {
        for (size_t i = 0; i < v.frames.size(); ++i) {
            if (v.annotated[i]) pool.push_back({&v.frames[i], &v.masks[i]});
        }
    }
    return pool;
}

Plane segment_logits(const SegmenterModel& psi, const Plane& frame) {
    FmapT<float> in(1, frame.h, frame.w);
    std::copy(frame.v.begin(), frame.v.end(), in.ch(0));
    auto& net = cached_eval<float>(psi.desc, frame.h, frame.w);
    const auto& y = net.forward(std::span<const float>(psi.params), in, {});
    Plane out(frame.h, frame.w);
    std::copy(y.ch(0), y.ch(0) + out.size(), out.v.begin());
    return out;
}

Plane segment(const SegmenterModel& psi, const Plane& frame) {
    Plane z = segment_logits(psi, frame);
    for (auto& x : z.v) x = detail::sigmoid(x);
    return z;
}

Mask threshold_mask(const Plane& prob, float thresh) {
    Mask m(prob.h, prob.w);
    for (size_t i = 0; i < prob.size(); ++i) m.v[i] = prob.v[i] > thresh ? 1 : 0;
    return m;
}

double seg_log_likelihood(const SegmenterModel& psi, const Plane& frame, const Mask& mask) {
    if (frame.h != mask.h || frame.w != mask.w)
        throw std::invalid_argument("seg_log_likelihood: shape mismatch");
    FmapT<float> in(1, frame.h, frame.w);
    std::copy(frame.v.begin(), frame.v.end(), in.ch(0));
    auto& net = cached_eval<float>(psi.desc, frame.h, frame.w);
    return double(seg_log_likelihood_core<float>(net, std::span<const float>(psi.params), in,
                                                 mask, nullptr, {}));
}

namespace {

// BCE + soft Dice on logits. Returns loss and writes d loss / d logit.
float seg_loss_and_grad(const float* z, const Mask& mask, float* gz) {
    const size_t n = mask.v.size();
    double bce = 0;
    double sum_s = 0, sum_m = 0, sum_sm = 0;
    std::vector<float> s(n);
    for (size_t i = 0; i < n; ++i) {
        float m = float(mask.v[i]);
        float zi = z[i];
        // max(z,0) - z m + log(1 + exp(-|z|))
        bce += std::max(zi, 0.0f) - zi * m + std::log1p(std::exp(-std::fabs(zi)));
        s[i] = detail::sigmoid(zi);
        sum_s += s[i];
        sum_m += m;
        sum_sm += double(s[i]) * m;
    }
    bce /= double(n);
    const double eps = 1.0;
    const double denom = sum_s + sum_m + eps;
    const double dice = (2.0 * sum_sm + eps) / denom;
    float loss = float(bce + (1.0 - dice));
    for (size_t i = 0; i < n; ++i) {
        float m = float(mask.v[i]);
        float g_bce = (s[i] - m) / float(n);
        // d(1 - dice)/ds_i = -(2 m_i denom - (2 sum_sm + eps)) / denom^2
        float g_dice = -float((2.0 * m * denom - (2.0 * sum_sm + eps)) / (denom * denom));
        gz[i] = g_bce + g_dice * s[i] * (1.0f - s[i]);
    }
    return loss;
}

}  // namespace

SegTrainResult train_segmenter(SegmenterModel& model, std::span<const SegFrame> data,
                               const SegTrainConfig& cfg, bool noise_augment,
                               std::span<const SegFrame> extra) {
    if (data.empty()) throw std::invalid_argument("train_segmenter: empty dataset");
    for (const auto& f : data)
        if (!f.image || !f.mask) throw std::invalid_argument("train_segmenter: frame without mask");

    model.noise_augment = noise_augment;
    NoiseSchedule sched = build_schedule(model.sched_kind, model.sched_T, model.beta_start, model.beta_end);

    const size_t np = model.params.size();
    AdamState adam;
    adam.init(np);
    Rng rng(mix_seed(cfg.seed, 0x5367));

    struct Item {
        Plane image;  // owned: may be a noised copy
        const Mask* mask;
    };
    std::vector<Item> batch(cfg.batch);
    std::vector<std::vector<float>> grads(cfg.batch, std::vector<float>(np, 0.0f));
    std::vector<float> losses(cfg.batch, 0.0f);
    std::vector<float> grad(np);

    SegTrainResult res;
    double smooth_sum = 0;
    std::deque<double> recent;
    double initial = 0;
    int seen = 0;

    for (int step = 1; step <= cfg.steps; ++step) {
        for (int b = 0; b < cfg.batch; ++b) {
            const SegFrame& f = (!extra.empty() && b % 2 == 1)
                                    ? extra[rng.below(extra.size())]
                                    : data[rng.below(data.size())];
            if (noise_augment) {
                int t = 1 + int(rng.below(uint64_t(sched.step_count / 2)));
                Plane eps(f.image->h, f.image->w);
                fill_normal(eps, rng);
                batch[b] = {forward_sample(*f.image, t, eps, sched), f.mask};
                res.noised_inputs++;
            } else {
                batch[b] = {*f.image, f.mask};
            }
        }
        parallel_for(cfg.batch, [&](int b) {
            const Item& it = batch[b];
            FmapT<float> in(1, it.image.h, it.image.w);
            std::copy(it.image.v.begin(), it.image.v.end(), in.ch(0));
            auto& net = cached_eval<float>(model.desc, it.image.h, it.image.w);
            const auto& y = net.forward(std::span<const float>(model.params), in, {});
            FmapT<float> gy(1, it.image.h, it.image.w);
            losses[b] = seg_loss_and_grad(y.ch(0), *it.mask, gy.ch(0));
            std::fill(grads[b].begin(), grads[b].end(), 0.0f);
            net.backward(std::span<const float>(model.params), gy,
                         std::span<float>(grads[b]), nullptr);
        });

        std::fill(grad.begin(), grad.end(), 0.0f);
        double loss = 0;
        const float inv_b = 1.0f / float(cfg.batch);
        for (int b = 0; b < cfg.batch; ++b) {
            for (size_t i = 0; i < np; ++i) grad[i] += grads[b][i] * inv_b;
            loss += losses[b];
        }
        loss /= cfg.batch;
        clip_global_norm(grad, cfg.clip_norm);
        adam_step(model.params, grad, adam, cfg.lr);

        res.log.push_back({step, loss});
        recent.push_back(loss);
        smooth_sum += loss;
        if (int(recent.size()) > cfg.smooth_window) {
            smooth_sum -= recent.front();
            recent.pop_front();
        }
        ++seen;
        if (seen == cfg.smooth_window) initial = smooth_sum / cfg.smooth_window;
        res.steps_run = step;
        double trailing = smooth_sum / double(recent.size());
        if (cfg.early_stop_ratio > 0.0f && seen >= 2 * cfg.smooth_window &&
            trailing <= cfg.early_stop_ratio * initial) {
            break;
        }
    }
    res.initial_smoothed = seen >= cfg.smooth_window ? initial : smooth_sum / double(recent.size());
    res.final_smoothed = smooth_sum / double(recent.size());
    return res;
}

}  // namespace sfvd
