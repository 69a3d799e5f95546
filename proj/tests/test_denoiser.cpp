#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sfvd/denoiser.hpp"
#include "sfvd/synth.hpp"

using namespace sfvd;

namespace {

SceneConfig tiny_cfg() {
    SceneConfig cfg;
    cfg.height = 16;
    cfg.width = 16;
    cfg.frame_count = 4;
    return cfg;
}

}  // namespace

TEST_CASE("predict: determinism, output contracts, validation") {
    DenoiserModel m = make_denoiser(DenoiserRole::Scene, 8, ScheduleKind::Cosine, 100, 1e-4, 0.02, 5);
    Plane x(16, 16);
    Rng rng(1);
    fill_normal(x, rng);
    Mask mask(16, 16);
    mask.at(4, 4) = 1;

    Prediction a = predict(m, x, 50, ConditionSet{&mask});
    Prediction b = predict(m, x, 50, ConditionSet{&mask});
    CHECK(a.eps_hat.v == b.eps_hat.v);
    CHECK(a.v_hat.v == b.v_hat.v);
    for (float v : a.v_hat.v) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
    }

    // scene role rejects reference frames; t must be in range
    Plane ref(16, 16);
    CHECK_THROWS_AS(predict(m, x, 50, ConditionSet{&mask, &ref, nullptr, 1}), std::invalid_argument);
    CHECK_THROWS_AS(predict(m, x, 0, ConditionSet{&mask}), std::invalid_argument);
    CHECK_THROWS_AS(predict(m, x, 101, ConditionSet{&mask}), std::invalid_argument);
    Mask bad(8, 8);
    CHECK_THROWS_AS(predict(m, x, 50, ConditionSet{&bad}), std::invalid_argument);

    DenoiserModel mm = make_denoiser(DenoiserRole::Motion, 8, ScheduleKind::Cosine, 100, 1e-4, 0.02, 6);
    // motion requires a mask, and distance iff reference
    CHECK_THROWS_AS(predict(mm, x, 50, ConditionSet{}), std::invalid_argument);
    CHECK_THROWS_AS(predict(mm, x, 50, ConditionSet{&mask, &ref, nullptr, std::nullopt}),
                    std::invalid_argument);
    CHECK_THROWS_AS(predict(mm, x, 50, ConditionSet{&mask, nullptr, nullptr, 3}),
                    std::invalid_argument);
    CHECK_NOTHROW(predict(mm, x, 50, ConditionSet{&mask}));
    CHECK_NOTHROW(predict(mm, x, 50, ConditionSet{&mask, &ref, nullptr, -3}));
}

TEST_CASE("hybrid_loss: lambda 0 reduces to MSE; KL term matches a closed-form oracle") {
    DenoiserModel m = make_denoiser(DenoiserRole::Scene, 8, ScheduleKind::Cosine, 60, 1e-4, 0.02, 7);
    NoiseSchedule sched = m.schedule();
    Rng rng(2);
    Plane x0(16, 16);
    for (auto& v : x0.v) v = float(rng.uniform(-0.9, 0.9));
    Plane eps(16, 16);
    fill_normal(eps, rng);
    Mask mask(16, 16);
    mask.at(3, 3) = 1;
    ConditionSet cond{&mask};
    const int t = 30;

    LossParts zero_lambda = hybrid_loss(m, x0, t, eps, cond, 0.0f);
    CHECK(zero_lambda.total == zero_lambda.simple);

    LossParts full = hybrid_loss(m, x0, t, eps, cond, 1e-3f);
    CHECK(full.simple == zero_lambda.simple);
    CHECK(full.total == doctest::Approx(full.simple + 1e-3 * full.vlb).epsilon(1e-6));

    // closed-form Gaussian KL oracle through the public ops
    Plane x_t = forward_sample(x0, t, eps, sched);
    Prediction pred = predict(m, x_t, t, cond);
    Plane mu_p = reverse_mean(x_t, pred.eps_hat, t, sched);
    Plane sig2 = reverse_variance(pred.v_hat, t, sched);
    Plane mu_q = posterior_mean(x0, x_t, t, sched);
    double kl_sum = 0;
    const double var_q = sched.posterior_var(t);
    for (size_t i = 0; i < x0.size(); ++i) {
        double vp = sig2.v[i];
        double d = double(mu_q.v[i]) - mu_p.v[i];
        kl_sum += 0.5 * (std::log(vp / var_q) + (var_q + d * d) / vp - 1.0);
    }
    double oracle = kl_sum / double(x0.size()) / std::log(2.0);
    CHECK(full.vlb == doctest::Approx(oracle).epsilon(1e-4));
}

TEST_CASE("train_scene: preconditions") {
    DenoiserModel m = make_denoiser(DenoiserRole::Scene, 8, ScheduleKind::Cosine, 40, 1e-4, 0.02, 1);
    TrainConfig cfg;
    cfg.steps = 1;
    cfg.batch = 2;
    std::vector<SceneFrame> empty;
    CHECK_THROWS_AS(train_scene(m, empty, cfg), std::invalid_argument);

    Plane img(16, 16);
    std::vector<SceneFrame> unannotated{{&img, nullptr}, {&img, nullptr}};
    CHECK_THROWS_AS(train_scene(m, unannotated, cfg), std::invalid_argument);

    DenoiserModel wrong = make_denoiser(DenoiserRole::Motion, 8, ScheduleKind::Cosine, 40, 1e-4, 0.02, 1);
    Mask mk(16, 16);
    std::vector<SceneFrame> ok{{&img, &mk}};
    CHECK_THROWS_AS(train_scene(wrong, ok, cfg), std::invalid_argument);
}

TEST_CASE("train_scene: same seed gives bitwise-identical parameters") {
    auto vids = make_fvideo_set(3, tiny_cfg(), 4);
    auto pool = scene_pool_from_videos(vids);
    TrainConfig cfg;
    cfg.steps = 25;
    cfg.batch = 4;
    cfg.seed = 11;

    DenoiserModel m1 = make_denoiser(DenoiserRole::Scene, 8, ScheduleKind::Cosine, 40, 1e-4, 0.02, 9);
    DenoiserModel m2 = make_denoiser(DenoiserRole::Scene, 8, ScheduleKind::Cosine, 40, 1e-4, 0.02, 9);
    auto r1 = train_scene(m1, pool, cfg);
    auto r2 = train_scene(m2, pool, cfg);
    CHECK(m1.params == m2.params);
    REQUIRE(r1.log.size() == r2.log.size());
    for (size_t i = 0; i < r1.log.size(); ++i) CHECK(r1.log[i].loss == r2.log[i].loss);
}

TEST_CASE("train_scene smoke: loss drops on a tiny run and the log is well-formed") {
    auto vids = make_fvideo_set(6, tiny_cfg(), 8);
    auto pool = scene_pool_from_videos(vids);
    TrainConfig cfg;
    cfg.steps = 120;
    cfg.batch = 8;
    cfg.seed = 3;
    cfg.lr = 3e-4f;
    cfg.smooth_window = 20;

    DenoiserModel m = make_denoiser(DenoiserRole::Scene, 8, ScheduleKind::Cosine, 40, 1e-4, 0.02, 10);
    auto res = train_scene(m, pool, cfg);
    REQUIRE(res.log.size() == 120);
    for (size_t i = 0; i < res.log.size(); ++i) {
        CHECK(res.log[i].step == int(i) + 1);
        CHECK(std::isfinite(res.log[i].loss));
        CHECK(res.log[i].loss >= 0.0);
    }
    CHECK(res.final_smoothed < res.initial_smoothed);
}

TEST_CASE("condition sensitivity: the trained net does not ignore the mask") {
    auto vids = make_fvideo_set(6, tiny_cfg(), 8);
    auto pool = scene_pool_from_videos(vids);
    TrainConfig cfg;
    cfg.steps = 150;
    cfg.batch = 8;
    cfg.seed = 5;
    cfg.lr = 3e-4f;
    DenoiserModel m = make_denoiser(DenoiserRole::Scene, 8, ScheduleKind::Cosine, 40, 1e-4, 0.02, 12);
    train_scene(m, pool, cfg);

    Plane x(16, 16);
    Rng rng(9);
    fill_normal(x, rng);
    Mask empty(16, 16);
    Mask wire(16, 16);
    for (int i = 4; i < 12; ++i) wire.at(8, i) = 1;
    Prediction a = predict(m, x, 10, ConditionSet{&empty});
    Prediction b = predict(m, x, 10, ConditionSet{&wire});
    double mad = 0;
    for (size_t i = 0; i < a.eps_hat.size(); ++i)
        mad += std::fabs(double(a.eps_hat.v[i]) - b.eps_hat.v[i]);
    CHECK(mad / double(a.eps_hat.size()) > 0.0);
}

TEST_CASE("train_motion: preconditions, dropout bookkeeping, signed distances") {
    auto vids = make_fvideo_set(4, tiny_cfg(), 14);
    DenoiserModel m = make_denoiser(DenoiserRole::Motion, 8, ScheduleKind::Cosine, 40, 1e-4, 0.02, 2);

    TrainConfig cfg;
    cfg.steps = 60;
    cfg.batch = 8;
    cfg.seed = 21;
    cfg.p_drop = 0.0f;
    auto res = train_motion(m, vids, cfg);
    CHECK(res.ref_absent == 0);
    CHECK(res.ref_present == 60 * 8);
    double pos = double(res.delta_pos) / double(res.delta_pos + res.delta_neg);
    CHECK(pos >= 0.3);
    CHECK(pos <= 0.7);

    DenoiserModel m2 = make_denoiser(DenoiserRole::Motion, 8, ScheduleKind::Cosine, 40, 1e-4, 0.02, 2);
    cfg.p_drop = 0.2f;
    auto res2 = train_motion(m2, vids, cfg);
    CHECK(res2.ref_absent > 0);
    CHECK(res2.ref_present > 0);

    // partially annotated videos are rejected
    auto partial = make_pimage_set(2, 0.5, tiny_cfg(), 3);
    CHECK_THROWS_AS(train_motion(m2, partial, cfg), std::invalid_argument);
    std::vector<LabeledVideo> none;
    CHECK_THROWS_AS(train_motion(m2, none, cfg), std::invalid_argument);
}

TEST_CASE("degenerate constant-image dataset: loss collapses, v_hat drifts up at small t") {
    // constant images with an all-zero annotated mask
    Plane img(16, 16, 0.25f);
    Mask mk(16, 16, 0);
    std::vector<SceneFrame> pool(8, SceneFrame{&img, &mk});

    DenoiserModel m = make_denoiser(DenoiserRole::Scene, 8, ScheduleKind::Cosine, 40, 1e-4, 0.02, 30);
    TrainConfig cfg;
    cfg.steps = 400;
    cfg.batch = 8;
    cfg.seed = 40;
    cfg.lr = 1e-3f;
    cfg.smooth_window = 30;
    auto res = train_scene(m, pool, cfg);
    CHECK(res.final_smoothed < 0.5 * res.initial_smoothed);

    Plane x_t(16, 16);
    Rng rng(41);
    Plane eps(16, 16);
    fill_normal(eps, rng);
    NoiseSchedule sched = m.schedule();
    x_t = forward_sample(img, 2, eps, sched);
    Prediction p = predict(m, x_t, 2, ConditionSet{&mk});
    double mean_v = 0;
    for (float v : p.v_hat.v) mean_v += v;
    mean_v /= double(p.v_hat.size());
    CHECK(mean_v > 0.5);
}
