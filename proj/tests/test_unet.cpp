#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sfvd/denoiser.hpp"

using namespace sfvd;

TEST_CASE("manifest layout is contiguous and deterministic") {
    NetDesc d{2, 2, 16, 32};
    Manifest m = build_manifest(d);
    size_t off = 0;
    for (const auto& e : m.entries) {
        CHECK(e.offset == off);
        off += e.count;
    }
    CHECK(off == m.total);
    auto p1 = init_params(d, 5);
    auto p2 = init_params(d, 5);
    CHECK(p1 == p2);
    auto p3 = init_params(d, 6);
    CHECK(p1 != p3);
}

TEST_CASE("forward is deterministic (bitwise)") {
    NetDesc d{2, 2, 16, 32};
    auto params = init_params(d, 3);
    UNetEval<float> net(d, 16, 16);
    FmapT<float> in(2, 16, 16);
    Rng rng(4);
    for (auto& v : in.v) v = rng.normal_f();
    std::vector<float> emb(32);
    sinusoidal_embed(123.0, 32, emb.data());
    auto y1 = net.forward(params, in, emb).v;
    auto y2 = net.forward(params, in, emb).v;
    CHECK(y1 == y2);
}

TEST_CASE("net is translation-equivariant under circular shifts of one period") {
    NetDesc d{1, 1, 8, 0};
    auto params = init_params(d, 9);
    UNetEval<float> net(d, 16, 16);
    FmapT<float> in(1, 16, 16);
    Rng rng(5);
    for (auto& v : in.v) v = rng.normal_f();

    auto out1 = net.forward(params, in, {}).v;

    // shift by (4, 8): multiples of the total downsampling factor
    const int dy = 4, dx = 8, H = 16, W = 16;
    FmapT<float> shifted(1, H, W);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            shifted.v[size_t((y + dy) % H) * W + (x + dx) % W] = in.v[size_t(y) * W + x];
    auto out2 = net.forward(params, shifted, {}).v;

    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            CHECK(out2[size_t((y + dy) % H) * W + (x + dx) % W] == out1[size_t(y) * W + x]);
}

TEST_CASE("hybrid loss gradients match central finite differences (64-bit)") {
    NetDesc d{2, 2, 8, 32};
    auto params_f = init_params(d, 21);
    std::vector<double> params(params_f.begin(), params_f.end());
    auto sched = build_schedule(ScheduleKind::Cosine, 50);
    UNetEval<double> net(d, 16, 16);

    Rng rng(77);
    const int hw = 16 * 16;
    std::vector<double> x0(hw), eps(hw);
    for (auto& v : x0) v = rng.uniform(-0.95, 0.95);
    for (auto& v : eps) v = rng.normal();
    Mask mask(16, 16);
    for (auto& v : mask.v) v = rng.uniform() < 0.2 ? 1 : 0;

    // both a t >= 2 step (KL) and the t = 1 step (discretized NLL)
    for (int t : {1, 25}) {
        std::vector<double> emb(32);
        sinusoidal_embed(double(t), 32, emb.data());
        FmapT<double> input(2, 16, 16);
        double a = std::sqrt(sched.alpha_bar(t)), b = std::sqrt(1.0 - sched.alpha_bar(t));
        for (int i = 0; i < hw; ++i) input.v[i] = a * x0[i] + b * eps[i];
        for (int i = 0; i < hw; ++i) input.v[hw + i] = double(mask.v[i]);

        std::vector<double> grad(params.size(), 0.0);
        hybrid_loss_core<double>(net, params, x0, input, emb, t, sched, eps, 1e-3,
                                 /*full_grad=*/true, grad);

        auto loss_at = [&](const std::vector<double>& p) {
            return hybrid_loss_core<double>(net, p, x0, input, emb, t, sched, eps, 1e-3, true, {})
                .total;
        };

        const double h = 1e-5;
        int ok = 0;
        const int probes = 60;
        for (int i = 0; i < probes; ++i) {
            size_t idx = rng.below(params.size());
            std::vector<double> plus = params, minus = params;
            plus[idx] += h;
            minus[idx] -= h;
            double fd = (loss_at(plus) - loss_at(minus)) / (2.0 * h);
            double an = grad[idx];
            double denom = std::max({std::fabs(fd), std::fabs(an), 1e-8});
            if (std::fabs(fd - an) / denom <= 1e-2) ++ok;
        }
        CHECK(double(ok) / probes >= 0.95);
    }
}

TEST_CASE("loss parts: simple term is a plain MSE and vanishes on perfect prediction") {
    NetDesc d{2, 2, 8, 32};
    auto params_f = init_params(d, 2);
    std::vector<float> params(params_f);
    auto sched = build_schedule(ScheduleKind::Cosine, 50);
    UNetEval<float> net(d, 16, 16);

    Rng rng(6);
    const int hw = 256;
    std::vector<float> x0(hw);
    for (auto& v : x0) v = float(rng.uniform(-0.9, 0.9));
    FmapT<float> input(2, 16, 16);
    for (int i = 0; i < hw; ++i) input.v[i] = float(rng.normal());
    for (int i = 0; i < hw; ++i) input.v[hw + i] = 0.0f;
    std::vector<float> emb(32);
    sinusoidal_embed(10.0, 32, emb.data());

    // feed the net's own eps output back as the target noise: L_simple == 0
    const auto& y = net.forward(params, input, emb);
    std::vector<float> eps_self(y.ch(0), y.ch(0) + hw);
    auto r = hybrid_loss_core<float>(net, params, x0, input, emb, 10, sched, eps_self, 1e-3f,
                                     false, {});
    CHECK(r.simple == 0.0f);

    // lambda = 0 reduces the loss to the MSE
    std::vector<float> eps(hw);
    for (auto& v : eps) v = rng.normal_f();
    auto r2 = hybrid_loss_core<float>(net, params, x0, input, emb, 10, sched, eps, 0.0f, false, {});
    CHECK(r2.total == r2.simple);
    double mse = 0;
    for (int i = 0; i < hw; ++i) {
        double diff = double(y.ch(0)[i]) - eps[i];
        mse += diff * diff;
    }
    CHECK(r2.simple == doctest::Approx(mse / hw).epsilon(1e-5));
}

TEST_CASE("adam with clipping is deterministic") {
    std::vector<float> p1{1.0f, -2.0f, 3.0f}, p2{1.0f, -2.0f, 3.0f};
    std::vector<float> g{0.5f, 4.0f, -1.0f};
    AdamState s1, s2;
    s1.init(3);
    s2.init(3);
    for (int i = 0; i < 10; ++i) {
        auto gc = g;
        clip_global_norm(gc, 1.0f);
        double norm = 0;
        for (float x : gc) norm += double(x) * x;
        CHECK(std::sqrt(norm) <= 1.0 + 1e-6);
        adam_step(p1, gc, s1, 1e-2f);
        adam_step(p2, gc, s2, 1e-2f);
    }
    CHECK(p1 == p2);
}
