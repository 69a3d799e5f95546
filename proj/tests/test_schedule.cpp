#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sfvd/schedule.hpp"

using namespace sfvd;

namespace {

// brute-force high-precision alpha-bar product
long double abar_oracle(const NoiseSchedule& s, int t) {
    long double p = 1.0L;
    for (int i = 1; i <= t; ++i) p *= (long double)(1.0 - s.beta(i));
    return p;
}

double rel_err(double a, double b) {
    double d = std::fabs(a - b);
    double m = std::max(std::fabs(a), std::fabs(b));
    return m > 0 ? d / m : d;
}

}  // namespace

TEST_CASE("linear schedule T=4: alpha_bar strictly decreasing, product identity") {
    auto s = build_schedule(ScheduleKind::Linear, 4);
    double prev = 1.0;
    for (int t = 1; t <= 4; ++t) {
        CHECK(s.alpha_bar(t) < prev);
        CHECK(s.alpha_bar(t) > 0.0);
        CHECK(s.alpha_bar(t) < 1.0);
        prev = s.alpha_bar(t);
    }
    double prod = 1.0;
    for (int t = 1; t <= 4; ++t) prod *= s.alpha(t);
    CHECK(s.alpha_bar(4) == doctest::Approx(prod).epsilon(1e-15));
    // exact recomposition: abar_t = abar_{t-1} * alpha_t
    for (int t = 2; t <= 4; ++t) {
        CHECK(s.alpha_bar(t) == s.alpha_bar(t - 1) * s.alpha(t));
    }
}

TEST_CASE("cosine schedule T=1000 starts near 1") {
    auto s = build_schedule(ScheduleKind::Cosine, 1000);
    CHECK(std::fabs(s.alpha_bar(1) - 1.0) < 1e-2);
}

TEST_CASE("linear T=1000 alpha_bar matches brute-force product to 1e-10") {
    auto s = build_schedule(ScheduleKind::Linear, 1000, 1e-4, 0.02);
    for (int t : {1, 10, 500, 1000}) {
        CHECK(rel_err(s.alpha_bar(t), double(abar_oracle(s, t))) < 1e-10);
    }
}

TEST_CASE("schedule invariants: posterior variance and endpoints") {
    for (auto kind : {ScheduleKind::Linear, ScheduleKind::Cosine}) {
        auto s = build_schedule(kind, 100);
        for (int t = 2; t <= 100; ++t) {
            double btilde = s.beta(t) * (1.0 - s.alpha_bar_prev(t)) / (1.0 - s.alpha_bar(t));
            CHECK(rel_err(s.posterior_var(t), btilde) < 1e-14);
            CHECK(s.posterior_var(t) <= s.beta(t));
            CHECK(s.v_lower(t) <= s.v_upper(t));
        }
        CHECK(s.v_lower(1) == s.v_upper(1));
    }
}

TEST_CASE("build_schedule rejects bad parameters") {
    CHECK_THROWS_AS(build_schedule(ScheduleKind::Linear, 1), std::invalid_argument);
    CHECK_THROWS_AS(build_schedule(ScheduleKind::Linear, 10, 1e-4, 1.5), std::invalid_argument);
    CHECK_THROWS_AS(build_schedule(ScheduleKind::Linear, 10, 0.0, 0.02), std::invalid_argument);
    CHECK_THROWS_AS(schedule_from_betas({}), std::invalid_argument);
    CHECK_THROWS_AS(schedule_from_betas({0.5, 1.0}), std::invalid_argument);
}

TEST_CASE("build_schedule is deterministic (bitwise)") {
    auto a = build_schedule(ScheduleKind::Cosine, 500);
    auto b = build_schedule(ScheduleKind::Cosine, 500);
    REQUIRE(a.betas.size() == b.betas.size());
    for (size_t i = 0; i < a.betas.size(); ++i) {
        CHECK(a.betas[i] == b.betas[i]);
        CHECK(a.alpha_bars[i] == b.alpha_bars[i]);
        CHECK(a.log_var_lower[i] == b.log_var_lower[i]);
    }
}

TEST_CASE("forward_sample: zero noise and high-noise limits") {
    auto s = build_schedule(ScheduleKind::Linear, 1000, 1e-4, 0.02);
    Plane x0(8, 8);
    Rng rng(11);
    for (auto& v : x0.v) v = float(rng.uniform(-1.0, 1.0));
    Plane eps0(8, 8, 0.0f);

    Plane xt = forward_sample(x0, 7, eps0, s);
    float a = float(std::sqrt(s.alpha_bar(7)));
    for (size_t i = 0; i < x0.size(); ++i) CHECK(xt.v[i] == a * x0.v[i]);

    REQUIRE(s.alpha_bar(1000) < 1e-3);
    Plane eps(8, 8);
    fill_normal(eps, rng);
    Plane xT = forward_sample(x0, 1000, eps, s);
    // correlation with eps should be nearly 1
    double se = 0, sx = 0, see = 0, sxx = 0, sex = 0;
    size_t n = eps.size();
    for (size_t i = 0; i < n; ++i) {
        se += eps.v[i];
        sx += xT.v[i];
        see += double(eps.v[i]) * eps.v[i];
        sxx += double(xT.v[i]) * xT.v[i];
        sex += double(eps.v[i]) * xT.v[i];
    }
    double cov = sex / n - (se / n) * (sx / n);
    double r = cov / std::sqrt((see / n - se / n * se / n) * (sxx / n - sx / n * sx / n));
    CHECK(r > 0.99);
}

TEST_CASE("forward_sample Monte-Carlo statistics at n=1e5") {
    auto s = build_schedule(ScheduleKind::Linear, 1000, 1e-4, 0.02);
    const int n = 100000;
    Plane x0(1, 1);
    x0.v[0] = 0.37f;
    for (int t : {5, 300, 900}) {
        Rng rng(mix_seed(42, uint64_t(t)));
        double sum = 0, sumsq = 0;
        for (int i = 0; i < n; ++i) {
            Plane eps(1, 1);
            eps.v[0] = rng.normal_f();
            float v = forward_sample(x0, t, eps, s).v[0];
            sum += v;
            sumsq += double(v) * v;
        }
        double mean = sum / n;
        double var = sumsq / n - mean * mean;
        double want_mean = std::sqrt(s.alpha_bar(t)) * 0.37;
        double want_var = 1.0 - s.alpha_bar(t);
        double sigma = std::sqrt(want_var);
        CHECK(std::fabs(mean - want_mean) <= 3.0 * sigma / std::sqrt(double(n)));
        CHECK(std::fabs(var - want_var) / want_var < 0.02);
    }
}

TEST_CASE("forward_sample errors") {
    auto s = build_schedule(ScheduleKind::Linear, 10);
    Plane x0(4, 4), eps_bad(4, 8), eps(4, 4);
    CHECK_THROWS_AS(forward_sample(x0, 1, eps_bad, s), std::invalid_argument);
    CHECK_THROWS_AS(forward_sample(x0, 0, eps, s), std::invalid_argument);
    CHECK_THROWS_AS(forward_sample(x0, 11, eps, s), std::invalid_argument);
}

TEST_CASE("reverse_mean: direct substitution example") {
    // betas chosen so alpha_2 = 0.99 and abar_2 = 0.9
    double beta1 = 1.0 - 0.9 / 0.99;
    auto s = schedule_from_betas({beta1, 0.01});
    CHECK(s.alpha(2) == doctest::Approx(0.99).epsilon(1e-12));
    CHECK(s.alpha_bar(2) == doctest::Approx(0.9).epsilon(1e-12));
    Plane x_t(4, 4, 1.0f), eps_hat(4, 4, 0.5f);
    Plane mu = reverse_mean(x_t, eps_hat, 2, s);
    for (float v : mu.v) CHECK(v == doctest::Approx(0.98915).epsilon(1e-4));
}

TEST_CASE("reverse_mean: no-noise identity as alpha -> 1") {
    auto s = schedule_from_betas({1e-9});
    Plane x_t(4, 4);
    Rng rng(3);
    for (auto& v : x_t.v) v = float(rng.uniform(-1.0, 1.0));
    Plane eps0(4, 4, 0.0f);
    Plane mu = reverse_mean(x_t, eps0, 1, s);
    for (size_t i = 0; i < mu.size(); ++i) CHECK(mu.v[i] == doctest::Approx(x_t.v[i]).epsilon(1e-6));
}

TEST_CASE("reverse_mean matches an independent double-precision evaluation") {
    auto s = build_schedule(ScheduleKind::Cosine, 100);
    Rng rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        int t = 1 + int(rng.below(100));
        Plane x_t(8, 8), eps_hat(8, 8);
        for (auto& v : x_t.v) v = float(rng.uniform(-2.0, 2.0));
        for (auto& v : eps_hat.v) v = float(rng.uniform(-2.0, 2.0));
        Plane mu = reverse_mean(x_t, eps_hat, t, s);
        // second, independently coded route in double
        double alpha = s.alpha(t), abar = s.alpha_bar(t);
        for (size_t i = 0; i < mu.size(); ++i) {
            double want =
                (double(x_t.v[i]) - (1.0 - alpha) / std::sqrt(1.0 - abar) * double(eps_hat.v[i])) /
                std::sqrt(alpha);
            CHECK(mu.v[i] == doctest::Approx(want).epsilon(1e-6));
        }
    }
}

TEST_CASE("reverse_variance endpoints and midpoint") {
    auto s = build_schedule(ScheduleKind::Linear, 50, 1e-3, 0.05);
    for (int t : {2, 25, 50}) {
        Plane v1(2, 2, 1.0f), v0(2, 2, 0.0f), vh(2, 2, 0.5f);
        CHECK(reverse_variance(v1, t, s).v[0] ==
              doctest::Approx(s.posterior_var(t)).epsilon(1e-6));
        CHECK(reverse_variance(v0, t, s).v[0] == doctest::Approx(s.beta(t)).epsilon(1e-6));
        CHECK(reverse_variance(vh, t, s).v[0] ==
              doctest::Approx(std::sqrt(s.beta(t) * s.posterior_var(t))).epsilon(1e-6));
    }
    Plane bad(2, 2, 1.5f);
    CHECK_THROWS_AS(reverse_variance(bad, 2, s), std::invalid_argument);
}

TEST_CASE("reverse_variance bounded by the interpolation endpoints") {
    auto s = build_schedule(ScheduleKind::Cosine, 200);
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        int t = 2 + int(rng.below(199));
        Plane v(4, 4);
        for (auto& x : v.v) x = float(rng.uniform());
        Plane s2 = reverse_variance(v, t, s);
        for (float x : s2.v) {
            CHECK(x >= float(s.posterior_var(t)) * 0.9999f);
            CHECK(x <= float(s.beta(t)) * 1.0001f);
        }
    }
}

TEST_CASE("T=1 posterior recovery: one exact step returns x0") {
    auto s = schedule_from_betas({0.3});
    Plane x0(8, 8);
    Rng rng(23);
    for (auto& v : x0.v) v = float(rng.uniform(-1.0, 1.0));
    Plane eps(8, 8);
    fill_normal(eps, rng);
    Plane x1 = forward_sample(x0, 1, eps, s);
    Plane mu = reverse_mean(x1, eps, 1, s);  // true eps
    for (size_t i = 0; i < x0.size(); ++i) CHECK(mu.v[i] == doctest::Approx(x0.v[i]).epsilon(1e-6));
}

TEST_CASE("respaced schedule telescopes to the base alpha_bar") {
    auto base = build_schedule(ScheduleKind::Cosine, 1000);
    auto rs = respace_schedule(base, 100);
    REQUIRE(rs.orig_timestep.size() == 100);
    CHECK(rs.orig_timestep.front() == 1);
    CHECK(rs.orig_timestep.back() == 1000);
    for (size_t i = 1; i < rs.orig_timestep.size(); ++i)
        CHECK(rs.orig_timestep[i] > rs.orig_timestep[i - 1]);
    for (int i = 1; i <= rs.sched.step_count; ++i) {
        CHECK(rel_err(rs.sched.alpha_bar(i), base.alpha_bar(rs.orig_timestep[i - 1])) < 1e-10);
    }
}
