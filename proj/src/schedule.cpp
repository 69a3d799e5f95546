#include "sfvd/schedule.hpp"

#include <cmath>

namespace sfvd {

std::string to_string(ScheduleKind k) {
    return k == ScheduleKind::Linear ? "linear" : "cosine";
}

ScheduleKind schedule_kind_from_string(const std::string& s) {
    if (s == "linear") return ScheduleKind::Linear;
    if (s == "cosine") return ScheduleKind::Cosine;
    throw std::invalid_argument("unknown schedule kind: " + s);
}

static void finish_schedule(NoiseSchedule& s) {
    const int T = int(s.betas.size());
    s.step_count = T;
    s.alphas.resize(T);
    s.alpha_bars.resize(T);
    s.posterior_vars.resize(T);
    s.log_var_lower.resize(T);
    s.log_var_upper.resize(T);

    double abar = 1.0;
    for (int i = 0; i < T; ++i) {
        s.alphas[i] = 1.0 - s.betas[i];
        abar *= s.alphas[i];
        s.alpha_bars[i] = abar;
    }
    for (int i = 0; i < T; ++i) {
        double abar_prev = (i == 0) ? 1.0 : s.alpha_bars[i - 1];
        double btilde = s.betas[i] * (1.0 - abar_prev) / (1.0 - s.alpha_bars[i]);
        s.posterior_vars[i] = btilde;
        s.log_var_upper[i] = std::log(s.betas[i]);
        // beta~_1 degenerates to 0 with abar_0 := 1; pin v_f(1) = v_r(1).
        s.log_var_lower[i] = (i == 0) ? s.log_var_upper[i] : std::log(btilde);
    }
}

NoiseSchedule build_schedule(ScheduleKind kind, int step_count, double beta_start, double beta_end) {
    if (step_count < 2) throw std::invalid_argument("build_schedule: T must be >= 2");
    NoiseSchedule s;
    s.kind = kind;
    s.beta_start = beta_start;
    s.beta_end = beta_end;
    s.betas.resize(step_count);

    if (kind == ScheduleKind::Linear) {
        for (int i = 0; i < step_count; ++i) {
            double f = (step_count == 1) ? 0.0 : double(i) / double(step_count - 1);
            s.betas[i] = beta_start + (beta_end - beta_start) * f;
        }
    } else {
        // IDDPM cosine: abar_t = f(t)/f(0), f(t) = cos^2(((t/T + s)/(1+s)) * pi/2),
        // s = 0.008, betas capped at 0.999.
        const double off = 0.008;
        const double pi_half = 1.5707963267948966;
        auto f = [&](double t) {
            double c = std::cos((t / step_count + off) / (1.0 + off) * pi_half);
            return c * c;
        };
        const double f0 = f(0.0);
        double abar_prev = 1.0;
        for (int i = 0; i < step_count; ++i) {
            double abar = f(double(i + 1)) / f0;
            double beta = 1.0 - abar / abar_prev;
            s.betas[i] = std::min(beta, 0.999);
            abar_prev = abar_prev * (1.0 - s.betas[i]);
        }
        s.beta_start = 0.0;
        s.beta_end = 0.0;
    }

    for (double b : s.betas) {
        if (!(b > 0.0) || b > 0.999) {
            throw std::invalid_argument("build_schedule: beta outside (0, 0.999]");
        }
    }
    finish_schedule(s);
    return s;
}

NoiseSchedule schedule_from_betas(const std::vector<double>& betas, ScheduleKind kind) {
    if (betas.empty()) throw std::invalid_argument("schedule_from_betas: empty betas");
    for (double b : betas) {
        if (!(b > 0.0) || !(b < 1.0)) throw std::invalid_argument("schedule_from_betas: beta outside (0,1)");
    }
    NoiseSchedule s;
    s.kind = kind;
    s.betas = betas;
    finish_schedule(s);
    return s;
}

RespacedSchedule respace_schedule(const NoiseSchedule& base, int steps) {
    if (steps < 1 || steps > base.step_count) {
        throw std::invalid_argument("respace_schedule: steps must be in [1, T]");
    }
    RespacedSchedule out;
    // Evenly spaced subsequence of 1..T, always including T so sampling can
    // start from pure noise.
    std::vector<int> ts;
    ts.reserve(steps);
    if (steps == 1) {
        ts.push_back(base.step_count);
    } else {
        for (int i = 0; i < steps; ++i) {
            double f = double(i) / double(steps - 1);
            int t = 1 + int(std::llround(f * (base.step_count - 1)));
            if (!ts.empty() && t <= ts.back()) t = ts.back() + 1;
            ts.push_back(t);
        }
    }
    std::vector<double> betas(ts.size());
    double abar_prev = 1.0;
    for (size_t i = 0; i < ts.size(); ++i) {
        double abar = base.alpha_bar(ts[i]);
        betas[i] = 1.0 - abar / abar_prev;
        abar_prev = abar;
    }
    out.sched = schedule_from_betas(betas, base.kind);
    out.orig_timestep = std::move(ts);
    return out;
}

Plane forward_sample(const Plane& x0, int t, const Plane& eps, const NoiseSchedule& sched) {
    require_same_shape(x0, eps, "forward_sample");
    const float a = float(std::sqrt(sched.alpha_bar(t)));
    const float b = float(std::sqrt(1.0 - sched.alpha_bar(t)));
    Plane out(x0.h, x0.w);
    for (size_t i = 0; i < x0.size(); ++i) out.v[i] = a * x0.v[i] + b * eps.v[i];
    return out;
}

Plane reverse_mean(const Plane& x_t, const Plane& eps_hat, int t, const NoiseSchedule& sched) {
    require_same_shape(x_t, eps_hat, "reverse_mean");
    const double alpha = sched.alpha(t);
    const float inv_sqrt_alpha = float(1.0 / std::sqrt(alpha));
    const float coef = float((1.0 - alpha) / std::sqrt(1.0 - sched.alpha_bar(t)));
    Plane out(x_t.h, x_t.w);
    for (size_t i = 0; i < x_t.size(); ++i) {
        out.v[i] = inv_sqrt_alpha * (x_t.v[i] - coef * eps_hat.v[i]);
    }
    return out;
}

Plane reverse_variance(const Plane& v_hat, int t, const NoiseSchedule& sched) {
    const float vf = float(sched.v_lower(t));
    const float vr = float(sched.v_upper(t));
    Plane out(v_hat.h, v_hat.w);
    for (size_t i = 0; i < v_hat.size(); ++i) {
        float v = v_hat.v[i];
        if (v < 0.0f || v > 1.0f) throw std::invalid_argument("reverse_variance: v_hat outside [0,1]");
        out.v[i] = std::exp(v * vf + (1.0f - v) * vr);
    }
    return out;
}

Plane posterior_mean(const Plane& x0, const Plane& x_t, int t, const NoiseSchedule& sched) {
    require_same_shape(x0, x_t, "posterior_mean");
    const double abar = sched.alpha_bar(t);
    const double abar_prev = sched.alpha_bar_prev(t);
    const double beta = sched.beta(t);
    const float c0 = float(std::sqrt(abar_prev) * beta / (1.0 - abar));
    const float ct = float(std::sqrt(sched.alpha(t)) * (1.0 - abar_prev) / (1.0 - abar));
    Plane out(x0.h, x0.w);
    for (size_t i = 0; i < x0.size(); ++i) out.v[i] = c0 * x0.v[i] + ct * x_t.v[i];
    return out;
}

}  // namespace sfvd
