#pragma once

#include <string>
#include <vector>

#include "sfvd/core.hpp"

namespace sfvd {

enum class ScheduleKind { Linear, Cosine };

std::string to_string(ScheduleKind k);
ScheduleKind schedule_kind_from_string(const std::string& s);

// ---------------------------------------------------------------------------
// All closed-form diffusion constants. Arrays are 1-based conceptually:
// index t-1 holds the step-t value, t = 1..T. Constants are kept in double
// so derived quantities stay exact to ~1e-15; tensor ops downcast to float.
// Immutable after construction.
// ---------------------------------------------------------------------------
struct NoiseSchedule {
    ScheduleKind kind = ScheduleKind::Linear;
    int step_count = 0;                 // T
    double beta_start = 0.0;            // linear parameters (0 for cosine)
    double beta_end = 0.0;
    std::vector<double> betas;          // beta_t
    std::vector<double> alphas;         // 1 - beta_t
    std::vector<double> alpha_bars;     // prod_{i<=t} alpha_i
    std::vector<double> posterior_vars; // beta~_t = beta_t (1-abar_{t-1}) / (1-abar_t)
    std::vector<double> log_var_lower;  // v_f = log beta~_t
    std::vector<double> log_var_upper;  // v_r = log beta_t

    double beta(int t) const { return betas[check(t)]; }
    double alpha(int t) const { return alphas[check(t)]; }
    double alpha_bar(int t) const { return alpha_bars[check(t)]; }
    // abar_0 := 1 (degenerate first step)
    double alpha_bar_prev(int t) const { return check(t) == 0 ? 1.0 : alpha_bars[t - 2]; }
    double posterior_var(int t) const { return posterior_vars[check(t)]; }
    double v_lower(int t) const { return log_var_lower[check(t)]; }
    double v_upper(int t) const { return log_var_upper[check(t)]; }

    int check(int t) const {
        if (t < 1 || t > step_count) throw std::invalid_argument("schedule: step index out of range");
        return t - 1;
    }
};

// Builds a linear or cosine schedule. Cosine follows the IDDPM alpha-bar
// formula with offset s = 0.008 (betas capped at 0.999 as part of that
// formula). Throws on T < 2 or any beta outside (0, 0.999].
NoiseSchedule build_schedule(ScheduleKind kind, int step_count,
                             double beta_start = 1e-4, double beta_end = 0.02);

// Builds the derived constants from explicit betas. Used by respacing and by
// tests that need exact alpha values; accepts betas in (0,1).
NoiseSchedule schedule_from_betas(const std::vector<double>& betas, ScheduleKind kind = ScheduleKind::Linear);

// Strided sampling support: picks `steps` original timesteps (ascending,
// always ending at T) and returns the respaced schedule whose beta'_i =
// 1 - abar(ts_i)/abar(ts_{i-1}), plus the original timestep per respaced
// step for the model's time embedding.
struct RespacedSchedule {
    NoiseSchedule sched;            // constants over the subsequence
    std::vector<int> orig_timestep; // orig_timestep[i-1] is the base-schedule t for respaced step i
};
RespacedSchedule respace_schedule(const NoiseSchedule& base, int steps);

// x_t = sqrt(abar_t) x0 + sqrt(1 - abar_t) eps
Plane forward_sample(const Plane& x0, int t, const Plane& eps, const NoiseSchedule& sched);

// mu = (x_t - (1-alpha_t)/sqrt(1-abar_t) eps_hat) / sqrt(alpha_t)
Plane reverse_mean(const Plane& x_t, const Plane& eps_hat, int t, const NoiseSchedule& sched);

// sigma^2 = exp(v_hat * v_f + (1 - v_hat) * v_r), v_hat in [0,1]
Plane reverse_variance(const Plane& v_hat, int t, const NoiseSchedule& sched);

// Gaussian posterior q(x_{t-1} | x_t, x0) mean; shares the schedule's exact
// constants with the hybrid loss.
Plane posterior_mean(const Plane& x0, const Plane& x_t, int t, const NoiseSchedule& sched);

}  // namespace sfvd
