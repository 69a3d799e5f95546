#include "sfvd/guidance.hpp"

namespace sfvd {

GuidanceSpec make_guidance_spec(GuidanceMode mode, float omega, float gamma) {
    GuidanceSpec s;
    s.mode = mode;
    s.omega = omega;
    s.gamma = std::clamp(gamma, 0.0f, 15.0f);
    return s;
}

Plane combine_scene(const Plane& eps_u, const Plane& eps_c, float omega) {
    require_same_shape(eps_u, eps_c, "combine_scene");
    if (omega == 0.0f) return eps_u;
    if (omega == 1.0f) return eps_c;
    Plane out(eps_u.h, eps_u.w);
    for (size_t i = 0; i < out.size(); ++i) {
        out.v[i] = eps_u.v[i] + omega * (eps_c.v[i] - eps_u.v[i]);
    }
    return out;
}

Plane combine_motion(const Plane& eps_m, const Plane& eps_mf, float omega) {
    return combine_scene(eps_m, eps_mf, omega);
}

Plane combine_fc(const Plane& eps_m, const Plane& eps_mf1, const Plane& eps_mf2, float omega) {
    require_same_shape(eps_m, eps_mf1, "combine_fc");
    require_same_shape(eps_m, eps_mf2, "combine_fc");
    if (omega == 0.0f) return eps_m;
    Plane out(eps_m.h, eps_m.w);
    for (size_t i = 0; i < out.size(); ++i) {
        float m = eps_m.v[i];
        out.v[i] = m + omega * ((eps_mf1.v[i] - m) + (eps_mf2.v[i] - m));
    }
    return out;
}

Plane seg_log_likelihood_grad(const SegmenterModel& psi, const Plane& x_t, const Mask& mask) {
    if (psi.params.empty()) throw std::invalid_argument("seg_log_likelihood_grad: untrained psi");
    if (x_t.h != mask.h || x_t.w != mask.w)
        throw std::invalid_argument("seg_log_likelihood_grad: shape mismatch");
    FmapT<float> in(1, x_t.h, x_t.w);
    std::copy(x_t.v.begin(), x_t.v.end(), in.ch(0));
    auto& net = cached_eval<float>(psi.desc, x_t.h, x_t.w);
    FmapT<float> gin;
    seg_log_likelihood_core<float>(net, std::span<const float>(psi.params), in, mask, &gin, {});
    Plane out(x_t.h, x_t.w);
    std::copy(gin.ch(0), gin.ch(0) + out.size(), out.v.begin());
    return out;
}

Plane seg_guided_mean(const Plane& mu, const Plane& sigma2, const Plane& grad, float gamma) {
    require_same_shape(mu, sigma2, "seg_guided_mean");
    require_same_shape(mu, grad, "seg_guided_mean");
    if (gamma < 0.0f) throw std::invalid_argument("seg_guided_mean: gamma must be >= 0");
    Plane out(mu.h, mu.w);
    for (size_t i = 0; i < out.size(); ++i) {
        out.v[i] = mu.v[i] + gamma * sigma2.v[i] * grad.v[i];
    }
    return out;
}

}  // namespace sfvd
