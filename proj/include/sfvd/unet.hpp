#pragma once

#include <cassert>
#include <cmath>
#include <cstring>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "sfvd/core.hpp"

namespace sfvd {

// ---------------------------------------------------------------------------
// Multi-channel feature map, [c][h][w] contiguous.
// ---------------------------------------------------------------------------
template <class T>
struct FmapT {
    int c = 0, h = 0, w = 0;
    std::vector<T> v;

    FmapT() = default;
    FmapT(int c_, int h_, int w_) : c(c_), h(h_), w(w_), v(size_t(c_) * h_ * w_, T(0)) {}

    void resize(int c_, int h_, int w_) {
        c = c_; h = h_; w = w_;
        v.assign(size_t(c_) * h_ * w_, T(0));
    }
    void zero() { std::fill(v.begin(), v.end(), T(0)); }
    T* ch(int i) { return v.data() + size_t(i) * h * w; }
    const T* ch(int i) const { return v.data() + size_t(i) * h * w; }
    size_t plane_size() const { return size_t(h) * w; }
};

using Fmap = FmapT<float>;

// ---------------------------------------------------------------------------
// Architecture descriptor. Fixed topology: stem conv, two downsampling
// levels with one conv each, bottleneck conv, two upsampling levels with
// skip concatenation, linear head. Channel widths are {base, base*3/2,
// base*2}. emb_dim == 0 disables the per-level embedding bias path.
// ---------------------------------------------------------------------------
struct NetDesc {
    int in_ch = 1;
    int out_ch = 1;
    int base_width = 16;
    int emb_dim = 0;

    int w0() const { return base_width; }
    int w1() const { return base_width * 3 / 2; }
    int w2() const { return base_width * 2; }

    bool operator==(const NetDesc&) const = default;
};

struct ParamEntry {
    std::string name;
    size_t offset = 0;
    size_t count = 0;
};

struct Manifest {
    std::vector<ParamEntry> entries;
    size_t total = 0;

    const ParamEntry& find(const std::string& name) const {
        for (const auto& e : entries)
            if (e.name == name) return e;
        throw std::invalid_argument("manifest: no entry named " + name);
    }
};

inline Manifest build_manifest(const NetDesc& d) {
    Manifest m;
    size_t off = 0;
    auto add = [&](const std::string& name, size_t count) {
        m.entries.push_back({name, off, count});
        off += count;
    };
    auto conv = [&](const std::string& name, int oc, int ic) {
        add(name + ".w", size_t(oc) * ic * 9);
        add(name + ".b", size_t(oc));
    };
    auto emb = [&](const std::string& name, int oc) {
        if (d.emb_dim > 0) add(name + ".w", size_t(oc) * d.emb_dim);
    };
    conv("stem", d.w0(), d.in_ch);
    conv("enc0", d.w0(), d.w0());
    emb("emb0", d.w0());
    conv("enc1", d.w1(), d.w0());
    emb("emb1", d.w1());
    conv("mid", d.w2(), d.w1());
    emb("emb2", d.w2());
    conv("dec1", d.w1(), d.w2() + d.w1());
    emb("emb3", d.w1());
    conv("dec0", d.w0(), d.w1() + d.w0());
    emb("emb4", d.w0());
    conv("head", d.out_ch, d.w0());
    m.total = off;
    return m;
}

// Kaiming-normal conv init, zero biases, small embedding projections, and a
// downscaled head so a fresh net outputs near zero.
inline std::vector<float> init_params(const NetDesc& d, uint64_t seed) {
    Manifest m = build_manifest(d);
    std::vector<float> p(m.total, 0.0f);
    Rng rng(mix_seed(seed, 0x1717));
    for (const auto& e : m.entries) {
        bool is_weight = e.name.size() > 2 && e.name.substr(e.name.size() - 2) == ".w";
        if (!is_weight) continue;  // biases stay zero
        if (e.name.rfind("emb", 0) == 0) {
            for (size_t i = 0; i < e.count; ++i) p[e.offset + i] = 0.01f * rng.normal_f();
            continue;
        }
        // conv weight [oc][ic][3][3]: fan_in = ic*9 = count/oc... derive from name
        // via the manifest shape: count = oc*ic*9 and the paired bias gives oc.
        size_t oc = m.find(e.name.substr(0, e.name.size() - 2) + ".b").count;
        size_t fan_in = e.count / oc;
        float std_dev = std::sqrt(2.0f / float(fan_in));
        if (e.name.rfind("head", 0) == 0) std_dev *= 0.01f;
        for (size_t i = 0; i < e.count; ++i) p[e.offset + i] = std_dev * rng.normal_f();
    }
    return p;
}

// ---------------------------------------------------------------------------
// Low-level kernels. All convolutions are 3x3 with circular padding, which
// keeps the net exactly translation-equivariant (relied on by tests).
// ---------------------------------------------------------------------------
namespace detail {

template <class T>
inline void axpy(T* __restrict out, T a, const T* __restrict x, size_t n) {
    for (size_t i = 0; i < n; ++i) out[i] += a * x[i];
}

// Fixed-order lane accumulation: deterministic for a given build, and wide
// enough (32 lanes) to break the FMA latency chain.
template <class T>
inline T dot(const T* __restrict a, const T* __restrict b, size_t n) {
    constexpr int L = 32;
    T acc[L];
    for (int k = 0; k < L; ++k) acc[k] = T(0);
    size_t i = 0;
    for (; i + L <= n; i += L)
        for (int k = 0; k < L; ++k) acc[k] += a[i + k] * b[i + k];
    T s = T(0);
    for (int k = 0; k < L; ++k) s += acc[k];
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

// tmp[y][x] = src[(y+dy) mod h][(x+dx) mod w]
template <class T>
inline void shift_copy(const T* src, int h, int w, int dy, int dx, T* tmp) {
    for (int y = 0; y < h; ++y) {
        int sy = y + dy;
        if (sy < 0) sy += h;
        if (sy >= h) sy -= h;
        const T* row = src + size_t(sy) * w;
        T* trow = tmp + size_t(y) * w;
        if (dx == 0) {
            std::memcpy(trow, row, sizeof(T) * w);
        } else {
            int sx = dx < 0 ? dx + w : dx;
            std::memcpy(trow, row + sx, sizeof(T) * (w - sx));
            std::memcpy(trow + (w - sx), row, sizeof(T) * sx);
        }
    }
}

template <class T>
inline void conv3x3(const FmapT<T>& in, const T* w, const T* b, FmapT<T>& out, std::vector<T>& tmp) {
    const size_t hw = in.plane_size();
    const int ic_n = in.c, oc_n = out.c;
    tmp.resize(hw);
    for (int oc = 0; oc < oc_n; ++oc) {
        T* o = out.ch(oc);
        std::fill(o, o + hw, b ? b[oc] : T(0));
    }
    for (int ic = 0; ic < ic_n; ++ic) {
        for (int k = 0; k < 9; ++k) {
            shift_copy(in.ch(ic), in.h, in.w, k / 3 - 1, k % 3 - 1, tmp.data());
            for (int oc = 0; oc < oc_n; ++oc) {
                axpy(out.ch(oc), w[(size_t(oc) * ic_n + ic) * 9 + k], tmp.data(), hw);
            }
        }
    }
}

// grad wrt input: gin[ic] += sum_oc sum_k w[oc,ic,k] * shift(gout[oc], -dy, -dx)
template <class T>
inline void conv3x3_grad_in(const FmapT<T>& gout, const T* w, int ic_n, FmapT<T>& gin, std::vector<T>& tmp) {
    const size_t hw = gout.plane_size();
    tmp.resize(hw);
    gin.zero();
    for (int oc = 0; oc < gout.c; ++oc) {
        for (int k = 0; k < 9; ++k) {
            shift_copy(gout.ch(oc), gout.h, gout.w, -(k / 3 - 1), -(k % 3 - 1), tmp.data());
            for (int ic = 0; ic < ic_n; ++ic) {
                axpy(gin.ch(ic), w[(size_t(oc) * ic_n + ic) * 9 + k], tmp.data(), hw);
            }
        }
    }
}

template <class T>
inline T sum(const T* __restrict a, size_t n) {
    constexpr int L = 32;
    T acc[L];
    for (int k = 0; k < L; ++k) acc[k] = T(0);
    size_t i = 0;
    for (; i + L <= n; i += L)
        for (int k = 0; k < L; ++k) acc[k] += a[i + k];
    T s = T(0);
    for (int k = 0; k < L; ++k) s += acc[k];
    for (; i < n; ++i) s += a[i];
    return s;
}

// grad wrt weights/bias
template <class T>
inline void conv3x3_grad_w(const FmapT<T>& in, const FmapT<T>& gout, T* gw, T* gb, std::vector<T>& tmp) {
    const size_t hw = in.plane_size();
    const int ic_n = in.c;
    tmp.resize(hw);
    for (int ic = 0; ic < ic_n; ++ic) {
        for (int k = 0; k < 9; ++k) {
            shift_copy(in.ch(ic), in.h, in.w, k / 3 - 1, k % 3 - 1, tmp.data());
            for (int oc = 0; oc < gout.c; ++oc) {
                gw[(size_t(oc) * ic_n + ic) * 9 + k] += dot(gout.ch(oc), tmp.data(), hw);
            }
        }
    }
    if (gb) {
        for (int oc = 0; oc < gout.c; ++oc) gb[oc] += sum(gout.ch(oc), hw);
    }
}

template <class T>
inline void avgpool2(const FmapT<T>& in, FmapT<T>& out) {
    for (int c = 0; c < in.c; ++c) {
        const T* s = in.ch(c);
        T* o = out.ch(c);
        for (int y = 0; y < out.h; ++y)
            for (int x = 0; x < out.w; ++x) {
                const T* r0 = s + size_t(2 * y) * in.w + 2 * x;
                const T* r1 = r0 + in.w;
                o[size_t(y) * out.w + x] = T(0.25) * ((r0[0] + r0[1]) + (r1[0] + r1[1]));
            }
    }
}

template <class T>
inline void avgpool2_back(const FmapT<T>& gout, FmapT<T>& gin) {
    for (int c = 0; c < gout.c; ++c) {
        const T* g = gout.ch(c);
        T* o = gin.ch(c);
        for (int y = 0; y < gout.h; ++y)
            for (int x = 0; x < gout.w; ++x) {
                T v = T(0.25) * g[size_t(y) * gout.w + x];
                T* r0 = o + size_t(2 * y) * gin.w + 2 * x;
                T* r1 = r0 + gin.w;
                r0[0] = v; r0[1] = v; r1[0] = v; r1[1] = v;
            }
    }
}

template <class T>
inline void upsample2(const FmapT<T>& in, FmapT<T>& out) {
    for (int c = 0; c < in.c; ++c) {
        const T* s = in.ch(c);
        T* o = out.ch(c);
        for (int y = 0; y < out.h; ++y) {
            const T* srow = s + size_t(y / 2) * in.w;
            T* orow = o + size_t(y) * out.w;
            for (int x = 0; x < out.w; ++x) orow[x] = srow[x / 2];
        }
    }
}

template <class T>
inline void upsample2_back(const FmapT<T>& gout, FmapT<T>& gin) {
    for (int c = 0; c < gout.c; ++c) {
        const T* g = gout.ch(c);
        T* o = gin.ch(c);
        for (int y = 0; y < gin.h; ++y)
            for (int x = 0; x < gin.w; ++x) {
                const T* r0 = g + size_t(2 * y) * gout.w + 2 * x;
                const T* r1 = r0 + gout.w;
                o[size_t(y) * gin.w + x] = (r0[0] + r0[1]) + (r1[0] + r1[1]);
            }
    }
}

template <class T>
inline T sigmoid(T z) {
    return z >= T(0) ? T(1) / (T(1) + std::exp(-z)) : T(1) - T(1) / (T(1) + std::exp(z));
}

template <class T>
inline void silu(const FmapT<T>& z, FmapT<T>& a) {
    for (size_t i = 0; i < z.v.size(); ++i) a.v[i] = z.v[i] * sigmoid(z.v[i]);
}

// dsilu/dz = s(z) (1 + z (1 - s(z)))
template <class T>
inline void silu_back(const FmapT<T>& z, const FmapT<T>& ga, FmapT<T>& gz) {
    for (size_t i = 0; i < z.v.size(); ++i) {
        T s = sigmoid(z.v[i]);
        gz.v[i] = ga.v[i] * s * (T(1) + z.v[i] * (T(1) - s));
    }
}

}  // namespace detail

// Sinusoidal embedding of a scalar (timestep or signed frame distance).
template <class T>
inline void sinusoidal_embed(double value, int dim, T* out) {
    int half = dim / 2;
    for (int i = 0; i < half; ++i) {
        double freq = std::exp(-std::log(10000.0) * double(i) / double(half));
        out[2 * i] = T(std::sin(value * freq));
        out[2 * i + 1] = T(std::cos(value * freq));
    }
}

// ---------------------------------------------------------------------------
// One forward/backward evaluation workspace. Holds every intermediate needed
// by the backward pass; reusable across calls with the same (desc, h, w).
// ---------------------------------------------------------------------------
template <class T>
class UNetEval {
public:
    UNetEval(const NetDesc& d, int h, int w) : d_(d), m_(build_manifest(d)), h_(h), w_(w) {
        if (h % 4 != 0 || w % 4 != 0) throw std::invalid_argument("unet: H and W must be divisible by 4");
        int h2 = h / 2, w2 = w / 2, h4 = h / 4, w4 = w / 4;
        a0_.resize(d.w0(), h, w);
        e0_.resize(d.w0(), h, w);
        p1_.resize(d.w0(), h2, w2);
        e1_.resize(d.w1(), h2, w2);
        p2_.resize(d.w1(), h4, w4);
        mid_.resize(d.w2(), h4, w4);
        u1_.resize(d.w2(), h2, w2);
        c1_.resize(d.w2() + d.w1(), h2, w2);
        d1_.resize(d.w1(), h2, w2);
        u0_.resize(d.w1(), h, w);
        c0_.resize(d.w1() + d.w0(), h, w);
        d0_.resize(d.w0(), h, w);
        y_.resize(d.out_ch, h, w);
        z_stem_.resize(d.w0(), h, w);
        z_e0_.resize(d.w0(), h, w);
        z_e1_.resize(d.w1(), h2, w2);
        z_mid_.resize(d.w2(), h4, w4);
        z_d1_.resize(d.w1(), h2, w2);
        z_d0_.resize(d.w0(), h, w);
        emb_.assign(size_t(std::max(d.emb_dim, 0)), T(0));

        auto off = [this](const std::string& n) { return m_.find(n).offset; };
        static const char* convs[] = {"stem", "enc0", "enc1", "mid", "dec1", "dec0", "head"};
        for (int i = 0; i < 7; ++i) {
            conv_w_[i] = off(std::string(convs[i]) + ".w");
            conv_b_[i] = off(std::string(convs[i]) + ".b");
        }
        if (d.emb_dim > 0) {
            for (int i = 0; i < 5; ++i) emb_w_[i] = off("emb" + std::to_string(i) + ".w");
        }
    }

    const NetDesc& desc() const { return d_; }
    const Manifest& manifest() const { return m_; }
    int height() const { return h_; }
    int width() const { return w_; }

    // emb must hold desc().emb_dim values (ignored when emb_dim == 0).
    const FmapT<T>& forward(std::span<const T> params, const FmapT<T>& input, std::span<const T> emb) {
        if (input.c != d_.in_ch || input.h != h_ || input.w != w_)
            throw std::invalid_argument("unet forward: input shape mismatch");
        if (d_.emb_dim > 0) {
            if (int(emb.size()) != d_.emb_dim) throw std::invalid_argument("unet forward: emb size mismatch");
            std::copy(emb.begin(), emb.end(), emb_.begin());
        }
        input_ = &input;
        const T* p = params.data();

        conv_fwd(p, 0, input, z_stem_, -1);
        detail::silu(z_stem_, a0_);
        conv_fwd(p, 1, a0_, z_e0_, 0);
        detail::silu(z_e0_, e0_);
        detail::avgpool2(e0_, p1_);
        conv_fwd(p, 2, p1_, z_e1_, 1);
        detail::silu(z_e1_, e1_);
        detail::avgpool2(e1_, p2_);
        conv_fwd(p, 3, p2_, z_mid_, 2);
        detail::silu(z_mid_, mid_);
        // up + skip concat at level 1
        detail::upsample2(mid_, u1_);
        std::copy(u1_.v.begin(), u1_.v.end(), c1_.v.begin());
        std::copy(e1_.v.begin(), e1_.v.end(), c1_.v.begin() + u1_.v.size());
        conv_fwd(p, 4, c1_, z_d1_, 3);
        detail::silu(z_d1_, d1_);
        // up + skip concat at level 0
        detail::upsample2(d1_, u0_);
        std::copy(u0_.v.begin(), u0_.v.end(), c0_.v.begin());
        std::copy(e0_.v.begin(), e0_.v.end(), c0_.v.begin() + u0_.v.size());
        conv_fwd(p, 5, c0_, z_d0_, 4);
        detail::silu(z_d0_, d0_);
        conv_fwd(p, 6, d0_, y_, -1);
        return y_;
    }

    const FmapT<T>& output() const { return y_; }

    // Accumulates parameter gradients into grad_params (same layout as the
    // manifest; pass an empty span to skip the weight-gradient work when only
    // grad_input is wanted). Scratch buffers are members, so a reused
    // UNetEval does no allocation.
    void backward(std::span<const T> params, const FmapT<T>& grad_out,
                  std::span<T> grad_params, FmapT<T>* grad_input) {
        const T* p = params.data();
        T* g = grad_params.empty() ? nullptr : grad_params.data();
        if (g && grad_params.size() != m_.total)
            throw std::invalid_argument("unet backward: grad blob size mismatch");

        ensure_grad_buffers();
        conv_bwd(p, g, 6, d0_, grad_out, &gd0_);

        detail::silu_back(z_d0_, gd0_, gz_d0_);
        emb_bwd(g, 4, gz_d0_);
        conv_bwd(p, g, 5, c0_, gz_d0_, &gc0_);

        // split gc0 -> upsampled d1 part + skip e0 part
        std::copy(gc0_.v.begin(), gc0_.v.begin() + gu0_.v.size(), gu0_.v.begin());
        std::copy(gc0_.v.begin() + gu0_.v.size(), gc0_.v.end(), ge0_.v.begin());

        detail::upsample2_back(gu0_, gd1_);
        detail::silu_back(z_d1_, gd1_, gz_d1_);
        emb_bwd(g, 3, gz_d1_);
        conv_bwd(p, g, 4, c1_, gz_d1_, &gc1_);

        std::copy(gc1_.v.begin(), gc1_.v.begin() + gu1_.v.size(), gu1_.v.begin());
        std::copy(gc1_.v.begin() + gu1_.v.size(), gc1_.v.end(), ge1_.v.begin());

        detail::upsample2_back(gu1_, gmid_);
        detail::silu_back(z_mid_, gmid_, gz_mid_);
        emb_bwd(g, 2, gz_mid_);
        conv_bwd(p, g, 3, p2_, gz_mid_, &gp2_);

        // pool backward joins the skip gradient
        detail::avgpool2_back(gp2_, gpool1_);
        for (size_t i = 0; i < ge1_.v.size(); ++i) ge1_.v[i] += gpool1_.v[i];
        detail::silu_back(z_e1_, ge1_, gz_e1_);
        emb_bwd(g, 1, gz_e1_);
        conv_bwd(p, g, 2, p1_, gz_e1_, &gp1_);

        detail::avgpool2_back(gp1_, gpool0_);
        for (size_t i = 0; i < ge0_.v.size(); ++i) ge0_.v[i] += gpool0_.v[i];
        detail::silu_back(z_e0_, ge0_, gz_e0_);
        emb_bwd(g, 0, gz_e0_);
        conv_bwd(p, g, 1, a0_, gz_e0_, &ga0_);

        detail::silu_back(z_stem_, ga0_, gz_stem_);
        if (grad_input) {
            grad_input->resize(d_.in_ch, h_, w_);
            conv_bwd(p, g, 0, *input_, gz_stem_, grad_input);
        } else {
            conv_bwd(p, g, 0, *input_, gz_stem_, nullptr);
        }
    }

private:
    void conv_fwd(const T* p, int conv, const FmapT<T>& in, FmapT<T>& out, int emb) {
        detail::conv3x3(in, p + conv_w_[conv], p + conv_b_[conv], out, tmp_);
        if (emb >= 0 && d_.emb_dim > 0) {
            const T* ew = p + emb_w_[emb];
            size_t hw = out.plane_size();
            for (int c = 0; c < out.c; ++c) {
                T bias = detail::dot(ew + size_t(c) * d_.emb_dim, emb_.data(), d_.emb_dim);
                T* o = out.ch(c);
                for (size_t i = 0; i < hw; ++i) o[i] += bias;
            }
        }
    }

    void conv_bwd(const T* p, T* g, int conv, const FmapT<T>& in,
                  const FmapT<T>& gout, FmapT<T>* gin) {
        if (g) detail::conv3x3_grad_w(in, gout, g + conv_w_[conv], g + conv_b_[conv], tmp_);
        if (gin) detail::conv3x3_grad_in(gout, p + conv_w_[conv], in.c, *gin, tmp_);
    }

    void ensure_grad_buffers() {
        if (gd0_.c != 0) return;
        int h2 = h_ / 2, w2 = w_ / 2, h4 = h_ / 4, w4 = w_ / 4;
        gd0_.resize(d_.w0(), h_, w_);
        gz_d0_.resize(d_.w0(), h_, w_);
        gc0_.resize(d_.w1() + d_.w0(), h_, w_);
        gu0_.resize(d_.w1(), h_, w_);
        ge0_.resize(d_.w0(), h_, w_);
        gd1_.resize(d_.w1(), h2, w2);
        gz_d1_.resize(d_.w1(), h2, w2);
        gc1_.resize(d_.w2() + d_.w1(), h2, w2);
        gu1_.resize(d_.w2(), h2, w2);
        ge1_.resize(d_.w1(), h2, w2);
        gmid_.resize(d_.w2(), h4, w4);
        gz_mid_.resize(d_.w2(), h4, w4);
        gp2_.resize(d_.w1(), h4, w4);
        gpool1_.resize(d_.w1(), h2, w2);
        gz_e1_.resize(d_.w1(), h2, w2);
        gp1_.resize(d_.w0(), h2, w2);
        gpool0_.resize(d_.w0(), h_, w_);
        gz_e0_.resize(d_.w0(), h_, w_);
        ga0_.resize(d_.w0(), h_, w_);
        gz_stem_.resize(d_.w0(), h_, w_);
    }

    void emb_bwd(T* g, int emb, const FmapT<T>& gz) {
        if (d_.emb_dim <= 0 || !g) return;
        T* ge = g + emb_w_[emb];
        for (int c = 0; c < gz.c; ++c) {
            T s = detail::sum(gz.ch(c), gz.plane_size());
            for (int j = 0; j < d_.emb_dim; ++j) ge[size_t(c) * d_.emb_dim + j] += s * emb_[j];
        }
    }

    NetDesc d_;
    Manifest m_;
    int h_, w_;
    size_t conv_w_[7] = {}, conv_b_[7] = {}, emb_w_[5] = {};
    const FmapT<T>* input_ = nullptr;
    FmapT<T> a0_, e0_, p1_, e1_, p2_, mid_, u1_, c1_, d1_, u0_, c0_, d0_, y_;
    FmapT<T> z_stem_, z_e0_, z_e1_, z_mid_, z_d1_, z_d0_;
    FmapT<T> gd0_, gz_d0_, gc0_, gu0_, ge0_, gd1_, gz_d1_, gc1_, gu1_, ge1_;
    FmapT<T> gmid_, gz_mid_, gp2_, gpool1_, gz_e1_, gp1_, gpool0_, gz_e0_, ga0_, gz_stem_;
    std::vector<T> emb_;
    std::vector<T> tmp_;
};

// Per-thread evaluation workspaces, keyed by (desc, h, w). Samplers
// interleave nets of different shapes, so keep a handful per thread.
template <class T>
UNetEval<T>& cached_eval(const NetDesc& d, int h, int w) {
    struct Slot {
        NetDesc d;
        int h, w;
        std::unique_ptr<UNetEval<T>> eval;
    };
    thread_local std::vector<Slot> slots;
    for (auto& s : slots) {
        if (s.d == d && s.h == h && s.w == w) return *s.eval;
    }
    if (slots.size() >= 6) slots.erase(slots.begin());
    slots.push_back({d, h, w, std::make_unique<UNetEval<T>>(d, h, w)});
    return *slots.back().eval;
}

// ---------------------------------------------------------------------------
// Adam with global-norm gradient clipping. Deterministic: plain sequential
// loops over the blob.
// ---------------------------------------------------------------------------
struct AdamState {
    std::vector<float> m, v;
    int64_t t = 0;

    void init(size_t n) {
        m.assign(n, 0.0f);
        v.assign(n, 0.0f);
        t = 0;
    }
};

inline void clip_global_norm(std::vector<float>& g, float max_norm) {
    double sq = 0.0;
    for (float x : g) sq += double(x) * x;
    double norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0.0) {
        float s = float(max_norm / norm);
        for (float& x : g) x *= s;
    }
}

inline void adam_step(std::vector<float>& params, const std::vector<float>& grad,
                      AdamState& st, float lr, float beta1 = 0.9f, float beta2 = 0.999f,
                      float eps = 1e-8f) {
    st.t += 1;
    float bc1 = 1.0f - std::pow(beta1, float(st.t));
    float bc2 = 1.0f - std::pow(beta2, float(st.t));
    for (size_t i = 0; i < params.size(); ++i) {
        st.m[i] = beta1 * st.m[i] + (1.0f - beta1) * grad[i];
        st.v[i] = beta2 * st.v[i] + (1.0f - beta2) * grad[i] * grad[i];
        float mh = st.m[i] / bc1;
        float vh = st.v[i] / bc2;
        params[i] -= lr * mh / (std::sqrt(vh) + eps);
    }
}

}  // namespace sfvd
