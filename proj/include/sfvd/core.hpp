#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace sfvd {

// ---------------------------------------------------------------------------
// Single-channel image plane, row-major. Pixel values live in [-1,1] for
// frames; masks use a separate byte plane.
// ---------------------------------------------------------------------------
template <class T>
struct PlaneT {
    int h = 0;
    int w = 0;
    std::vector<T> v;

    PlaneT() = default;
    PlaneT(int h_, int w_, T fill = T(0)) : h(h_), w(w_), v(size_t(h_) * w_, fill) {}

    T& at(int y, int x) { return v[size_t(y) * w + x]; }
    const T& at(int y, int x) const { return v[size_t(y) * w + x]; }
    size_t size() const { return v.size(); }
    bool same_shape(const PlaneT& o) const { return h == o.h && w == o.w; }
};

using Plane = PlaneT<float>;
using PlaneD = PlaneT<double>;

struct Mask {
    int h = 0;
    int w = 0;
    std::vector<uint8_t> v;

    Mask() = default;
    Mask(int h_, int w_, uint8_t fill = 0) : h(h_), w(w_), v(size_t(h_) * w_, fill) {}

    uint8_t& at(int y, int x) { return v[size_t(y) * w + x]; }
    const uint8_t& at(int y, int x) const { return v[size_t(y) * w + x]; }
    size_t size() const { return v.size(); }
    bool same_shape(const Mask& o) const { return h == o.h && w == o.w; }
    size_t count() const {
        size_t n = 0;
        for (uint8_t b : v) n += (b != 0);
        return n;
    }
};

inline void require_same_shape(const Plane& a, const Plane& b, const char* what) {
    if (!a.same_shape(b)) throw std::invalid_argument(std::string(what) + ": shape mismatch");
}

// ---------------------------------------------------------------------------
// Deterministic RNG. splitmix64 for stream derivation, xoshiro-style core via
// pcg32 output, Box-Muller normals. Self-contained so results are identical
// across standard libraries and platforms.
// ---------------------------------------------------------------------------
inline uint64_t splitmix64(uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Mix a base seed with a stream id so parallel consumers get independent,
// reproducible streams.
inline uint64_t mix_seed(uint64_t seed, uint64_t stream) {
    uint64_t s = seed ^ (0x632be59bd9b4e019ULL * (stream + 1));
    uint64_t a = splitmix64(s);
    uint64_t b = splitmix64(s);
    return a ^ (b << 1);
}

class Rng {
public:
    explicit Rng(uint64_t seed = 0) {
        uint64_t sm = seed;
        state_ = splitmix64(sm);
        inc_ = splitmix64(sm) | 1ULL;
        has_spare_ = false;
        next_u32();
    }

    uint32_t next_u32() {
        uint64_t old = state_;
        state_ = old * 6364136223846793005ULL + inc_;
        uint32_t xorshifted = uint32_t(((old >> 18u) ^ old) >> 27u);
        uint32_t rot = uint32_t(old >> 59u);
        return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
    }

    uint64_t next_u64() {
        uint64_t hi = next_u32();
        return (hi << 32) | next_u32();
    }

    // uniform in [0,1)
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [0, n)
    uint64_t below(uint64_t n) {
        // rejection to kill modulo bias
        uint64_t threshold = (0ULL - n) % n;
        for (;;) {
            uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

    // standard normal via Box-Muller
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1, u2;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    float normal_f() { return float(normal()); }

private:
    uint64_t state_ = 0;
    uint64_t inc_ = 1;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

inline void fill_normal(Plane& p, Rng& rng) {
    for (auto& x : p.v) x = rng.normal_f();
}

// ---------------------------------------------------------------------------
// Worker parallelism. SFVD_THREADS caps the pool; nested calls run serial so
// inner loops never oversubscribe. Tasks write disjoint outputs, so results
// do not depend on the thread count.
// ---------------------------------------------------------------------------
int worker_count();

template <class Fn>
void parallel_for(int n, Fn&& fn) {
    static thread_local bool inside = false;
    int workers = worker_count();
    if (n <= 1 || workers <= 1 || inside) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    int use = std::min(workers, n);
    std::vector<std::thread> pool;
    pool.reserve(use - 1);
    auto run = [&fn, n, use](int tid) {
        inside = true;
        for (int i = tid; i < n; i += use) fn(i);
        inside = false;
    };
    for (int t = 1; t < use; ++t) pool.emplace_back(run, t);
    run(0);
    for (auto& th : pool) th.join();
}

}  // namespace sfvd
