#include "sfvd/metrics.hpp"

#include <cmath>
#include <limits>

namespace sfvd {

namespace {

// 1D squared-distance transform, lower envelope of parabolas. f and d may
// alias distinct buffers; all inputs are integers so results are exact.
void dt1d(const int64_t* f, int n, int64_t* d, std::vector<int>& v, std::vector<double>& z) {
    v.resize(n);
    z.resize(n + 1);
    int k = 0;
    v[0] = 0;
    z[0] = -std::numeric_limits<double>::infinity();
    z[1] = std::numeric_limits<double>::infinity();
    for (int q = 1; q < n; ++q) {
        double s;
        for (;;) {
            int p = v[k];
            s = (double(f[q] - f[p]) + double(q) * q - double(p) * p) / (2.0 * (q - p));
            if (s <= z[k] && k > 0) {
                --k;
            } else {
                break;
            }
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = std::numeric_limits<double>::infinity();
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (z[k + 1] < q) ++k;
        int64_t dq = int64_t(q) - v[k];
        d[q] = dq * dq + f[v[k]];
    }
}

}  // namespace

std::vector<int64_t> edt_sq(const Mask& mask) {
    const int h = mask.h, w = mask.w;
    std::vector<int64_t> g(size_t(h) * w, kEdtInf);

    // pass 1: per-column squared distance to the nearest set row
    for (int x = 0; x < w; ++x) {
        int last = -1;
        for (int y = 0; y < h; ++y) {
            if (mask.at(y, x)) last = y;
            if (last >= 0) {
                int64_t d = y - last;
                g[size_t(y) * w + x] = d * d;
            }
        }
        last = -1;
        for (int y = h - 1; y >= 0; --y) {
            if (mask.at(y, x)) last = y;
            if (last >= 0) {
                int64_t d = last - y;
                g[size_t(y) * w + x] = std::min(g[size_t(y) * w + x], d * d);
            }
        }
    }

    // pass 2: row-wise parabola envelope over columns
    std::vector<int64_t> out(size_t(h) * w);
    std::vector<int64_t> row(w);
    std::vector<int> v;
    std::vector<double> z;
    for (int y = 0; y < h; ++y) {
        dt1d(&g[size_t(y) * w], w, row.data(), v, z);
        std::copy(row.begin(), row.end(), out.begin() + size_t(y) * w);
    }
    return out;
}

double dice(const Mask& pred, const Mask& gt) {
    if (!pred.same_shape(gt)) throw std::invalid_argument("dice: shape mismatch");
    size_t inter = 0, p = 0, g = 0;
    for (size_t i = 0; i < pred.v.size(); ++i) {
        bool a = pred.v[i] != 0, b = gt.v[i] != 0;
        inter += (a && b);
        p += a;
        g += b;
    }
    if (p + g == 0) return 1.0;
    return 2.0 * double(inter) / double(p + g);
}

namespace {

double image_diagonal(const Mask& m) {
    return std::sqrt(double(m.h) * m.h + double(m.w) * m.w);
}

}  // namespace

double hausdorff(const Mask& pred, const Mask& gt) {
    if (!pred.same_shape(gt)) throw std::invalid_argument("hausdorff: shape mismatch");
    if (pred.count() == 0 || gt.count() == 0)
        throw std::invalid_argument("hausdorff: empty mask");
    auto d_to_gt = edt_sq(gt);
    auto d_to_pred = edt_sq(pred);
    int64_t worst = 0;
    for (size_t i = 0; i < pred.v.size(); ++i) {
        if (pred.v[i]) worst = std::max(worst, d_to_gt[i]);
        if (gt.v[i]) worst = std::max(worst, d_to_pred[i]);
    }
    return std::sqrt(double(worst));
}

std::pair<double, double> directed_errors(const Mask& pred, const Mask& gt) {
    if (!pred.same_shape(gt)) throw std::invalid_argument("directed_errors: shape mismatch");
    if (pred.count() == 0 || gt.count() == 0)
        throw std::invalid_argument("directed_errors: empty mask");
    auto d_to_gt = edt_sq(gt);
    auto d_to_pred = edt_sq(pred);
    double g2re = 0, r2ge = 0;
    size_t np = 0, ng = 0;
    for (size_t i = 0; i < pred.v.size(); ++i) {
        if (gt.v[i]) {
            g2re += std::sqrt(double(d_to_pred[i]));
            ++ng;
        }
        if (pred.v[i]) {
            r2ge += std::sqrt(double(d_to_gt[i]));
            ++np;
        }
    }
    return {g2re / double(ng), r2ge / double(np)};
}

std::pair<double, double> sensitivity_precision(const Mask& pred, const Mask& gt,
                                                double tolerance_px) {
    if (!pred.same_shape(gt)) throw std::invalid_argument("sensitivity_precision: shape mismatch");
    const double tol_sq = tolerance_px * tolerance_px;
    auto d_to_pred = edt_sq(pred);
    auto d_to_gt = edt_sq(gt);
    size_t ng = 0, np = 0, hit_g = 0, hit_p = 0;
    for (size_t i = 0; i < pred.v.size(); ++i) {
        if (gt.v[i]) {
            ++ng;
            if (double(d_to_pred[i]) <= tol_sq) ++hit_g;
        }
        if (pred.v[i]) {
            ++np;
            if (double(d_to_gt[i]) <= tol_sq) ++hit_p;
        }
    }
    double sens = ng == 0 ? 0.0 : double(hit_g) / double(ng);
    double prec = np == 0 ? 0.0 : double(hit_p) / double(np);
    return {sens, prec};
}

SegMetrics evaluate_masks(const Mask& pred, const Mask& gt, double tolerance_px) {
    SegMetrics m;
    m.dice = dice(pred, gt);
    bool p_empty = pred.count() == 0, g_empty = gt.count() == 0;
    if (p_empty || g_empty) {
        m.distances_defined = false;
        m.hd = m.g2re = m.r2ge = image_diagonal(gt);
    } else {
        m.hd = hausdorff(pred, gt);
        auto [g2re, r2ge] = directed_errors(pred, gt);
        m.g2re = g2re;
        m.r2ge = r2ge;
    }
    auto [sens, prec] = sensitivity_precision(pred, gt, tolerance_px);
    m.sensitivity = sens;
    m.precision = prec;
    m.sensitivity_defined = !g_empty;
    m.precision_defined = !p_empty;
    return m;
}

SegMetrics mean_metrics(std::span<const SegMetrics> rows) {
    SegMetrics agg;
    if (rows.empty()) return agg;
    for (const auto& r : rows) {
        agg.dice += r.dice;
        agg.hd += r.hd;
        agg.g2re += r.g2re;
        agg.r2ge += r.r2ge;
        agg.sensitivity += r.sensitivity;
        agg.precision += r.precision;
        agg.distances_defined = agg.distances_defined && r.distances_defined;
        agg.precision_defined = agg.precision_defined && r.precision_defined;
        agg.sensitivity_defined = agg.sensitivity_defined && r.sensitivity_defined;
    }
    double n = double(rows.size());
    agg.dice /= n;
    agg.hd /= n;
    agg.g2re /= n;
    agg.r2ge /= n;
    agg.sensitivity /= n;
    agg.precision /= n;
    return agg;
}

namespace {

double l2(const std::vector<float>& a, const std::vector<float>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("feature length mismatch");
    double s = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        double d = double(a[i]) - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

MeanStd mean_std(const std::vector<double>& xs) {
    MeanStd r;
    if (xs.empty()) return r;
    for (double x : xs) r.mean += x;
    r.mean /= double(xs.size());
    double var = 0;
    for (double x : xs) var += (x - r.mean) * (x - r.mean);
    r.std_dev = std::sqrt(var / double(xs.size()));
    return r;
}

}  // namespace

double train_mean_nn_distance(const std::vector<std::vector<float>>& train) {
    if (train.size() < 2) throw std::invalid_argument("train_mean_nn_distance: need >= 2 samples");
    double total = 0;
    for (size_t i = 0; i < train.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (size_t j = 0; j < train.size(); ++j) {
            if (i == j) continue;
            best = std::min(best, l2(train[i], train[j]));
        }
        total += best;
    }
    return total / double(train.size());
}

MeanStd diversity_score(const std::vector<std::vector<float>>& samples, double norm_const) {
    if (samples.size() < 2) throw std::invalid_argument("diversity_score: need >= 2 samples");
    if (!(norm_const > 0.0)) norm_const = 1.0;
    std::vector<double> d(samples.size());
    for (size_t i = 0; i < samples.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (size_t j = 0; j < samples.size(); ++j) {
            if (i == j) continue;
            best = std::min(best, l2(samples[i], samples[j]));
        }
        d[i] = best / norm_const;
    }
    return mean_std(d);
}

MeanStd overfitting_score(const std::vector<std::vector<float>>& samples,
                          const std::vector<std::vector<float>>& train, double norm_const) {
    if (samples.empty() || train.empty())
        throw std::invalid_argument("overfitting_score: empty inputs");
    if (!(norm_const > 0.0)) norm_const = 1.0;
    std::vector<double> d(samples.size());
    for (size_t i = 0; i < samples.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& t : train) best = std::min(best, l2(samples[i], t));
        d[i] = best / norm_const;
    }
    return mean_std(d);
}

}  // namespace sfvd
