#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sfvd/core.hpp"

namespace sfvd {

// Exact squared Euclidean distance to the nearest set pixel, per pixel
// (Felzenszwalb two-pass transform; integer-exact). Distances for an empty
// mask come back as kEdtInf.
constexpr int64_t kEdtInf = int64_t(1) << 50;
std::vector<int64_t> edt_sq(const Mask& mask);

// 2|P n G| / (|P| + |G|); 1 when both masks are empty.
double dice(const Mask& pred, const Mask& gt);

struct SegMetrics {
    double dice = 0;
    double hd = 0;
    double g2re = 0;
    double r2ge = 0;
    double sensitivity = 0;
    double precision = 0;
    // empty-mask sentinels: distance metrics fall back to the image diagonal
    // and precision/sensitivity to 0, flagged here
    bool distances_defined = true;
    bool precision_defined = true;
    bool sensitivity_defined = true;
};

// max of the two directed maximal point-set distances (Euclidean, pixels)
double hausdorff(const Mask& pred, const Mask& gt);

// (g2re, r2ge): mean distance from each gt pixel to the nearest pred pixel,
// and vice versa
std::pair<double, double> directed_errors(const Mask& pred, const Mask& gt);

// fraction of gt pixels within tolerance of a pred pixel, and of pred pixels
// within tolerance of a gt pixel
std::pair<double, double> sensitivity_precision(const Mask& pred, const Mask& gt,
                                                double tolerance_px = 2.0);

// All six metrics with the documented empty-mask handling.
SegMetrics evaluate_masks(const Mask& pred, const Mask& gt, double tolerance_px = 2.0);

SegMetrics mean_metrics(std::span<const SegMetrics> rows);

struct MeanStd {
    double mean = 0;
    double std_dev = 0;
};

// L2 feature-space scores. Normalization is the training-set mean
// nearest-neighbor distance (shared by DS and OS); these values are not
// comparable across feature extractors.
double train_mean_nn_distance(const std::vector<std::vector<float>>& train);
MeanStd diversity_score(const std::vector<std::vector<float>>& samples, double norm_const);
MeanStd overfitting_score(const std::vector<std::vector<float>>& samples,
                          const std::vector<std::vector<float>>& train, double norm_const);

}  // namespace sfvd
