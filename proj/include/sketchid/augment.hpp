#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "sketchid/datamodel.hpp"
#include "sketchid/tensor.hpp"

namespace sketchid {

struct AugmentConfig {
    int num_control_points = 25;    // must be a perfect square (uniform grid)
    double max_displacement = 5.0;  // pixels
    double scale_min = 1.0;
    double scale_max = 1.15;
    int crop_height = 250;
    int crop_width = 200;
    double flip_probability = 0.5;

    void validate() const;
};

// Control points on a centered sqrt(P) x sqrt(P) grid: coordinate
// (g + 0.5) * extent / G along each axis. Returned as (x, y) pairs in
// row-major grid order.
std::vector<std::pair<double, double>> control_grid(int height, int width, int num_points);

// Translates each control point by a random vector (uniform direction,
// uniform magnitude in [0, max_displacement]), interpolates a dense
// displacement field with a thin-plate spline and resamples bilinearly.
Tensor random_deform(const Tensor& image, const AugmentConfig& config, uint64_t seed);

// Uniform random scale in [scale_min, scale_max], bilinear resize, centered
// crop of exactly crop_height x crop_width.
Tensor scale_and_crop(const Tensor& image, const AugmentConfig& config, uint64_t seed);

Tensor hflip(const Tensor& image);

// Deterministic centered crop (the evaluation-time counterpart of
// scale_and_crop at scale 1); identity when the image already has the
// target size.
Tensor center_crop(const Tensor& image, int crop_height, int crop_width);

// Bilinear resize with the half-pixel-center mapping; nh == h and nw == w is
// an exact copy.
Tensor resize_bilinear(const Tensor& image, int out_height, int out_width);

// Deform, scale-and-crop, then flip. The flip decision is shared between the
// two modalities; deformation and scale draws are independent per modality.
// Labels and attribute vectors pass through untouched.
std::pair<PhotoSample, SketchSample> augment_pair(const PhotoSample& photo, const SketchSample& sketch,
                                                  const AugmentConfig& config, uint64_t seed);

}  // namespace sketchid
