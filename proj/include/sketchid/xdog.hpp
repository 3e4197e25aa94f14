#pragma once

#include <string>

#include "sketchid/datamodel.hpp"
#include "sketchid/tensor.hpp"

namespace sketchid {

// Extended difference-of-Gaussians stylization parameters. Defaults produce
// line-drawing-like output on face renders.
struct XDoGParams {
    double sigma = 0.8;     // base Gaussian scale, pixels
    double k = 1.6;         // scale ratio between the two Gaussians
    double tau = 0.98;      // weight of the wide Gaussian
    double epsilon = -0.05;  // threshold level
    double phi = 200.0;     // soft-threshold steepness

    void validate() const;  // sigma > 0, k > 1, phi > 0
};

// Separable Gaussian, symmetric reflection at the borders, kernel radius
// ceil(3*sigma), normalized taps. sigma == 0 is the identity.
Tensor gaussian_blur(const Tensor& image, double sigma);

// D = blur(sigma) - tau * blur(k*sigma); output is 1 where D >= epsilon and
// 1 + tanh(phi * (D - epsilon)) elsewhere, clamped to [0,1].
Tensor xdog(const Tensor& image, const XDoGParams& params);
// The unthresholded response D, exposed for verification.
Tensor xdog_response(const Tensor& image, const XDoGParams& params);

// Writes one synthetic sketch per photo (luminance then xdog) into out_dir
// and returns a manifest pairing the photos with the generated sketches.
DatasetManifest sketchify_dataset(const DatasetManifest& manifest, const XDoGParams& params,
                                  const std::string& out_dir);

}  // namespace sketchid
