#pragma once

#include <cstdint>
#include <string>

#include "sketchid/datamodel.hpp"
#include "sketchid/tensor.hpp"
#include "sketchid/xdog.hpp"

namespace sketchid {

// Procedural face render: geometry comes from a per-identity latent, pigment
// and accessories from the attribute bits, so every attribute is visually
// decodable from the photo.
struct FaceParams {
    int height = 48;
    int width = 40;

    // Geometry, in fractions of the frame.
    double center_x = 0.5;
    double center_y = 0.52;
    double face_rx = 0.34;   // half width
    double face_ry = 0.40;   // half height
    double eye_dx = 0.16;    // eye offset from center
    double eye_y = 0.45;     // eye row
    double eye_r = 0.045;
    double mouth_y = 0.74;
    double mouth_rx = 0.12;
    double mouth_ry = 0.03;
    double nose_len = 0.12;
    double brow_ry = 0.012;
    double jaw_flare = 0.0;     // male jaw widening
    double color_jitter = 0.0;  // per-identity pigment tint in [-1,1]

    AttributeVector attributes;  // standard 12-attribute vocabulary
};

Tensor render_face(const FaceParams& params);  // 3xHxW in [0,1]

struct SynthConfig {
    int identities = 40;
    uint64_t seed = 0;
    int height = 48;
    int width = 40;
    XDoGParams xdog;
};

// Draws geometry and attributes per identity, writes photo/sketch PNG pairs
// (sketch = xdog of the photo luminance) plus manifest.csv into out_dir, and
// returns the manifest. Bit-deterministic per seed.
DatasetManifest synth_dataset(const SynthConfig& cfg, const std::string& out_dir);

// The per-identity parameter draw, exposed for generator tests.
FaceParams draw_face_params(const SynthConfig& cfg, uint64_t identity_seed);

}  // namespace sketchid
