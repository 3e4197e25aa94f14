#include "sketchid/synthfaces.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "sketchid/image_io.hpp"
#include "sketchid/rng.hpp"

namespace sketchid {

namespace {

struct Color {
    double r, g, b;
};

Color mix(const Color& a, const Color& b, double t) {
    return {a.r + (b.r - a.r) * t, a.g + (b.g - a.g) * t, a.b + (b.b - a.b) * t};
}

// Soft coverage of an axis-aligned ellipse; e is the normalized radial
// coordinate (1 on the boundary), eps the edge softness in e-units.
double ellipse_cov(double px, double py, double cx, double cy, double rx, double ry, double eps = 0.04) {
    const double dx = (px - cx) / rx;
    const double dy = (py - cy) / ry;
    const double e = std::sqrt(dx * dx + dy * dy);
    const double t = std::clamp((1.0 - e) / eps + 0.5, 0.0, 1.0);
    return t * t * (3.0 - 2.0 * t);
}

// Ring of the same ellipse; `thick` is the radial thickness in e-units.
double ring_cov(double px, double py, double cx, double cy, double rx, double ry, double thick,
                double eps = 0.04) {
    const double dx = (px - cx) / rx;
    const double dy = (py - cy) / ry;
    const double e = std::sqrt(dx * dx + dy * dy);
    const double t = std::clamp((thick * 0.5 - std::abs(e - 1.0)) / eps + 0.5, 0.0, 1.0);
    return t * t * (3.0 - 2.0 * t);
}

double box_cov(double px, double py, double cx, double cy, double rx, double ry, double eps = 0.012) {
    const double dx = std::abs(px - cx) - rx;
    const double dy = std::abs(py - cy) - ry;
    const double d = std::max(dx, dy);
    const double t = std::clamp(-d / eps + 0.5, 0.0, 1.0);
    return t * t * (3.0 - 2.0 * t);
}

enum StdAttr {
    kBald = 0,
    kBlackHair = 1,
    kBlondHair = 2,
    kBrownHair = 3,
    kGrayHair = 4,
    kMale = 5,
    kAsian = 6,
    kIndian = 7,
    kWhite = 8,
    kBlack = 9,
    kEyeglasses = 10,
    kPaleSkin = 11,
};

}  // namespace

Tensor render_face(const FaceParams& p) {
    if (p.attributes.size() != 12) throw data_error("render_face expects the 12-attribute vocabulary");
    const auto& bits = p.attributes.bits;

    // Pigments carry a per-identity tint (p.color_jitter in [-1,1]) so that an
    // attribute maps to a color range, not one memorizable constant.
    const double j = p.color_jitter;

    Color skin{0.92, 0.80, 0.70};  // default matches `white`
    if (bits[kAsian]) skin = {0.89, 0.75, 0.57};
    if (bits[kIndian]) skin = {0.66, 0.48, 0.34};
    if (bits[kBlack]) skin = {0.42, 0.30, 0.22};
    if (bits[kPaleSkin]) skin = mix(skin, {0.98, 0.94, 0.90}, 0.6);
    skin = mix(skin, j > 0 ? Color{1, 1, 1} : Color{0, 0, 0}, 0.06 * std::abs(j));

    Color hair{0.08, 0.08, 0.08};
    if (bits[kBlondHair]) hair = {0.85, 0.72, 0.38};
    if (bits[kBrownHair]) hair = {0.42, 0.26, 0.14};
    if (bits[kGrayHair]) hair = {0.63, 0.63, 0.63};
    hair = mix(hair, j > 0 ? Color{1, 1, 1} : Color{0, 0, 0}, 0.08 * std::abs(j));
    const bool has_hair = !bits[kBald];

    const Color bg{0.95, 0.95, 0.95};
    const Color outline{0.25, 0.22, 0.20};
    const Color pupil{0.08, 0.06, 0.06};
    const Color sclera{0.98, 0.98, 0.98};
    const Color mouth{0.45, 0.15, 0.15};
    const Color frame{0.05, 0.05, 0.05};
    const Color brow = mix(hair, {0.08, 0.08, 0.08}, has_hair ? 0.3 : 0.8);
    const Color nose = mix(skin, {0.0, 0.0, 0.0}, 0.45);

    const double eye_ry = p.eye_r * (bits[kAsian] ? 0.55 : 1.0);
    const double brow_ry = p.brow_ry * (bits[kMale] ? 1.9 : 1.0);
    const double hairline = p.center_y - 0.55 * p.face_ry;

    Tensor img(3, p.height, p.width);
    for (int y = 0; y < p.height; ++y) {
        const double py = (y + 0.5) / p.height;
        for (int x = 0; x < p.width; ++x) {
            const double px = (x + 0.5) / p.width;
            Color c = bg;

            // Jaw flare widens the face below the midline.
            const double below = std::max(0.0, (py - p.center_y) / p.face_ry);
            const double rx_eff = p.face_rx * (1.0 + p.jaw_flare * below * 0.5);

            // Hair mass behind the head, with its own contour.
            if (has_hair) {
                const double hrx = p.face_rx * 1.22;
                const double hry = p.face_ry * 1.14;
                c = mix(c, hair, ellipse_cov(px, py, p.center_x, p.center_y - 0.02, hrx, hry));
                c = mix(c, outline,
                        ring_cov(px, py, p.center_x, p.center_y - 0.02, hrx, hry, 0.10));
            }

            // Face with a dark silhouette stroke carrying the jaw geometry.
            c = mix(c, skin, ellipse_cov(px, py, p.center_x, p.center_y, rx_eff, p.face_ry));
            c = mix(c, outline, ring_cov(px, py, p.center_x, p.center_y, rx_eff, p.face_ry, 0.10));

            // Hair cap over the forehead.
            if (has_hair && py < hairline + 0.03) {
                const double cap = ellipse_cov(px, py, p.center_x, p.center_y, p.face_rx * 1.06,
                                               p.face_ry * 1.04) *
                                   std::clamp((hairline - py) / 0.03 + 0.5, 0.0, 1.0);
                c = mix(c, hair, cap);
            }

            for (int side = -1; side <= 1; side += 2) {
                const double ex = p.center_x + side * p.eye_dx;
                // Sclera, pupil, brow.
                c = mix(c, sclera, ellipse_cov(px, py, ex, p.eye_y, p.eye_r * 1.6, eye_ry * 1.35));
                c = mix(c, pupil, ellipse_cov(px, py, ex, p.eye_y, p.eye_r * 0.85, eye_ry * 0.95));
                c = mix(c, brow, box_cov(px, py, ex, p.eye_y - 0.055, p.eye_r * 1.7, brow_ry));
                if (bits[kEyeglasses])
                    c = mix(c, frame, ring_cov(px, py, ex, p.eye_y, p.eye_r * 2.3, eye_ry * 3.4, 0.22, 0.08));
            }
            if (bits[kEyeglasses]) {
                // Bridge between the lenses.
                c = mix(c, frame, box_cov(px, py, p.center_x, p.eye_y, p.eye_dx - p.eye_r * 1.2, 0.010));
            }

            // Nose and mouth.
            c = mix(c, nose, box_cov(px, py, p.center_x, p.eye_y + 0.04 + p.nose_len * 0.5, 0.014,
                                     p.nose_len * 0.5));
            c = mix(c, mouth, ellipse_cov(px, py, p.center_x, p.mouth_y, p.mouth_rx, p.mouth_ry, 0.08));

            img.at(0, y, x) = std::clamp(c.r, 0.0, 1.0);
            img.at(1, y, x) = std::clamp(c.g, 0.0, 1.0);
            img.at(2, y, x) = std::clamp(c.b, 0.0, 1.0);
        }
    }
    return img;
}

FaceParams draw_face_params(const SynthConfig& cfg, uint64_t identity_seed) {
    Rng rng(identity_seed);
    FaceParams p;
    p.height = cfg.height;
    p.width = cfg.width;

    // Geometry stays inside the central ~70% of the frame so scale-and-crop
    // augmentation never cuts the hair or the chin.
    p.center_x = rng.uniform(0.48, 0.52);
    p.center_y = rng.uniform(0.50, 0.54);
    p.face_rx = rng.uniform(0.22, 0.29);
    p.face_ry = rng.uniform(0.26, 0.33);
    p.eye_dx = rng.uniform(0.095, 0.155);
    p.eye_y = rng.uniform(0.42, 0.48);
    p.eye_r = rng.uniform(0.030, 0.046);
    p.mouth_y = rng.uniform(0.64, 0.72);
    p.mouth_rx = rng.uniform(0.06, 0.13);
    p.mouth_ry = rng.uniform(0.016, 0.036);
    p.nose_len = rng.uniform(0.07, 0.13);
    p.brow_ry = 0.009;

    AttributeVector att(12);
    const int hair_kind = static_cast<int>(rng.below(5));  // bald/black/blond/brown/gray
    att.bits[hair_kind] = 1;
    const int ethnicity = static_cast<int>(rng.below(4));
    att.bits[kAsian + ethnicity] = 1;
    const bool male = rng.bernoulli(0.5);
    att.bits[kMale] = male;
    att.bits[kEyeglasses] = rng.bernoulli(0.35);
    att.bits[kPaleSkin] = rng.bernoulli(att.bits[kWhite] ? 0.6 : 0.15);

    p.jaw_flare = male ? 0.35 : 0.05;
    p.color_jitter = rng.uniform(-1.0, 1.0);
    p.attributes = att;
    return p;
}

DatasetManifest synth_dataset(const SynthConfig& cfg, const std::string& out_dir) {
    if (cfg.identities < 2) throw usage_error("synth dataset needs at least 2 identities");
    if (cfg.height < 16 || cfg.width < 16) throw usage_error("synth dataset images must be at least 16x16");
    cfg.xdog.validate();

    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (!std::filesystem::is_directory(out_dir)) throw data_error("cannot create output directory " + out_dir);

    DatasetManifest manifest;
    manifest.vocabulary = AttributeVocabulary::standard();
    manifest.base_dir = out_dir;

    for (int id = 0; id < cfg.identities; ++id) {
        const FaceParams params = draw_face_params(cfg, mix_seed(cfg.seed, 0xface0000ULL + uint64_t(id)));
        const Tensor photo = render_face(params);
        const Tensor sketch = xdog(to_luminance(photo), cfg.xdog);

        char photo_name[64], sketch_name[64];
        std::snprintf(photo_name, sizeof(photo_name), "photo_%04d.png", id);
        std::snprintf(sketch_name, sizeof(sketch_name), "sketch_%04d.png", id);
        write_png(photo, (std::filesystem::path(out_dir) / photo_name).string());
        write_png(sketch, (std::filesystem::path(out_dir) / sketch_name).string());

        ManifestEntry e;
        e.photo_path = photo_name;
        e.sketch_path = sketch_name;
        e.identity = id;
        e.attributes = params.attributes;
        e.witness_attributes = params.attributes;
        manifest.entries.push_back(std::move(e));
    }
    write_manifest(manifest, (std::filesystem::path(out_dir) / "manifest.csv").string());
    return manifest;
}

}  // namespace sketchid
