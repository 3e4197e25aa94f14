#include "sketchid/xdog.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "sketchid/image_io.hpp"
#include "sketchid/kernels.hpp"

namespace sketchid {

void XDoGParams::validate() const {
    if (!(sigma > 0.0)) throw usage_error("xdog: sigma must be > 0");
    if (!(k > 1.0)) throw usage_error("xdog: k must be > 1");
    if (!(phi > 0.0)) throw usage_error("xdog: phi must be > 0");
}

namespace {

std::vector<double> gaussian_kernel(double sigma, int& radius) {
    radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> taps(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double v = std::exp(-0.5 * (i * i) / (sigma * sigma));
        taps[i + radius] = v;
        sum += v;
    }
    for (double& t : taps) t /= sum;
    return taps;
}

}  // namespace

Tensor gaussian_blur(const Tensor& image, double sigma) {
    if (sigma < 0.0) throw usage_error("gaussian_blur: sigma must be >= 0");
    if (sigma == 0.0) return image;

    int radius = 0;
    const auto taps = gaussian_kernel(sigma, radius);
    const auto& k = active_kernels();

    Tensor tmp(image.channels, image.height, image.width);
    Tensor out(image.channels, image.height, image.width);
    for (int c = 0; c < image.channels; ++c) {
        k.blur_rows(image.plane(c), image.height, image.width, taps.data(), radius, tmp.plane(c));
        k.blur_cols(tmp.plane(c), image.height, image.width, taps.data(), radius, out.plane(c));
    }
    return out;
}

Tensor xdog_response(const Tensor& image, const XDoGParams& params) {
    params.validate();
    if (image.channels != 1) throw data_error("xdog expects a grayscale image");
    const Tensor narrow = gaussian_blur(image, params.sigma);
    const Tensor wide = gaussian_blur(image, params.k * params.sigma);
    Tensor d(1, image.height, image.width);
    for (std::size_t i = 0; i < d.size(); ++i) d.data[i] = narrow.data[i] - params.tau * wide.data[i];
    return d;
}

Tensor xdog(const Tensor& image, const XDoGParams& params) {
    Tensor d = xdog_response(image, params);
    for (double& v : d.data) {
        if (v >= params.epsilon)
            v = 1.0;
        else
            v = std::clamp(1.0 + std::tanh(params.phi * (v - params.epsilon)), 0.0, 1.0);
    }
    return d;
}

DatasetManifest sketchify_dataset(const DatasetManifest& manifest, const XDoGParams& params,
                                  const std::string& out_dir) {
    params.validate();
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (!std::filesystem::is_directory(out_dir))
        throw data_error("sketchify: cannot create output directory " + out_dir);

    DatasetManifest out;
    out.vocabulary = manifest.vocabulary;
    out.base_dir = out_dir;
    int index = 0;
    for (const auto& e : manifest.entries) {
        const Tensor photo = read_png(manifest.resolve(e.photo_path));
        const Tensor sketch = xdog(to_luminance(photo), params);

        char name[64];
        std::snprintf(name, sizeof(name), "sketch_%05d.png", index);
        const std::string sketch_rel = name;
        write_png(sketch, (std::filesystem::path(out_dir) / sketch_rel).string());

        ManifestEntry ne = e;
        // Keep photos reachable from the new manifest's directory.
        ne.photo_path = std::filesystem::path(e.photo_path).is_absolute()
                            ? e.photo_path
                            : std::filesystem::absolute(manifest.resolve(e.photo_path)).string();
        ne.sketch_path = sketch_rel;
        out.entries.push_back(std::move(ne));
        ++index;
    }
    write_manifest(out, (std::filesystem::path(out_dir) / "manifest.csv").string());
    return out;
}

}  // namespace sketchid
