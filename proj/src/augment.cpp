#include "sketchid/augment.hpp"

#include <algorithm>
#include <cmath>

#include "sketchid/rng.hpp"

namespace sketchid {

namespace {

constexpr double kPi = 3.14159265358979323846;

bool is_perfect_square(int n) {
    if (n <= 0) return false;
    const int r = static_cast<int>(std::lround(std::sqrt(double(n))));
    return r * r == n;
}

// Solves A X = B in place (B holds `nrhs` columns) by Gaussian elimination
// with partial pivoting.
void solve_dense(std::vector<double>& a, std::vector<double>& b, int n, int nrhs) {
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(a[r * n + col]) > std::abs(a[pivot * n + col])) pivot = r;
        if (a[pivot * n + col] == 0.0) throw numeric_error("singular thin-plate-spline system");
        if (pivot != col) {
            for (int c = 0; c < n; ++c) std::swap(a[col * n + c], a[pivot * n + c]);
            for (int c = 0; c < nrhs; ++c) std::swap(b[col * nrhs + c], b[pivot * nrhs + c]);
        }
        const double inv = 1.0 / a[col * n + col];
        for (int r = col + 1; r < n; ++r) {
            const double f = a[r * n + col] * inv;
            if (f == 0.0) continue;
            for (int c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
            for (int c = 0; c < nrhs; ++c) b[r * nrhs + c] -= f * b[col * nrhs + c];
        }
    }
    for (int r = n - 1; r >= 0; --r) {
        for (int c = 0; c < nrhs; ++c) {
            double acc = b[r * nrhs + c];
            for (int j = r + 1; j < n; ++j) acc -= a[r * n + j] * b[j * nrhs + c];
            b[r * nrhs + c] = acc / a[r * n + r];
        }
    }
}

double tps_kernel(double r2) { return r2 > 0.0 ? 0.5 * r2 * std::log(r2) : 0.0; }

// Thin-plate spline through P scattered 2-d displacements, both components
// sharing one factorization and one radial-kernel evaluation per point:
// f(p) = a0 + a1 x + a2 y + sum_i w_i U(|p - p_i|).
struct DisplacementSpline {
    std::vector<std::pair<double, double>> points;
    std::vector<double> weights;  // (P+3) rows x 2 columns (dx, dy)

    static DisplacementSpline fit(const std::vector<std::pair<double, double>>& points,
                                  const std::vector<double>& dx, const std::vector<double>& dy) {
        const int p = static_cast<int>(points.size());
        const int n = p + 3;
        std::vector<double> a(std::size_t(n) * n, 0.0);
        std::vector<double> b(std::size_t(n) * 2, 0.0);
        for (int i = 0; i < p; ++i) {
            for (int j = 0; j < p; ++j) {
                const double ddx = points[i].first - points[j].first;
                const double ddy = points[i].second - points[j].second;
                a[i * n + j] = tps_kernel(ddx * ddx + ddy * ddy);
            }
            a[i * n + p] = 1.0;
            a[i * n + p + 1] = points[i].first;
            a[i * n + p + 2] = points[i].second;
            a[(p + 0) * n + i] = 1.0;
            a[(p + 1) * n + i] = points[i].first;
            a[(p + 2) * n + i] = points[i].second;
            b[i * 2 + 0] = dx[i];
            b[i * 2 + 1] = dy[i];
        }
        solve_dense(a, b, n, 2);
        DisplacementSpline s;
        s.points = points;
        s.weights = std::move(b);
        return s;
    }

    std::pair<double, double> operator()(double x, double y) const {
        const int p = static_cast<int>(points.size());
        double ax = weights[(p + 0) * 2] + weights[(p + 1) * 2] * x + weights[(p + 2) * 2] * y;
        double ay = weights[(p + 0) * 2 + 1] + weights[(p + 1) * 2 + 1] * x + weights[(p + 2) * 2 + 1] * y;
        for (int i = 0; i < p; ++i) {
            const double dx = x - points[i].first;
            const double dy = y - points[i].second;
            const double u = tps_kernel(dx * dx + dy * dy);
            ax += weights[i * 2] * u;
            ay += weights[i * 2 + 1] * u;
        }
        return {ax, ay};
    }
};

double sample_bilinear_clamped(const Tensor& img, int c, double y, double x) {
    const double cy = std::clamp(y, 0.0, double(img.height - 1));
    const double cx = std::clamp(x, 0.0, double(img.width - 1));
    const int y0 = static_cast<int>(std::floor(cy));
    const int x0 = static_cast<int>(std::floor(cx));
    const int y1 = std::min(y0 + 1, img.height - 1);
    const int x1 = std::min(x0 + 1, img.width - 1);
    const double fy = cy - y0;
    const double fx = cx - x0;
    const double top = img.at(c, y0, x0) * (1.0 - fx) + img.at(c, y0, x1) * fx;
    const double bot = img.at(c, y1, x0) * (1.0 - fx) + img.at(c, y1, x1) * fx;
    return top * (1.0 - fy) + bot * fy;
}

}  // namespace

void AugmentConfig::validate() const {
    if (!is_perfect_square(num_control_points))
        throw usage_error("num_control_points must be a positive perfect square, got " +
                          std::to_string(num_control_points));
    if (max_displacement < 0.0) throw usage_error("max_displacement must be >= 0");
    if (!(scale_min > 0.0) || scale_min > scale_max)
        throw usage_error("scale range must satisfy 0 < scale_min <= scale_max");
    if (crop_height <= 0 || crop_width <= 0) throw usage_error("crop dimensions must be positive");
    if (flip_probability < 0.0 || flip_probability > 1.0)
        throw usage_error("flip_probability must be in [0,1]");
}

std::vector<std::pair<double, double>> control_grid(int height, int width, int num_points) {
    if (!is_perfect_square(num_points))
        throw usage_error("control grid requires a perfect-square point count, got " + std::to_string(num_points));
    const int g = static_cast<int>(std::lround(std::sqrt(double(num_points))));
    std::vector<std::pair<double, double>> points;
    points.reserve(num_points);
    for (int r = 0; r < g; ++r)
        for (int c = 0; c < g; ++c)
            points.emplace_back((c + 0.5) * width / g, (r + 0.5) * height / g);
    return points;
}

Tensor random_deform(const Tensor& image, const AugmentConfig& config, uint64_t seed) {
    config.validate();
    if (image.height <= 2 || image.width <= 2) throw data_error("random_deform: image too small");

    const auto points = control_grid(image.height, image.width, config.num_control_points);
    const int p = static_cast<int>(points.size());

    Rng rng(seed);
    std::vector<double> dx(p), dy(p);
    for (int i = 0; i < p; ++i) {
        const double angle = rng.uniform(0.0, 2.0 * kPi);
        const double mag = rng.uniform(0.0, config.max_displacement);
        dx[i] = mag * std::cos(angle);
        dy[i] = mag * std::sin(angle);
    }

    const auto spline = DisplacementSpline::fit(points, dx, dy);

    Tensor out(image.channels, image.height, image.width);
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            const auto [ox, oy] = spline(x, y);
            const double sx = x + ox;
            const double sy = y + oy;
            for (int c = 0; c < image.channels; ++c) out.at(c, y, x) = sample_bilinear_clamped(image, c, sy, sx);
        }
    }
    return out;
}

Tensor resize_bilinear(const Tensor& image, int out_height, int out_width) {
    if (out_height <= 0 || out_width <= 0) throw data_error("resize_bilinear: output must be positive");
    if (out_height == image.height && out_width == image.width) return image;
    Tensor out(image.channels, out_height, out_width);
    const double sy = double(image.height) / out_height;
    const double sx = double(image.width) / out_width;
    for (int y = 0; y < out_height; ++y) {
        const double src_y = (y + 0.5) * sy - 0.5;
        for (int x = 0; x < out_width; ++x) {
            const double src_x = (x + 0.5) * sx - 0.5;
            for (int c = 0; c < image.channels; ++c)
                out.at(c, y, x) = sample_bilinear_clamped(image, c, src_y, src_x);
        }
    }
    return out;
}

Tensor scale_and_crop(const Tensor& image, const AugmentConfig& config, uint64_t seed) {
    config.validate();
    if (double(image.height) * config.scale_min < config.crop_height ||
        double(image.width) * config.scale_min < config.crop_width)
        throw usage_error("scale_and_crop: image " + std::to_string(image.height) + "x" +
                          std::to_string(image.width) + " cannot cover a " + std::to_string(config.crop_height) +
                          "x" + std::to_string(config.crop_width) + " crop at scale_min");

    Rng rng(seed);
    const double scale = rng.uniform(config.scale_min, config.scale_max);
    const int nh = static_cast<int>(std::lround(image.height * scale));
    const int nw = static_cast<int>(std::lround(image.width * scale));
    const Tensor scaled = resize_bilinear(image, nh, nw);

    const int top = (nh - config.crop_height) / 2;
    const int left = (nw - config.crop_width) / 2;
    Tensor out(image.channels, config.crop_height, config.crop_width);
    for (int c = 0; c < image.channels; ++c)
        for (int y = 0; y < config.crop_height; ++y) {
            const double* src = scaled.plane(c) + std::size_t(top + y) * nw + left;
            double* dst = out.plane(c) + std::size_t(y) * config.crop_width;
            std::copy(src, src + config.crop_width, dst);
        }
    return out;
}

Tensor center_crop(const Tensor& image, int crop_height, int crop_width) {
    if (image.height == crop_height && image.width == crop_width) return image;
    if (image.height < crop_height || image.width < crop_width)
        throw data_error("image " + std::to_string(image.height) + "x" + std::to_string(image.width) +
                         " is smaller than the " + std::to_string(crop_height) + "x" +
                         std::to_string(crop_width) + " crop");
    const int top = (image.height - crop_height) / 2;
    const int left = (image.width - crop_width) / 2;
    Tensor out(image.channels, crop_height, crop_width);
    for (int c = 0; c < image.channels; ++c)
        for (int y = 0; y < crop_height; ++y) {
            const double* src = image.plane(c) + std::size_t(top + y) * image.width + left;
            std::copy(src, src + crop_width, out.plane(c) + std::size_t(y) * crop_width);
        }
    return out;
}

Tensor hflip(const Tensor& image) {
    Tensor out(image.channels, image.height, image.width);
    for (int c = 0; c < image.channels; ++c)
        for (int y = 0; y < image.height; ++y)
            for (int x = 0; x < image.width; ++x) out.at(c, y, x) = image.at(c, y, image.width - 1 - x);
    return out;
}

std::pair<PhotoSample, SketchSample> augment_pair(const PhotoSample& photo, const SketchSample& sketch,
                                                  const AugmentConfig& config, uint64_t seed) {
    config.validate();

    const bool flip = Rng(mix_seed(seed, 0)).bernoulli(config.flip_probability);

    PhotoSample out_photo = photo;
    SketchSample out_sketch = sketch;

    out_photo.image = random_deform(photo.image, config, mix_seed(seed, 1));
    out_sketch.image = random_deform(sketch.image, config, mix_seed(seed, 2));
    out_photo.image = scale_and_crop(out_photo.image, config, mix_seed(seed, 3));
    out_sketch.image = scale_and_crop(out_sketch.image, config, mix_seed(seed, 4));
    if (flip) {
        out_photo.image = hflip(out_photo.image);
        out_sketch.image = hflip(out_sketch.image);
    }
    return {std::move(out_photo), std::move(out_sketch)};
}

}  // namespace sketchid
