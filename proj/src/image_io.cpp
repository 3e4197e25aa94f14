#include "sketchid/image_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <vector>

#include "sketchid/errors.hpp"

namespace sketchid {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

uint8_t to_byte(double v) {
    const double scaled = std::lround(std::min(1.0, std::max(0.0, v)) * 255.0);
    return static_cast<uint8_t>(scaled);
}

}  // namespace

bool file_exists(const std::string& path) {
    std::error_code ec;
    return std::filesystem::exists(path, ec);
}

Tensor read_png(const std::string& path) {
    FilePtr file(std::fopen(path.c_str(), "rb"));
    if (!file) throw data_error("cannot open PNG file: " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw data_error("libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw data_error("libpng init failed");
    }
    std::vector<png_bytep> row_ptrs;
    std::vector<uint8_t> bytes;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw data_error("failed to decode PNG: " + path);
    }
    png_init_io(png, file.get());
    png_read_info(png, info);

    const png_uint_32 w = png_get_image_width(png, info);
    const png_uint_32 h = png_get_image_height(png, info);
    const png_byte color = png_get_color_type(png, info);
    const png_byte depth = png_get_bit_depth(png, info);

    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);

    const int channels = png_get_channels(png, info);
    if (channels != 1 && channels != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw data_error("unsupported PNG channel count in " + path);
    }

    bytes.resize(std::size_t(h) * w * channels);
    row_ptrs.resize(h);
    for (png_uint_32 y = 0; y < h; ++y) row_ptrs[y] = bytes.data() + std::size_t(y) * w * channels;
    png_read_image(png, row_ptrs.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    Tensor out(channels, int(h), int(w));
    for (int c = 0; c < channels; ++c) {
        double* plane = out.plane(c);
        for (std::size_t i = 0; i < std::size_t(h) * w; ++i)
            plane[i] = double(bytes[i * channels + c]) / 255.0;
    }
    return out;
}

Tensor to_luminance(const Tensor& image) {
    if (image.channels == 1) return image;
    if (image.channels != 3) throw data_error("to_luminance expects 1 or 3 channels");
    Tensor out(1, image.height, image.width);
    const double* r = image.plane(0);
    const double* g = image.plane(1);
    const double* b = image.plane(2);
    double* y = out.plane(0);
    for (std::size_t i = 0; i < out.plane_size(); ++i) y[i] = 0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i];
    return out;
}

Tensor read_png_gray(const std::string& path) { return to_luminance(read_png(path)); }

Tensor read_png_rgb(const std::string& path) {
    Tensor t = read_png(path);
    if (t.channels == 3) return t;
    Tensor out(3, t.height, t.width);
    for (int c = 0; c < 3; ++c)
        std::copy(t.plane(0), t.plane(0) + t.plane_size(), out.plane(c));
    return out;
}

void write_png(const Tensor& image, const std::string& path) {
    if (image.channels != 1 && image.channels != 3)
        throw data_error("write_png expects a 1- or 3-channel tensor");

    FilePtr file(std::fopen(path.c_str(), "wb"));
    if (!file) throw data_error("cannot write PNG file: " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw data_error("libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw data_error("libpng init failed");
    }
    std::vector<uint8_t> bytes(std::size_t(image.height) * image.width * image.channels);
    std::vector<png_bytep> row_ptrs(image.height);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw data_error("failed to encode PNG: " + path);
    }
    png_init_io(png, file.get());
    png_set_IHDR(png, info, image.width, image.height, 8,
                 image.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);

    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            for (int c = 0; c < image.channels; ++c)
                bytes[(std::size_t(y) * image.width + x) * image.channels + c] = to_byte(image.at(c, y, x));
        }
        row_ptrs[y] = bytes.data() + std::size_t(y) * image.width * image.channels;
    }
    png_write_info(png, info);
    png_write_image(png, row_ptrs.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace sketchid
