#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "sketchid/errors.hpp"

namespace sketchid {

// Dense CHW tensor of doubles. Channel planes are contiguous, rows are
// contiguous within a plane. Used both for images (photos C=3, sketches C=1)
// and for intermediate feature maps.
struct Tensor {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> data;

    Tensor() = default;
    Tensor(int c, int h, int w, double fill = 0.0)
        : channels(c), height(h), width(w), data(static_cast<std::size_t>(c) * h * w, fill) {}

    std::size_t size() const { return data.size(); }
    std::size_t plane_size() const { return static_cast<std::size_t>(height) * width; }

    double* plane(int c) { return data.data() + static_cast<std::size_t>(c) * plane_size(); }
    const double* plane(int c) const { return data.data() + static_cast<std::size_t>(c) * plane_size(); }

    double& at(int c, int y, int x) { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }
    double at(int c, int y, int x) const { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }

    bool same_shape(const Tensor& o) const {
        return channels == o.channels && height == o.height && width == o.width;
    }

    bool finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

inline void require_shape(const Tensor& t, int c, int h, int w, const char* what) {
    if (t.channels != c || t.height != h || t.width != w)
        throw data_error(std::string(what) + ": expected " + std::to_string(c) + "x" + std::to_string(h) + "x" +
                         std::to_string(w) + " tensor, got " + std::to_string(t.channels) + "x" +
                         std::to_string(t.height) + "x" + std::to_string(t.width));
}

}  // namespace sketchid
