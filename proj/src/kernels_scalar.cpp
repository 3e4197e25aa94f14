// Scalar reference kernels. These are the correctness baseline the SIMD
// variants are tested against, so they stay in the most literal formulation.

#include "sketchid/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace sketchid {
namespace {

inline int reflect(int i, int n) {
    // Symmetric reflection including the edge sample: -1 -> 0, n -> n-1.
    while (i < 0 || i >= n) {
        if (i < 0) i = -i - 1;
        if (i >= n) i = 2 * n - i - 1;
    }
    return i;
}

void conv3x3_forward(const double* in, int ci_count, int h, int w,
                     const double* weights, const double* bias, int co_count, double* out) {
    for (int co = 0; co < co_count; ++co) {
        double* oplane = out + std::size_t(co) * h * w;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                double acc = bias ? bias[co] : 0.0;
                for (int ci = 0; ci < ci_count; ++ci) {
                    const double* iplane = in + std::size_t(ci) * h * w;
                    const double* wk = weights + (std::size_t(co) * ci_count + ci) * 9;
                    for (int ky = 0; ky < 3; ++ky) {
                        const int iy = y + ky - 1;
                        if (iy < 0 || iy >= h) continue;
                        for (int kx = 0; kx < 3; ++kx) {
                            const int ix = x + kx - 1;
                            if (ix < 0 || ix >= w) continue;
                            acc += wk[ky * 3 + kx] * iplane[std::size_t(iy) * w + ix];
                        }
                    }
                }
                oplane[std::size_t(y) * w + x] = acc;
            }
        }
    }
}

void conv3x3_grad_input(const double* dout, int co_count, int h, int w,
                        const double* weights, int ci_count, double* din) {
    for (int co = 0; co < co_count; ++co) {
        const double* gplane = dout + std::size_t(co) * h * w;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const double g = gplane[std::size_t(y) * w + x];
                for (int ci = 0; ci < ci_count; ++ci) {
                    double* dplane = din + std::size_t(ci) * h * w;
                    const double* wk = weights + (std::size_t(co) * ci_count + ci) * 9;
                    for (int ky = 0; ky < 3; ++ky) {
                        const int iy = y + ky - 1;
                        if (iy < 0 || iy >= h) continue;
                        for (int kx = 0; kx < 3; ++kx) {
                            const int ix = x + kx - 1;
                            if (ix < 0 || ix >= w) continue;
                            dplane[std::size_t(iy) * w + ix] += wk[ky * 3 + kx] * g;
                        }
                    }
                }
            }
        }
    }
}

void conv3x3_grad_params(const double* in, int ci_count, int h, int w,
                         const double* dout, int co_count, double* dweights, double* dbias) {
    for (int co = 0; co < co_count; ++co) {
        const double* gplane = dout + std::size_t(co) * h * w;
        double bacc = 0.0;
        for (std::size_t i = 0; i < std::size_t(h) * w; ++i) bacc += gplane[i];
        dbias[co] += bacc;
        for (int ci = 0; ci < ci_count; ++ci) {
            const double* iplane = in + std::size_t(ci) * h * w;
            double* dwk = dweights + (std::size_t(co) * ci_count + ci) * 9;
            for (int ky = 0; ky < 3; ++ky) {
                for (int kx = 0; kx < 3; ++kx) {
                    double acc = 0.0;
                    for (int y = 0; y < h; ++y) {
                        const int iy = y + ky - 1;
                        if (iy < 0 || iy >= h) continue;
                        for (int x = 0; x < w; ++x) {
                            const int ix = x + kx - 1;
                            if (ix < 0 || ix >= w) continue;
                            acc += gplane[std::size_t(y) * w + x] * iplane[std::size_t(iy) * w + ix];
                        }
                    }
                    dwk[ky * 3 + kx] += acc;
                }
            }
        }
    }
}

void relu_forward(double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward(const double* act, double* grad, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        if (act[i] <= 0.0) grad[i] = 0.0;
}

double dot(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

double sumsq_diff(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scale(double alpha, double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

void sgd_momentum(double* w, double* v, const double* g, double lr, double mu, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        v[i] = mu * v[i] - lr * g[i];
        w[i] += v[i];
    }
}

void blur_rows(const double* in, int h, int w, const double* kernel, int radius, double* out) {
    for (int y = 0; y < h; ++y) {
        const double* irow = in + std::size_t(y) * w;
        double* orow = out + std::size_t(y) * w;
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k) acc += kernel[k + radius] * irow[reflect(x + k, w)];
            orow[x] = acc;
        }
    }
}

void blur_cols(const double* in, int h, int w, const double* kernel, int radius, double* out) {
    for (int y = 0; y < h; ++y) {
        double* orow = out + std::size_t(y) * w;
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k)
                acc += kernel[k + radius] * in[std::size_t(reflect(y + k, h)) * w + x];
            orow[x] = acc;
        }
    }
}

}  // namespace

const Kernels& scalar_kernels() {
    static const Kernels k = {
        "scalar",
        conv3x3_forward,
        conv3x3_grad_input,
        conv3x3_grad_params,
        relu_forward,
        relu_backward,
        dot,
        sumsq_diff,
        axpy,
        scale,
        sgd_momentum,
        blur_rows,
        blur_cols,
    };
    return k;
}

}  // namespace sketchid
