// AVX2+FMA kernel variants. Convolutions are reformulated as per-tap
// shifted row accumulations so the inner loops are contiguous FMAs; this
// changes summation order relative to the scalar reference, which is why
// cross-backend equivalence is tested to a tolerance rather than bitwise.

#include "sketchid/kernels.hpp"

#if SKETCHID_HAVE_AVX2

#include <immintrin.h>

#include <algorithm>
#include <cstring>

namespace sketchid {
namespace {

inline int reflect(int i, int n) {
    while (i < 0 || i >= n) {
        if (i < 0) i = -i - 1;
        if (i >= n) i = 2 * n - i - 1;
    }
    return i;
}

// dst[i] += c * src[i]
inline void fma_row(double* dst, const double* src, double c, int n) {
    int i = 0;
    const __m256d vc = _mm256_set1_pd(c);
    for (; i + 8 <= n; i += 8) {
        const __m256d d0 = _mm256_loadu_pd(dst + i);
        const __m256d d1 = _mm256_loadu_pd(dst + i + 4);
        const __m256d s0 = _mm256_loadu_pd(src + i);
        const __m256d s1 = _mm256_loadu_pd(src + i + 4);
        _mm256_storeu_pd(dst + i, _mm256_fmadd_pd(s0, vc, d0));
        _mm256_storeu_pd(dst + i + 4, _mm256_fmadd_pd(s1, vc, d1));
    }
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_loadu_pd(dst + i);
        const __m256d s = _mm256_loadu_pd(src + i);
        _mm256_storeu_pd(dst + i, _mm256_fmadd_pd(s, vc, d));
    }
    for (; i < n; ++i) dst[i] += c * src[i];
}

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

inline double dot_row(const double* a, const double* b, int n) {
    int i = 0;
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4) acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    double res = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) res += a[i] * b[i];
    return res;
}

void conv3x3_forward(const double* in, int ci_count, int h, int w,
                     const double* weights, const double* bias, int co_count, double* out) {
    for (int co = 0; co < co_count; ++co) {
        double* oplane = out + std::size_t(co) * h * w;
        const double b = bias ? bias[co] : 0.0;
        for (int y = 0; y < h; ++y) {
            double* orow = oplane + std::size_t(y) * w;
            {
                int i = 0;
                const __m256d vb = _mm256_set1_pd(b);
                for (; i + 4 <= w; i += 4) _mm256_storeu_pd(orow + i, vb);
                for (; i < w; ++i) orow[i] = b;
            }
            for (int ci = 0; ci < ci_count; ++ci) {
                const double* iplane = in + std::size_t(ci) * h * w;
                const double* wk = weights + (std::size_t(co) * ci_count + ci) * 9;
                for (int ky = 0; ky < 3; ++ky) {
                    const int iy = y + ky - 1;
                    if (iy < 0 || iy >= h) continue;
                    const double* irow = iplane + std::size_t(iy) * w;
                    for (int kx = 0; kx < 3; ++kx) {
                        const int dx = kx - 1;
                        const int x0 = std::max(0, -dx);
                        const int x1 = w - std::max(0, dx);
                        if (x1 <= x0) continue;
                        fma_row(orow + x0, irow + x0 + dx, wk[ky * 3 + kx], x1 - x0);
                    }
                }
            }
        }
    }
}

void conv3x3_grad_input(const double* dout, int co_count, int h, int w,
                        const double* weights, int ci_count, double* din) {
    for (int ci = 0; ci < ci_count; ++ci) {
        double* dplane = din + std::size_t(ci) * h * w;
        for (int iy = 0; iy < h; ++iy) {
            double* drow = dplane + std::size_t(iy) * w;
            for (int co = 0; co < co_count; ++co) {
                const double* gplane = dout + std::size_t(co) * h * w;
                const double* wk = weights + (std::size_t(co) * ci_count + ci) * 9;
                for (int ky = 0; ky < 3; ++ky) {
                    const int oy = iy - ky + 1;
                    if (oy < 0 || oy >= h) continue;
                    const double* grow = gplane + std::size_t(oy) * w;
                    for (int kx = 0; kx < 3; ++kx) {
                        const int sh = kx - 1;  // ox = ix - sh
                        const int x0 = std::max(0, sh);
                        const int x1 = w + std::min(0, sh);
                        if (x1 <= x0) continue;
                        fma_row(drow + x0, grow + x0 - sh, wk[ky * 3 + kx], x1 - x0);
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
        {
            const std::size_t n = std::size_t(h) * w;
            std::size_t i = 0;
            __m256d acc = _mm256_setzero_pd();
            for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(gplane + i));
            double s = hsum(acc);
            for (; i < n; ++i) s += gplane[i];
            dbias[co] += s;
        }
        for (int ci = 0; ci < ci_count; ++ci) {
            const double* iplane = in + std::size_t(ci) * h * w;
            double* dwk = dweights + (std::size_t(co) * ci_count + ci) * 9;
            for (int ky = 0; ky < 3; ++ky) {
                for (int kx = 0; kx < 3; ++kx) {
                    const int dx = kx - 1;
                    const int x0 = std::max(0, -dx);
                    const int x1 = w - std::max(0, dx);
                    if (x1 <= x0) continue;
                    double acc = 0.0;
                    for (int y = 0; y < h; ++y) {
                        const int iy = y + ky - 1;
                        if (iy < 0 || iy >= h) continue;
                        acc += dot_row(gplane + std::size_t(y) * w + x0,
                                       iplane + std::size_t(iy) * w + x0 + dx, x1 - x0);
                    }
                    dwk[ky * 3 + kx] += acc;
                }
            }
        }
    }
}

void relu_forward(double* x, std::size_t n) {
    std::size_t i = 0;
    const __m256d zero = _mm256_setzero_pd();
    for (; i + 4 <= n; i += 4) _mm256_storeu_pd(x + i, _mm256_max_pd(_mm256_loadu_pd(x + i), zero));
    for (; i < n; ++i) x[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward(const double* act, double* grad, std::size_t n) {
    std::size_t i = 0;
    const __m256d zero = _mm256_setzero_pd();
    for (; i + 4 <= n; i += 4) {
        const __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(act + i), zero, _CMP_GT_OQ);
        _mm256_storeu_pd(grad + i, _mm256_and_pd(_mm256_loadu_pd(grad + i), mask));
    }
    for (; i < n; ++i)
        if (act[i] <= 0.0) grad[i] = 0.0;
}

double dot(const double* a, const double* b, std::size_t n) { return dot_row(a, b, int(n)); }

double sumsq_diff(const double* a, const double* b, std::size_t n) {
    std::size_t i = 0;
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    for (; i + 8 <= n; i += 8) {
        const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        const __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4));
        acc0 = _mm256_fmadd_pd(d0, d0, acc0);
        acc1 = _mm256_fmadd_pd(d1, d1, acc1);
    }
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        acc0 = _mm256_fmadd_pd(d, d, acc0);
    }
    double res = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) {
        const double d = a[i] - b[i];
        res += d * d;
    }
    return res;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) { fma_row(y, x, alpha, int(n)); }

void scale(double alpha, double* x, std::size_t n) {
    std::size_t i = 0;
    const __m256d va = _mm256_set1_pd(alpha);
    for (; i + 4 <= n; i += 4) _mm256_storeu_pd(x + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), va));
    for (; i < n; ++i) x[i] *= alpha;
}

void sgd_momentum(double* w, double* v, const double* g, double lr, double mu, std::size_t n) {
    std::size_t i = 0;
    const __m256d vmu = _mm256_set1_pd(mu);
    const __m256d vlr = _mm256_set1_pd(-lr);
    for (; i + 4 <= n; i += 4) {
        const __m256d nv = _mm256_fmadd_pd(vmu, _mm256_loadu_pd(v + i),
                                           _mm256_mul_pd(vlr, _mm256_loadu_pd(g + i)));
        _mm256_storeu_pd(v + i, nv);
        _mm256_storeu_pd(w + i, _mm256_add_pd(_mm256_loadu_pd(w + i), nv));
    }
    for (; i < n; ++i) {
        v[i] = mu * v[i] - lr * g[i];
        w[i] += v[i];
    }
}

void blur_rows(const double* in, int h, int w, const double* kernel, int radius, double* out) {
    const int taps = 2 * radius + 1;
    const int interior0 = radius;
    const int interior1 = w - radius;  // exclusive
    for (int y = 0; y < h; ++y) {
        const double* irow = in + std::size_t(y) * w;
        double* orow = out + std::size_t(y) * w;
        if (interior1 > interior0) {
            std::memset(orow + interior0, 0, std::size_t(interior1 - interior0) * sizeof(double));
            for (int t = 0; t < taps; ++t)
                fma_row(orow + interior0, irow + t, kernel[t], interior1 - interior0);
        }
        for (int x = 0; x < std::min(interior0, w); ++x) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k) acc += kernel[k + radius] * irow[reflect(x + k, w)];
            orow[x] = acc;
        }
        for (int x = std::max(interior1, 0); x < w; ++x) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k) acc += kernel[k + radius] * irow[reflect(x + k, w)];
            orow[x] = acc;
        }
    }
}

void blur_cols(const double* in, int h, int w, const double* kernel, int radius, double* out) {
    const int taps = 2 * radius + 1;
    for (int y = 0; y < h; ++y) {
        double* orow = out + std::size_t(y) * w;
        std::memset(orow, 0, std::size_t(w) * sizeof(double));
        for (int t = 0; t < taps; ++t) {
            const int sy = reflect(y + t - radius, h);
            fma_row(orow, in + std::size_t(sy) * w, kernel[t], w);
        }
    }
}

}  // namespace

const Kernels& avx2_kernels() {
    static const Kernels k = {
        "avx2",
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

#endif  // SKETCHID_HAVE_AVX2
