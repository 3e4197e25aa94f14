#pragma once

#include <cstddef>
#include <string>

namespace sketchid {

// Arithmetic inner loops used by the conv trunks, the blur stack and the
// optimizer. Every entry has a scalar reference implementation and, on x86
// with AVX2+FMA, a vectorized variant; the variant in use is selected at
// runtime. Backends are equivalence-tested against each other to a floating
// point tolerance; bitwise reproducibility is guaranteed within one backend
// only (summation orders differ between them).
//
// Convolutions are 3x3, stride 1, zero padding, on contiguous CHW planes.
// Weight layout: w[((co * ci_count + ci) * 3 + ky) * 3 + kx].
struct Kernels {
    const char* name;

    // out[co] = bias[co] + sum_ci conv(in[ci], w[co][ci])
    void (*conv3x3_forward)(const double* in, int ci_count, int h, int w,
                            const double* weights, const double* bias, int co_count, double* out);
    // din += correlation of dout with the transposed kernel bank. din must be
    // pre-zeroed (or hold a partial sum being accumulated into).
    void (*conv3x3_grad_input)(const double* dout, int co_count, int h, int w,
                               const double* weights, int ci_count, double* din);
    // dweights/dbias are accumulated into.
    void (*conv3x3_grad_params)(const double* in, int ci_count, int h, int w,
                                const double* dout, int co_count, double* dweights, double* dbias);

    void (*relu_forward)(double* x, std::size_t n);                         // x = max(x, 0), in place
    void (*relu_backward)(const double* act, double* grad, std::size_t n);  // grad *= (act > 0)

    double (*dot)(const double* a, const double* b, std::size_t n);
    double (*sumsq_diff)(const double* a, const double* b, std::size_t n);
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);  // y += alpha * x
    void (*scale)(double alpha, double* x, std::size_t n);

    // v = mu * v - lr * g;  w += v
    void (*sgd_momentum)(double* w, double* v, const double* g, double lr, double mu, std::size_t n);

    // Separable blur passes with symmetric (edge-including) reflection.
    // kernel has 2*radius+1 taps.
    void (*blur_rows)(const double* in, int h, int w, const double* kernel, int radius, double* out);
    void (*blur_cols)(const double* in, int h, int w, const double* kernel, int radius, double* out);
};

const Kernels& scalar_kernels();
#if SKETCHID_HAVE_AVX2
const Kernels& avx2_kernels();
#endif

bool cpu_supports_avx2();

// "auto" picks the best backend the CPU supports. Call before spinning up any
// compute; the selection is process-global.
void select_kernel_backend(const std::string& name);
const Kernels& active_kernels();

}  // namespace sketchid
