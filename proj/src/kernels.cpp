#include "sketchid/kernels.hpp"

#include <atomic>

#include "sketchid/errors.hpp"

namespace sketchid {

bool cpu_supports_avx2() {
#if SKETCHID_HAVE_AVX2 && defined(__GNUC__)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

namespace {

const Kernels* best_available() {
#if SKETCHID_HAVE_AVX2
    if (cpu_supports_avx2()) return &avx2_kernels();
#endif
    return &scalar_kernels();
}

std::atomic<const Kernels*> g_active{nullptr};

}  // namespace

void select_kernel_backend(const std::string& name) {
    if (name == "auto") {
        g_active.store(best_available());
    } else if (name == "scalar") {
        g_active.store(&scalar_kernels());
    } else if (name == "avx2") {
#if SKETCHID_HAVE_AVX2
        if (!cpu_supports_avx2()) throw usage_error("kernel backend 'avx2' not supported by this CPU");
        g_active.store(&avx2_kernels());
#else
        throw usage_error("kernel backend 'avx2' not compiled in");
#endif
    } else {
        throw usage_error("unknown kernel backend '" + name + "' (expected auto, scalar or avx2)");
    }
}

const Kernels& active_kernels() {
    const Kernels* k = g_active.load();
    if (!k) {
        k = best_available();
        g_active.store(k);
    }
    return *k;
}

}  // namespace sketchid
