#include "falldet/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

namespace falldet::kernels {

namespace {

#if defined(__x86_64__) || defined(_M_X64)
bool cpu_has_avx2() {
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}
#else
bool cpu_has_avx2() { return false; }
#endif

Backend pick_default() {
    if (const char* env = std::getenv("FALLDET_SIMD")) {
        if (std::strcmp(env, "scalar") == 0) return Backend::scalar;
        if (std::strcmp(env, "avx2") == 0 && cpu_has_avx2()) {
            return Backend::avx2;
        }
        // "auto" or anything unrecognized falls through to detection.
    }
    return cpu_has_avx2() ? Backend::avx2 : Backend::scalar;
}

std::atomic<Backend>& current() {
    static std::atomic<Backend> backend{pick_default()};
    return backend;
}

}  // namespace

Backend active_backend() { return current().load(std::memory_order_relaxed); }

bool backend_available(Backend b) {
    switch (b) {
        case Backend::scalar: return true;
        case Backend::avx2: return cpu_has_avx2();
    }
    return false;
}

bool set_backend(Backend b) {
    if (!backend_available(b)) return false;
    current().store(b, std::memory_order_relaxed);
    return true;
}

void reset_backend() { current().store(pick_default(), std::memory_order_relaxed); }

const char* backend_name(Backend b) {
    switch (b) {
        case Backend::scalar: return "scalar";
        case Backend::avx2: return "avx2";
    }
    return "unknown";
}

#if defined(__x86_64__) || defined(_M_X64)
#define FALLDET_DISPATCH(call)                                       \
    if (active_backend() == Backend::avx2) return avx2::call;        \
    return scalar::call
#else
#define FALLDET_DISPATCH(call) return scalar::call
#endif

double dot(const double* a, const double* b, std::size_t n) {
    FALLDET_DISPATCH(dot(a, b, n));
}

double squared_distance(const double* a, const double* b, std::size_t n) {
    FALLDET_DISPATCH(squared_distance(a, b, n));
}

double sum(const double* x, std::size_t n) {
    FALLDET_DISPATCH(sum(x, n));
}

void axpy(double a, const double* x, double* y, std::size_t n) {
    FALLDET_DISPATCH(axpy(a, x, y, n));
}

void magnitude3(const double* x, const double* y, const double* z,
                double* out, std::size_t n) {
    FALLDET_DISPATCH(magnitude3(x, y, z, out, n));
}

void normalize(const double* x, const double* mean, const double* inv_std,
               double* out, std::size_t n) {
    FALLDET_DISPATCH(normalize(x, mean, inv_std, out, n));
}

#undef FALLDET_DISPATCH

}  // namespace falldet::kernels
