#pragma once

#include <cstddef>

// Numeric inner loops used across the library: distance and dot products for
// the classifiers, magnitude and normalization passes for the signal stages.
// Each kernel has a scalar reference implementation and, on x86-64, an AVX2
// variant. The unqualified entry points dispatch at runtime; the backend can
// be forced with set_backend() or the FALLDET_SIMD environment variable
// (auto | scalar | avx2). Both variants must agree to within floating-point
// reassociation error; the test suite checks them against each other.

namespace falldet::kernels {

enum class Backend { scalar, avx2 };

/// Backend currently used by the dispatched entry points.
Backend active_backend();

/// True if the given backend can run on this machine.
bool backend_available(Backend b);

/// Force a backend. Returns false (and leaves the selection unchanged) if it
/// is not available here.
bool set_backend(Backend b);

/// Re-read FALLDET_SIMD and the CPU features, restoring the default choice.
void reset_backend();

const char* backend_name(Backend b);

double dot(const double* a, const double* b, std::size_t n);
double squared_distance(const double* a, const double* b, std::size_t n);
double sum(const double* x, std::size_t n);

/// y += a * x
void axpy(double a, const double* x, double* y, std::size_t n);

/// out[i] = sqrt(x[i]^2 + y[i]^2 + z[i]^2)
void magnitude3(const double* x, const double* y, const double* z,
                double* out, std::size_t n);

/// out[i] = (x[i] - mean[i]) * inv_std[i]
void normalize(const double* x, const double* mean, const double* inv_std,
               double* out, std::size_t n);

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
double squared_distance(const double* a, const double* b, std::size_t n);
double sum(const double* x, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n);
void magnitude3(const double* x, const double* y, const double* z,
                double* out, std::size_t n);
void normalize(const double* x, const double* mean, const double* inv_std,
               double* out, std::size_t n);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
double squared_distance(const double* a, const double* b, std::size_t n);
double sum(const double* x, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n);
void magnitude3(const double* x, const double* y, const double* z,
                double* out, std::size_t n);
void normalize(const double* x, const double* mean, const double* inv_std,
               double* out, std::size_t n);
}  // namespace avx2
#endif

}  // namespace falldet::kernels
