#include "falldet/kernels.hpp"

#include <cmath>

namespace falldet::kernels::scalar {

double dot(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

double squared_distance(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

double sum(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i];
    return acc;
}

void axpy(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void magnitude3(const double* x, const double* y, const double* z,
                double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = std::sqrt(x[i] * x[i] + y[i] * y[i] + z[i] * z[i]);
    }
}

void normalize(const double* x, const double* mean, const double* inv_std,
               double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = (x[i] - mean[i]) * inv_std[i];
    }
}

}  // namespace falldet::kernels::scalar
