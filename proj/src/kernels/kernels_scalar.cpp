#include "sirlab/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sirlab::kernels {
namespace {

void axpy(double* y, double a, const double* x, std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) y[k] += a * x[k];
}

void lincomb(double* out, const double* x, double a, const double* y, std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) out[k] = x[k] + a * y[k];
}

void scale(double* out, double a, const double* x, std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) out[k] = a * x[k];
}

void multiply(double* out, const double* x, std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) out[k] *= x[k];
}

double dot(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) acc += a[k] * b[k];
    return acc;
}

double sum(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) acc += x[k];
    return acc;
}

double max_abs(const double* x, std::size_t n) {
    double m = 0.0;
    for (std::size_t k = 0; k < n; ++k) m = std::max(m, std::fabs(x[k]));
    return m;
}

double min_value(const double* x, std::size_t n) {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) m = std::min(m, x[k]);
    return m;
}

void stencil3(double* out, const double* minus, const double* center, const double* plus,
              double scale_factor, std::size_t n) {
    for (std::size_t k = 0; k < n; ++k)
        out[k] += scale_factor * (minus[k] - 2.0 * center[k] + plus[k]);
}

void reaction(const ReactionBuffers& b, std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
        const double u = std::max(b.s[k], 0.0);
        const double v = std::max(b.i[k], 0.0);
        const double w = std::max(b.r[k], 0.0);
        const double denom = u + v + w;
        const double g = denom > 0.0 ? u * v / denom : 0.0;
        const double infection = b.beta[k] * g;
        const double recovery = b.alpha[k] * b.i[k];
        b.ds[k] -= infection;
        b.di[k] += infection - recovery;
        b.dr[k] += recovery;
    }
}

}  // namespace

const KernelTable& scalar_table() {
    static const KernelTable table{"scalar", axpy,    lincomb,  scale,     multiply, dot,
                                   sum,      max_abs, min_value, stencil3, reaction};
    return table;
}

}  // namespace sirlab::kernels
