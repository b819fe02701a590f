#pragma once

// Data-parallel inner loops used by the deterministic solvers.
//
// Every kernel has a scalar reference implementation. On x86-64 an AVX2/FMA
// variant is compiled in a separate translation unit and selected at runtime
// when the CPU supports it. Setting SIRLAB_SIMD=scalar in the environment
// forces the reference path.

#include <cstddef>

namespace sirlab::kernels {

/// Per-site reaction inputs/outputs. Outputs are accumulated (+=).
struct ReactionBuffers {
    const double* s;
    const double* i;
    const double* r;
    const double* beta;
    const double* alpha;
    double* ds;
    double* di;
    double* dr;
};

struct KernelTable {
    const char* name;

    // y += a * x
    void (*axpy)(double* y, double a, const double* x, std::size_t n);
    // out = x + a * y
    void (*lincomb)(double* out, const double* x, double a, const double* y, std::size_t n);
    // out = a * x
    void (*scale)(double* out, double a, const double* x, std::size_t n);
    // out *= x (elementwise)
    void (*multiply)(double* out, const double* x, std::size_t n);
    double (*dot)(const double* a, const double* b, std::size_t n);
    double (*sum)(const double* x, std::size_t n);
    double (*max_abs)(const double* x, std::size_t n);
    double (*min_value)(const double* x, std::size_t n);
    // out += scale * (minus - 2 center + plus)
    void (*stencil3)(double* out, const double* minus, const double* center, const double* plus,
                     double scale, std::size_t n);
    // ds -= beta g+, di += beta g+ - alpha i, dr += alpha i
    void (*reaction)(const ReactionBuffers& buf, std::size_t n);
};

const KernelTable& scalar_table();

/// nullptr when the AVX2 variant is not compiled in or the CPU lacks AVX2/FMA.
const KernelTable* avx2_table();

/// The table chosen for this process (resolved once).
const KernelTable& active();

}  // namespace sirlab::kernels
