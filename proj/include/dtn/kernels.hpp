#pragma once

#include <cstddef>
#include <cstdint>

// Data-parallel inner loops used by the simulation engine (range queries over
// node positions) and the analysis/model code (reductions over sample
// vectors). Each kernel has a scalar reference implementation and an AVX2
// variant; the active backend is chosen once at startup from CPUID and can be
// overridden for testing.
//
// Reductions follow a fixed 4-lane striping contract: lane j accumulates the
// elements whose index is congruent to j mod 4, and the lanes combine as
// (l0 + l1) + (l2 + l3). Both backends implement exactly this order, so their
// results are bit-identical, not merely close.
namespace dtn::kernels {

enum class Backend { Scalar, Avx2 };

bool avx2_supported();
Backend active_backend();
void set_backend(Backend b);  // throws std::invalid_argument if unsupported

double sum(const double* x, std::size_t n);
double dot(const double* a, const double* b, std::size_t n);

/// Sum of squared differences, sum((a[i] - b[i])^2).
double sse(const double* a, const double* b, std::size_t n);

/// dst[i] = a[i] - b[i]; dst may alias a or b.
void sub(double* dst, const double* a, const double* b, std::size_t n);

/// dst[i] = x[i] - m; dst may alias x.
void center(double* dst, const double* x, double m, std::size_t n);

/// out[i] = 1 iff (xs[i]-ax)^2 + (ys[i]-ay)^2 <= r2, else 0.
void in_range(const double* xs, const double* ys, std::size_t n, double ax,
              double ay, double r2, std::uint8_t* out);

}  // namespace dtn::kernels
