// AVX2 kernel variants. Compiled on x86 only; each function carries the
// target attribute so the rest of the build needs no -mavx2, and callers must
// gate on avx2_supported() before dispatching here. No FMA: mul+add keeps
// results bit-identical to the scalar reference.
#include "kernels_impl.hpp"

#if defined(__x86_64__) || defined(__i386__)

#include <immintrin.h>

namespace dtn::kernels::detail {

bool avx2_compiled() { return true; }

namespace {

// Fixed combine order shared with the scalar reference.
inline double reduce_lanes(const double lane[4]) {
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

}  // namespace

__attribute__((target("avx2"))) double sum_avx2(const double* x,
                                                std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
  double lane[4];
  _mm256_storeu_pd(lane, acc);
  for (; i < n; ++i) lane[i & 3] += x[i];
  return reduce_lanes(lane);
}

__attribute__((target("avx2"))) double dot_avx2(const double* a,
                                                const double* b,
                                                std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d p = _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_add_pd(acc, p);
  }
  double lane[4];
  _mm256_storeu_pd(lane, acc);
  for (; i < n; ++i) lane[i & 3] += a[i] * b[i];
  return reduce_lanes(lane);
}

__attribute__((target("avx2"))) double sse_avx2(const double* a,
                                                const double* b,
                                                std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
  }
  double lane[4];
  _mm256_storeu_pd(lane, acc);
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    lane[i & 3] += d * d;
  }
  return reduce_lanes(lane);
}

__attribute__((target("avx2"))) void sub_avx2(double* dst, const double* a,
                                              const double* b, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(dst + i, _mm256_sub_pd(_mm256_loadu_pd(a + i),
                                            _mm256_loadu_pd(b + i)));
  }
  for (; i < n; ++i) dst[i] = a[i] - b[i];
}

__attribute__((target("avx2"))) void center_avx2(double* dst, const double* x,
                                                 double m, std::size_t n) {
  const __m256d vm = _mm256_set1_pd(m);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(dst + i, _mm256_sub_pd(_mm256_loadu_pd(x + i), vm));
  }
  for (; i < n; ++i) dst[i] = x[i] - m;
}

__attribute__((target("avx2"))) void in_range_avx2(const double* xs,
                                                   const double* ys,
                                                   std::size_t n, double ax,
                                                   double ay, double r2,
                                                   std::uint8_t* out) {
  const __m256d vax = _mm256_set1_pd(ax);
  const __m256d vay = _mm256_set1_pd(ay);
  const __m256d vr2 = _mm256_set1_pd(r2);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(xs + i), vax);
    const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(ys + i), vay);
    const __m256d d2 = _mm256_add_pd(_mm256_mul_pd(dx, dx), _mm256_mul_pd(dy, dy));
    const int mask = _mm256_movemask_pd(_mm256_cmp_pd(d2, vr2, _CMP_LE_OQ));
    out[i + 0] = static_cast<std::uint8_t>(mask & 1);
    out[i + 1] = static_cast<std::uint8_t>((mask >> 1) & 1);
    out[i + 2] = static_cast<std::uint8_t>((mask >> 2) & 1);
    out[i + 3] = static_cast<std::uint8_t>((mask >> 3) & 1);
  }
  for (; i < n; ++i) {
    const double dx = xs[i] - ax;
    const double dy = ys[i] - ay;
    out[i] = (dx * dx + dy * dy <= r2) ? 1 : 0;
  }
}

}  // namespace dtn::kernels::detail

#else

namespace dtn::kernels::detail {

bool avx2_compiled() { return false; }

double sum_avx2(const double*, std::size_t) { return 0; }
double dot_avx2(const double*, const double*, std::size_t) { return 0; }
double sse_avx2(const double*, const double*, std::size_t) { return 0; }
void sub_avx2(double*, const double*, const double*, std::size_t) {}
void center_avx2(double*, const double*, double, std::size_t) {}
void in_range_avx2(const double*, const double*, std::size_t, double, double,
                   double, std::uint8_t*) {}

}  // namespace dtn::kernels::detail

#endif
