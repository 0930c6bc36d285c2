#include "dtn/kernels.hpp"

#include <stdexcept>

#include "kernels_impl.hpp"

namespace dtn::kernels {
namespace detail {

double sum_scalar(const double* x, std::size_t n) {
  double lane[4] = {0, 0, 0, 0};
  for (std::size_t i = 0; i < n; ++i) lane[i & 3] += x[i];
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double lane[4] = {0, 0, 0, 0};
  for (std::size_t i = 0; i < n; ++i) lane[i & 3] += a[i] * b[i];
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

double sse_scalar(const double* a, const double* b, std::size_t n) {
  double lane[4] = {0, 0, 0, 0};
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    lane[i & 3] += d * d;
  }
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

void sub_scalar(double* dst, const double* a, const double* b, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = a[i] - b[i];
}

void center_scalar(double* dst, const double* x, double m, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = x[i] - m;
}

void in_range_scalar(const double* xs, const double* ys, std::size_t n,
                     double ax, double ay, double r2, std::uint8_t* out) {
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - ax;
    const double dy = ys[i] - ay;
    out[i] = (dx * dx + dy * dy <= r2) ? 1 : 0;
  }
}

}  // namespace detail

namespace {

struct Dispatch {
  Backend backend;
  double (*sum)(const double*, std::size_t);
  double (*dot)(const double*, const double*, std::size_t);
  double (*sse)(const double*, const double*, std::size_t);
  void (*sub)(double*, const double*, const double*, std::size_t);
  void (*center)(double*, const double*, double, std::size_t);
  void (*in_range)(const double*, const double*, std::size_t, double, double,
                   double, std::uint8_t*);
};

constexpr Dispatch kScalar = {Backend::Scalar,
                              detail::sum_scalar,
                              detail::dot_scalar,
                              detail::sse_scalar,
                              detail::sub_scalar,
                              detail::center_scalar,
                              detail::in_range_scalar};

#if defined(__x86_64__) || defined(__i386__)
constexpr Dispatch kAvx2 = {Backend::Avx2,
                            detail::sum_avx2,
                            detail::dot_avx2,
                            detail::sse_avx2,
                            detail::sub_avx2,
                            detail::center_avx2,
                            detail::in_range_avx2};
#endif

Dispatch& active() {
  static Dispatch d = avx2_supported()
#if defined(__x86_64__) || defined(__i386__)
                          ? kAvx2
#else
                          ? kScalar
#endif
                          : kScalar;
  return d;
}

}  // namespace

bool avx2_supported() {
#if defined(__x86_64__) || defined(__i386__)
  return detail::avx2_compiled() && __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Backend active_backend() { return active().backend; }

void set_backend(Backend b) {
  if (b == Backend::Scalar) {
    active() = kScalar;
    return;
  }
#if defined(__x86_64__) || defined(__i386__)
  if (b == Backend::Avx2 && avx2_supported()) {
    active() = kAvx2;
    return;
  }
#endif
  throw std::invalid_argument("requested kernel backend not supported on this host");
}

double sum(const double* x, std::size_t n) { return active().sum(x, n); }

double dot(const double* a, const double* b, std::size_t n) {
  return active().dot(a, b, n);
}

double sse(const double* a, const double* b, std::size_t n) {
  return active().sse(a, b, n);
}

void sub(double* dst, const double* a, const double* b, std::size_t n) {
  active().sub(dst, a, b, n);
}

void center(double* dst, const double* x, double m, std::size_t n) {
  active().center(dst, x, m, n);
}

void in_range(const double* xs, const double* ys, std::size_t n, double ax,
              double ay, double r2, std::uint8_t* out) {
  active().in_range(xs, ys, n, ax, ay, r2, out);
}

}  // namespace dtn::kernels
