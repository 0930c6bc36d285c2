#include <doctest.h>

#include <cmath>
#include <vector>

#include "dtn/kernels.hpp"
#include "dtn/rng.hpp"

namespace k = dtn::kernels;

namespace {

std::vector<double> random_vec(dtn::rng::Rng& rng, std::size_t n, double lo,
                               double hi) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

struct BackendGuard {
  k::Backend saved = k::active_backend();
  ~BackendGuard() { k::set_backend(saved); }
};

}  // namespace

TEST_CASE("kernels: scalar and avx2 backends agree bit-exactly") {
  if (!k::avx2_supported()) {
    MESSAGE("AVX2 unavailable on this host; dispatch stays scalar");
    return;
  }
  BackendGuard guard;
  dtn::rng::Rng rng(42);
  // lengths straddling the 4-lane width, including remainders
  for (std::size_t n : {0u, 1u, 2u, 3u, 4u, 5u, 7u, 8u, 15u, 64u, 1001u}) {
    const auto a = random_vec(rng, n, -100.0, 100.0);
    const auto b = random_vec(rng, n, -100.0, 100.0);

    k::set_backend(k::Backend::Scalar);
    const double sum_s = k::sum(a.data(), n);
    const double dot_s = k::dot(a.data(), b.data(), n);
    const double sse_s = k::sse(a.data(), b.data(), n);
    std::vector<double> sub_s(n), cen_s(n);
    k::sub(sub_s.data(), a.data(), b.data(), n);
    k::center(cen_s.data(), a.data(), 3.25, n);
    std::vector<std::uint8_t> in_s(n);
    k::in_range(a.data(), b.data(), n, 1.5, -2.5, 900.0, in_s.data());

    k::set_backend(k::Backend::Avx2);
    CHECK(k::sum(a.data(), n) == sum_s);
    CHECK(k::dot(a.data(), b.data(), n) == dot_s);
    CHECK(k::sse(a.data(), b.data(), n) == sse_s);
    std::vector<double> sub_v(n), cen_v(n);
    k::sub(sub_v.data(), a.data(), b.data(), n);
    k::center(cen_v.data(), a.data(), 3.25, n);
    CHECK(sub_v == sub_s);
    CHECK(cen_v == cen_s);
    std::vector<std::uint8_t> in_v(n);
    k::in_range(a.data(), b.data(), n, 1.5, -2.5, 900.0, in_v.data());
    CHECK(in_v == in_s);
  }
}

TEST_CASE("kernels: reductions match naive summation closely") {
  dtn::rng::Rng rng(7);
  const auto a = random_vec(rng, 513, -1.0, 1.0);
  const auto b = random_vec(rng, 513, -1.0, 1.0);
  double naive_sum = 0, naive_dot = 0, naive_sse = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    naive_sum += a[i];
    naive_dot += a[i] * b[i];
    const double d = a[i] - b[i];
    naive_sse += d * d;
  }
  CHECK(k::sum(a.data(), a.size()) == doctest::Approx(naive_sum).epsilon(1e-12));
  CHECK(k::dot(a.data(), b.data(), a.size()) ==
        doctest::Approx(naive_dot).epsilon(1e-12));
  CHECK(k::sse(a.data(), b.data(), a.size()) ==
        doctest::Approx(naive_sse).epsilon(1e-12));
}

TEST_CASE("kernels: in_range boundary is inclusive") {
  const double xs[] = {3.0, 4.0, 5.0};
  const double ys[] = {4.0, 3.0, 0.1};
  std::uint8_t out[3];
  k::in_range(xs, ys, 3, 0.0, 0.0, 25.0, out);  // range 5
  CHECK(out[0] == 1);  // distance exactly 5
  CHECK(out[1] == 1);
  CHECK(out[2] == 0);  // just outside
}
