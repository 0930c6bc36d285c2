#pragma once

#include <cstddef>
#include <cstdint>

// Internal backend entry points; only kernels.cpp and the per-ISA translation
// units should include this.
namespace dtn::kernels::detail {

double sum_scalar(const double*, std::size_t);
double dot_scalar(const double*, const double*, std::size_t);
double sse_scalar(const double*, const double*, std::size_t);
void sub_scalar(double*, const double*, const double*, std::size_t);
void center_scalar(double*, const double*, double, std::size_t);
void in_range_scalar(const double*, const double*, std::size_t, double, double,
                     double, std::uint8_t*);

bool avx2_compiled();

double sum_avx2(const double*, std::size_t);
double dot_avx2(const double*, const double*, std::size_t);
double sse_avx2(const double*, const double*, std::size_t);
void sub_avx2(double*, const double*, const double*, std::size_t);
void center_avx2(double*, const double*, double, std::size_t);
void in_range_avx2(const double*, const double*, std::size_t, double, double,
                   double, std::uint8_t*);

}  // namespace dtn::kernels::detail
