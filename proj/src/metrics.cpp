#include "dtn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "dtn/kernels.hpp"
#include "dtn/text.hpp"

namespace dtn::metrics {

namespace {

[[noreturn]] void fail(MetricsError::Code code, const std::string& msg) {
  throw MetricsError(code, msg);
}

std::string opt_str(const std::optional<double>& v) {
  return v ? text::format_double(*v) : "NaN";
}

}  // namespace

void SimReport::write_kv(std::ostream& out) const {
  out << "created=" << created << '\n'
      << "delivered=" << delivered << '\n'
      << "relayed=" << relayed << '\n'
      << "dropped=" << dropped << '\n'
      << "aborted=" << aborted << '\n'
      << "expired=" << expired << '\n'
      << "final_buffered=" << final_buffered << '\n'
      << "final_inflight=" << final_inflight << '\n'
      << "final_dead=" << final_dead << '\n'
      << "delivery_prob=" << opt_str(delivery_prob) << '\n'
      << "overhead_ratio=" << opt_str(overhead_ratio) << '\n'
      << "latency_avg=" << opt_str(avg_latency) << '\n';
}

double delivery_probability(std::int64_t received, std::int64_t sent) {
  if (sent <= 0) fail(MetricsError::Code::NoMessagesSent, "no messages sent");
  if (received < 0 || received > sent) {
    fail(MetricsError::Code::InconsistentCounts,
         "received count outside [0, sent]");
  }
  return static_cast<double>(received) / static_cast<double>(sent);
}

double average_latency(const std::vector<std::pair<double, double>>& pairs) {
  if (pairs.empty()) fail(MetricsError::Code::NoDeliveries, "no deliveries");
  // plain left-to-right summation so a direct log-scan oracle matches exactly
  double total = 0;
  for (const auto& [created, received] : pairs) {
    if (received < created) {
      fail(MetricsError::Code::InconsistentCounts,
           "message received before it was created");
    }
    total += received - created;
  }
  return total / static_cast<double>(pairs.size());
}

std::optional<double> overhead_ratio(std::int64_t relayed, std::int64_t delivered) {
  if (relayed < delivered) {
    fail(MetricsError::Code::InconsistentCounts, "relayed < delivered");
  }
  if (delivered == 0) return std::nullopt;
  return static_cast<double>(relayed - delivered) / static_cast<double>(delivered);
}

BoxStats box_stats(std::vector<double> values) {
  if (values.empty()) fail(MetricsError::Code::EmptyInput, "no values");
  std::sort(values.begin(), values.end());
  const auto n = values.size();
  const auto quantile = [&](double p) {
    const double h = p * static_cast<double>(n - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= n) return values[n - 1];
    const double frac = h - static_cast<double>(lo);
    return values[lo] + frac * (values[lo + 1] - values[lo]);
  };
  return BoxStats{values.front(), quantile(0.25), quantile(0.5), quantile(0.75),
                  values.back()};
}

std::vector<std::vector<std::optional<double>>> pearson_matrix(const Table& t) {
  const std::size_t d = t.columns.size();
  std::size_t n = d ? t.columns[0].size() : 0;
  for (const auto& c : t.columns) {
    if (c.size() != n) {
      fail(MetricsError::Code::TooFewRows, "columns differ in length");
    }
  }
  if (n < 2) fail(MetricsError::Code::TooFewRows, "need at least 2 rows");

  // Pre-center every column; a column is flagged constant when its extremes
  // coincide, which keeps the zero-variance case exact.
  std::vector<std::vector<double>> centered(d);
  std::vector<bool> constant(d, false);
  std::vector<double> sd(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    const auto& col = t.columns[j];
    const auto [mn, mx] = std::minmax_element(col.begin(), col.end());
    constant[j] = (*mn == *mx);
    centered[j].resize(n);
    const double mean = kernels::sum(col.data(), n) / static_cast<double>(n);
    kernels::center(centered[j].data(), col.data(), mean, n);
    sd[j] = std::sqrt(kernels::dot(centered[j].data(), centered[j].data(), n) /
                      static_cast<double>(n));
    if (sd[j] == 0.0) constant[j] = true;
  }

  std::vector<std::vector<std::optional<double>>> r(
      d, std::vector<std::optional<double>>(d));
  for (std::size_t i = 0; i < d; ++i) {
    r[i][i] = 1.0;
    for (std::size_t j = i + 1; j < d; ++j) {
      if (constant[i] || constant[j]) continue;
      const double cov =
          kernels::dot(centered[i].data(), centered[j].data(), n) /
          static_cast<double>(n);
      double rij = cov / (sd[i] * sd[j]);
      rij = std::clamp(rij, -1.0, 1.0);
      r[i][j] = rij;
      r[j][i] = rij;
    }
  }
  return r;
}

}  // namespace dtn::metrics
