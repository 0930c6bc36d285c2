#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dtn::metrics {

class MetricsError : public std::runtime_error {
 public:
  enum class Code {
    NoMessagesSent,
    NoDeliveries,
    InconsistentCounts,
    EmptyInput,
    TooFewRows,
  };

  MetricsError(Code code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  Code code() const { return code_; }

 private:
  Code code_;
};

/// Per-run counters and derived metrics. Undefined ratios (zero deliveries,
/// zero creations) stay empty and serialize as "NaN".
struct SimReport {
  std::int64_t created = 0;
  std::int64_t delivered = 0;  // unique first arrivals at destinations
  std::int64_t relayed = 0;    // every completed transfer
  std::int64_t dropped = 0;
  std::int64_t aborted = 0;
  std::int64_t expired = 0;

  // End-of-run accounting by best-reached state per message,
  // created = delivered + final_buffered + final_inflight + final_dead.
  std::int64_t final_buffered = 0;
  std::int64_t final_inflight = 0;
  std::int64_t final_dead = 0;

  std::optional<double> delivery_prob;
  std::optional<double> overhead_ratio;
  std::optional<double> avg_latency;
  std::vector<double> latencies;

  void write_kv(std::ostream& out) const;
};

/// received / sent; sent must be positive and received <= sent.
double delivery_probability(std::int64_t received, std::int64_t sent);

/// Mean of (received_at - created_at) over (created_at, received_at) pairs.
double average_latency(const std::vector<std::pair<double, double>>& pairs);

/// (relayed - delivered) / delivered; empty when delivered == 0.
std::optional<double> overhead_ratio(std::int64_t relayed, std::int64_t delivered);

struct BoxStats {
  double minimum = 0, q1 = 0, median = 0, q3 = 0, maximum = 0;
};

/// Quartiles by linear interpolation between order statistics (type-7 rule).
BoxStats box_stats(std::vector<double> values);

struct Table {
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;  // equal lengths
};

/// Pearson r with population covariance; symmetric, unit diagonal. Entries
/// involving a constant column are empty rather than NaN.
std::vector<std::vector<std::optional<double>>> pearson_matrix(const Table& t);

}  // namespace dtn::metrics
