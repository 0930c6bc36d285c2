#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dtn/ml.hpp"
#include "dtn/scenario.hpp"

namespace dtn::ml {

inline constexpr std::array<const char*, 8> kFeatureNames = {
    "btInterface.transmitSpeed",
    "btInterface.transmitRange",
    "Group.bufferSize",
    "Group.waitTime",
    "Group.router",
    "Group.msgTtl",
    "Events1.interval",
    "Events1.size",
};

inline constexpr const char* kTargetDelivery = "delivery_prob";
inline constexpr const char* kTargetOverhead = "overhead_ratio";

/// Sweep results: the eight features plus the two targets. Failed or
/// undefined targets are NaN in the file and dropped by cleaning.
struct Dataset {
  std::vector<std::array<double, 8>> features;
  std::vector<std::optional<double>> delivery_prob;
  std::vector<std::optional<double>> overhead_ratio;

  std::size_t n() const { return features.size(); }

  void append(const sim::ScenarioConfig& cfg, std::optional<double> delivery,
              std::optional<double> overhead);

  /// Rows whose chosen target is defined, as a feature matrix + target
  /// vector. target_name is delivery_prob or overhead_ratio.
  std::pair<Matrix, std::vector<double>> clean(const std::string& target_name) const;

  std::vector<std::optional<double>> target(const std::string& target_name) const;

  /// Header + rows; router serialized as 0/1, undefined targets as NaN.
  void write_csv(std::ostream& out) const;

  /// Requires all ten canonical columns (EventsI.* accepted as an alias for
  /// Events1.*); extra columns such as "sample" are ignored. Unit-tagged
  /// values ("306k") and router tokens are cleaned to numbers.
  static Dataset read_csv(std::istream& in);
  static Dataset read_csv_file(const std::string& path);
};

std::array<double, 8> feature_row(const sim::ScenarioConfig& cfg);
sim::ScenarioConfig scenario_from_features(const std::array<double, 8>& row,
                                           const sim::ScenarioConfig& base);

}  // namespace dtn::ml
