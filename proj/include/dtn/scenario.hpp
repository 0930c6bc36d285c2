#pragma once

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dtn::sim {

enum class RouterKind { Epidemic, MaxProp };

const char* router_token(RouterKind k);  // "EpidemicRouter" / "MaxPropRouter"

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, int line = 0)
      : std::runtime_error(what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

/// The eight swept knobs plus engine settings for one run.
struct ScenarioConfig {
  double transmit_speed = 250;  // kB/s
  double transmit_range = 20;   // m
  double buffer_size = 5000;    // MB
  double wait_time = 480;       // s; recorded feature, inert under external traces
  RouterKind router = RouterKind::Epidemic;
  double msg_ttl = 3600;        // s
  double event_interval = 10;   // s between message creations
  double event_size = 35;       // kB
  std::uint64_t seed = 1;
  double time_step = 0.1;       // s
  std::optional<double> sim_duration;  // default: trace max_time - min_time

  // Optional message-creation window relative to sim start (Events1.time).
  std::optional<std::pair<double, double>> event_window;

  // MaxProp options; see MaxPropRouter.
  bool maxprop_ack_flooding = true;
  std::optional<int> maxprop_hop_threshold;  // fixed split; empty = adaptive

  /// Throws ConfigError on hard violations (non-positive knobs).
  void validate() const;

  /// Advisories for knobs outside the studied sweep ranges; never fatal.
  std::vector<std::string> range_warnings() const;

  std::int64_t message_bytes() const {
    return static_cast<std::int64_t>(std::llround(event_size * 1000.0));
  }
  std::int64_t buffer_bytes() const {
    return static_cast<std::int64_t>(std::llround(buffer_size * 1e6));
  }
  double bytes_per_second() const { return transmit_speed * 1000.0; }
};

/// Parsed key=value settings file; Movement.file is carried separately
/// because the engine itself never touches the filesystem.
struct SettingsFile {
  ScenarioConfig config;
  std::optional<std::string> movement_file;
};

/// Line-oriented key=value settings with '#' comments. Unknown keys are
/// rejected with their line number. "EventsI.*" is accepted as an alias for
/// "Events1.*".
SettingsFile parse_settings(std::istream& in);
SettingsFile parse_settings_file(const std::string& path);

void write_settings(const ScenarioConfig& cfg,
                    const std::optional<std::string>& movement_file,
                    std::ostream& out);

}  // namespace dtn::sim
