#include "dtn/scenario.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "dtn/text.hpp"

namespace dtn::sim {

namespace {

using text::format_double;
using text::parse_double;
using text::trim;

[[noreturn]] void fail(int line, const std::string& msg) {
  throw ConfigError("line " + std::to_string(line) + ": " + msg, line);
}

// Values may carry a unit tag ("306k", "25m", "3076s") and Group.waitTime may
// arrive as a "min,max" pair, of which the first number is taken.
double numeric_value(std::string_view raw, int line) {
  auto v = trim(raw);
  if (const auto comma = v.find(','); comma != std::string_view::npos) {
    v = trim(v.substr(0, comma));
  }
  std::size_t end = v.size();
  while (end > 0 && std::isalpha(static_cast<unsigned char>(v[end - 1]))) --end;
  const auto num = parse_double(v.substr(0, end));
  if (!num) fail(line, "expected a numeric value, got '" + std::string(raw) + "'");
  return *num;
}

bool bool_value(std::string_view raw, int line) {
  const auto v = trim(raw);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  fail(line, "expected true/false, got '" + std::string(raw) + "'");
}

void warn_if_outside(std::vector<std::string>& out, const char* key, double v,
                     double lo, double hi) {
  if (v < lo || v > hi) {
    out.push_back(std::string(key) + "=" + format_double(v) +
                  " outside the studied range [" + format_double(lo) + ", " +
                  format_double(hi) + "]");
  }
}

}  // namespace

const char* router_token(RouterKind k) {
  return k == RouterKind::Epidemic ? "EpidemicRouter" : "MaxPropRouter";
}

void ScenarioConfig::validate() const {
  const auto positive = [](double v, const char* name) {
    if (!(v > 0)) {
      throw ConfigError(std::string(name) + " must be strictly positive");
    }
  };
  positive(transmit_speed, "btInterface.transmitSpeed");
  positive(transmit_range, "btInterface.transmitRange");
  positive(buffer_size, "Group.bufferSize");
  positive(wait_time, "Group.waitTime");
  positive(msg_ttl, "Group.msgTtl");
  positive(event_interval, "Events1.interval");
  positive(event_size, "Events1.size");
  positive(time_step, "Scenario.timeStep");
  if (sim_duration && !(*sim_duration > 0)) {
    throw ConfigError("Scenario.duration must be strictly positive");
  }
  if (event_window) {
    if (event_window->first < 0 || event_window->second < event_window->first) {
      throw ConfigError("Events1.time window must satisfy 0 <= start <= end");
    }
  }
  if (maxprop_hop_threshold && *maxprop_hop_threshold < 0) {
    throw ConfigError("MaxProp.hopThreshold must be non-negative");
  }
}

std::vector<std::string> ScenarioConfig::range_warnings() const {
  std::vector<std::string> w;
  warn_if_outside(w, "btInterface.transmitRange", transmit_range, 10, 30);
  warn_if_outside(w, "btInterface.transmitSpeed", transmit_speed, 125, 375);
  warn_if_outside(w, "Group.bufferSize", buffer_size, 500, 10240);
  warn_if_outside(w, "Group.waitTime", wait_time, 60, 900);
  warn_if_outside(w, "Group.msgTtl", msg_ttl, 1800, 7200);
  warn_if_outside(w, "Events1.interval", event_interval, 5, 15);
  warn_if_outside(w, "Events1.size", event_size, 20, 50);
  return w;
}

SettingsFile parse_settings(std::istream& in) {
  SettingsFile out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) {
      fail(line_no, "expected key=value, got '" + std::string(t) + "'");
    }
    auto key = std::string(trim(t.substr(0, eq)));
    const auto value = trim(t.substr(eq + 1));

    // EventsI.* is accepted as an alias for Events1.*
    if (key.rfind("EventsI.", 0) == 0) key = "Events1." + key.substr(8);

    auto& cfg = out.config;
    if (key == "btInterface.transmitSpeed") {
      cfg.transmit_speed = numeric_value(value, line_no);
    } else if (key == "btInterface.transmitRange") {
      cfg.transmit_range = numeric_value(value, line_no);
    } else if (key == "Group.bufferSize") {
      cfg.buffer_size = numeric_value(value, line_no);
    } else if (key == "Group.waitTime") {
      cfg.wait_time = numeric_value(value, line_no);
    } else if (key == "Group.router") {
      if (value == "EpidemicRouter" || value == "0") {
        cfg.router = RouterKind::Epidemic;
      } else if (value == "MaxPropRouter" || value == "1") {
        cfg.router = RouterKind::MaxProp;
      } else {
        fail(line_no, "unknown router '" + std::string(value) +
                          "' (expected EpidemicRouter or MaxPropRouter)");
      }
    } else if (key == "Group.msgTtl") {
      cfg.msg_ttl = numeric_value(value, line_no);
    } else if (key == "Events1.interval") {
      cfg.event_interval = numeric_value(value, line_no);
    } else if (key == "Events1.size") {
      cfg.event_size = numeric_value(value, line_no);
    } else if (key == "Events1.time") {
      const auto parts = text::split_on(value, ',');
      if (parts.size() != 2) {
        fail(line_no, "Events1.time expects 'start,end'");
      }
      const auto s = parse_double(trim(parts[0]));
      const auto e = parse_double(trim(parts[1]));
      if (!s || !e) fail(line_no, "Events1.time expects numeric 'start,end'");
      cfg.event_window = {{*s, *e}};
    } else if (key == "Scenario.seed") {
      cfg.seed = static_cast<std::uint64_t>(numeric_value(value, line_no));
    } else if (key == "Scenario.timeStep") {
      cfg.time_step = numeric_value(value, line_no);
    } else if (key == "Scenario.duration") {
      cfg.sim_duration = numeric_value(value, line_no);
    } else if (key == "Movement.file") {
      out.movement_file = std::string(value);
    } else if (key == "MaxProp.ackFlooding") {
      cfg.maxprop_ack_flooding = bool_value(value, line_no);
    } else if (key == "MaxProp.hopThreshold") {
      if (value == "auto") {
        cfg.maxprop_hop_threshold.reset();
      } else {
        cfg.maxprop_hop_threshold =
            static_cast<int>(numeric_value(value, line_no));
      }
    } else {
      fail(line_no, "unknown key '" + key + "'");
    }
  }
  out.config.validate();
  return out;
}

SettingsFile parse_settings_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open settings file '" + path + "'");
  return parse_settings(in);
}

void write_settings(const ScenarioConfig& cfg,
                    const std::optional<std::string>& movement_file,
                    std::ostream& out) {
  out << "btInterface.transmitSpeed=" << format_double(cfg.transmit_speed) << '\n'
      << "btInterface.transmitRange=" << format_double(cfg.transmit_range) << '\n'
      << "Group.bufferSize=" << format_double(cfg.buffer_size) << '\n'
      << "Group.waitTime=" << format_double(cfg.wait_time) << '\n'
      << "Group.router=" << router_token(cfg.router) << '\n'
      << "Group.msgTtl=" << format_double(cfg.msg_ttl) << '\n'
      << "Events1.interval=" << format_double(cfg.event_interval) << '\n'
      << "Events1.size=" << format_double(cfg.event_size) << '\n'
      << "Scenario.seed=" << cfg.seed << '\n'
      << "Scenario.timeStep=" << format_double(cfg.time_step) << '\n';
  if (cfg.sim_duration) {
    out << "Scenario.duration=" << format_double(*cfg.sim_duration) << '\n';
  }
  if (cfg.event_window) {
    out << "Events1.time=" << format_double(cfg.event_window->first) << ','
        << format_double(cfg.event_window->second) << '\n';
  }
  if (movement_file) out << "Movement.file=" << *movement_file << '\n';
}

}  // namespace dtn::sim
