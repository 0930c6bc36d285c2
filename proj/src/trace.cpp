#include "dtn/trace.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "dtn/rng.hpp"
#include "dtn/text.hpp"

namespace dtn::trace {

namespace {

using text::format_double;
using text::parse_double;
using text::split_ws;
using text::trim;

[[noreturn]] void fail(TraceError::Code code, int line, const std::string& msg) {
  throw TraceError(code, line, line > 0 ? "line " + std::to_string(line) + ": " + msg : msg);
}

bool is_skippable(std::string_view line) {
  const auto t = trim(line);
  return t.empty() || t.front() == '#';
}

}  // namespace

CivilDate civil_from_unix(double unix_time, long utc_offset_seconds) {
  const auto secs = static_cast<long long>(std::floor(unix_time)) + utc_offset_seconds;
  long long days = secs / 86400;
  if (secs % 86400 < 0) --days;
  // Howard Hinnant's civil_from_days.
  days += 719468;
  const long long era = (days >= 0 ? days : days - 146096) / 146097;
  const auto doe = static_cast<unsigned long long>(days - era * 146097);
  const unsigned long long yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const long long y = static_cast<long long>(yoe) + era * 400;
  const unsigned long long doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned long long mp = (5 * doy + 2) / 153;
  const unsigned long long d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned long long m = mp < 10 ? mp + 3 : mp - 9;
  return CivilDate{static_cast<int>(y + (m <= 2 ? 1 : 0)), static_cast<int>(m),
                   static_cast<int>(d)};
}

TraceBounds compute_bounds(const std::vector<TraceSample>& samples) {
  if (samples.empty()) {
    fail(TraceError::Code::EmptyTrace, 0, "cannot compute bounds of an empty trace");
  }
  TraceBounds b{samples[0].time, samples[0].time, samples[0].x,
                samples[0].x,    samples[0].y,    samples[0].y};
  for (const auto& s : samples) {
    b.min_time = std::min(b.min_time, s.time);
    b.max_time = std::max(b.max_time, s.time);
    b.min_x = std::min(b.min_x, s.x);
    b.max_x = std::max(b.max_x, s.x);
    b.min_y = std::min(b.min_y, s.y);
    b.max_y = std::max(b.max_y, s.y);
  }
  return b;
}

ParsedTrace parse_external_trace(std::istream& in) {
  ParsedTrace out;
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  double prev_time = 0;

  while (std::getline(in, line)) {
    ++line_no;
    if (is_skippable(line)) continue;
    const auto toks = split_ws(line);

    if (!header_seen) {
      if (toks.size() != 6) {
        fail(TraceError::Code::MalformedHeader, line_no,
             "expected 6 header tokens, got " + std::to_string(toks.size()));
      }
      double v[6];
      for (int i = 0; i < 6; ++i) {
        const auto p = parse_double(toks[i]);
        if (!p) {
          fail(TraceError::Code::MalformedHeader, line_no,
               "non-numeric header token '" + std::string(toks[i]) + "'");
        }
        v[i] = *p;
      }
      out.bounds = TraceBounds{v[0], v[1], v[2], v[3], v[4], v[5]};
      if (v[0] > v[1] || v[2] > v[3] || v[4] > v[5]) {
        fail(TraceError::Code::MalformedHeader, line_no,
             "header minimum exceeds maximum");
      }
      header_seen = true;
      continue;
    }

    if (toks.size() != 4) {
      fail(TraceError::Code::MalformedSample, line_no,
           "expected 4 sample tokens, got " + std::to_string(toks.size()));
    }
    const auto t = parse_double(toks[0]);
    const auto x = parse_double(toks[2]);
    const auto y = parse_double(toks[3]);
    if (!t || !x || !y) {
      fail(TraceError::Code::MalformedSample, line_no,
           "non-numeric time or position token");
    }
    if (!out.samples.empty() && *t < prev_time) {
      fail(TraceError::Code::TimeRegression, line_no,
           "sample time " + format_double(*t) + " precedes previous time " +
               format_double(prev_time));
    }
    prev_time = *t;
    out.samples.push_back(TraceSample{*t, std::string(toks[1]), *x, *y});
  }

  if (!header_seen) {
    fail(TraceError::Code::MalformedHeader, line_no, "missing offset header");
  }
  return out;
}

void write_external_trace(const std::vector<TraceSample>& samples,
                          std::ostream& out) {
  if (samples.empty()) {
    fail(TraceError::Code::EmptyTrace, 0, "refusing to write an empty trace");
  }
  const TraceBounds b = compute_bounds(samples);
  std::vector<const TraceSample*> order;
  order.reserve(samples.size());
  for (const auto& s : samples) order.push_back(&s);
  std::stable_sort(order.begin(), order.end(),
                   [](const TraceSample* a, const TraceSample* c) {
                     if (a->time != c->time) return a->time < c->time;
                     return a->node_id < c->node_id;
                   });

  out << format_double(b.min_time) << ' ' << format_double(b.max_time) << ' '
      << format_double(b.min_x) << ' ' << format_double(b.max_x) << ' '
      << format_double(b.min_y) << ' ' << format_double(b.max_y) << '\n';
  for (const TraceSample* s : order) {
    out << format_double(s->time) << ' ' << s->node_id << ' '
        << format_double(s->x) << ' ' << format_double(s->y) << '\n';
  }
}

std::string write_external_trace(const std::vector<TraceSample>& samples) {
  std::ostringstream os;
  write_external_trace(samples, os);
  return os.str();
}

std::pair<double, double> project_linear(double lat, double lon,
                                         const GeoBounds& geo, double world_w,
                                         double world_h) {
  if (!(geo.max_lat > geo.min_lat) || !(geo.max_lon > geo.min_lon)) {
    fail(TraceError::Code::DegenerateGeoBounds, 0,
         "geographic bounding box has zero extent");
  }
  if (!(world_w > 0) || !(world_h > 0)) {
    fail(TraceError::Code::DegenerateGeoBounds, 0,
         "world dimensions must be positive");
  }
  const double x = (lon - geo.min_lon) / (geo.max_lon - geo.min_lon) * world_w;
  const double y = (lat - geo.min_lat) / (geo.max_lat - geo.min_lat) * world_h;
  return {x, y};
}

std::vector<TraceSample> convert_taxi_dataset(const std::vector<GeoFix>& fixes,
                                              const CivilDate& day,
                                              const GeoBounds& geo,
                                              double world_w, double world_h,
                                              std::uint64_t seed,
                                              long utc_offset_seconds) {
  // Dense integer ids by lexicographic order of the distinct raw ids,
  // assigned over the whole input before any filtering.
  std::set<std::string> distinct;
  for (const auto& f : fixes) distinct.insert(f.taxi_id);
  std::map<std::string, int> code;
  int next = 0;
  for (const auto& id : distinct) code[id] = next++;

  struct Retained {
    double time;
    int node;
    double lat, lon;
  };
  std::vector<Retained> kept;
  for (const auto& f : fixes) {
    if (civil_from_unix(f.unix_time, utc_offset_seconds) == day) {
      kept.push_back(Retained{f.unix_time, code.at(f.taxi_id), f.latitude, f.longitude});
    }
  }
  if (kept.empty()) {
    fail(TraceError::Code::EmptyAfterFilter, 0,
         "no fixes on " + std::to_string(day.year) + "-" +
             std::to_string(day.month) + "-" + std::to_string(day.day));
  }
  std::stable_sort(kept.begin(), kept.end(),
                   [](const Retained& a, const Retained& b) {
                     if (a.time != b.time) return a.time < b.time;
                     return a.node < b.node;
                   });

  const double t0 = kept.front().time;
  std::map<int, double> first_seen;
  for (const auto& r : kept) {
    if (!first_seen.count(r.node)) first_seen[r.node] = r.time;
  }

  std::vector<TraceSample> out;
  out.reserve(kept.size() + first_seen.size());

  // Seeded unique start positions for nodes that enter late.
  rng::Rng rng(seed);
  std::set<std::pair<double, double>> used;
  for (const auto& [node, t] : first_seen) {
    if (t <= t0) continue;
    double sx = 0, sy = 0;
    do {
      sx = rng.uniform(0.0, world_w);
      sy = rng.uniform(0.0, world_h);
    } while (!used.insert({sx, sy}).second);
    out.push_back(TraceSample{t0, std::to_string(node), sx, sy});
  }
  for (const auto& r : kept) {
    const auto [x, y] = project_linear(r.lat, r.lon, geo, world_w, world_h);
    out.push_back(TraceSample{r.time, std::to_string(r.node), x, y});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const TraceSample& a, const TraceSample& b) {
                     if (a.time != b.time) return a.time < b.time;
                     return a.node_id < b.node_id;
                   });
  return out;
}

std::vector<TraceSample> generate_synthetic_trace(const SyntheticTraceSpec& spec) {
  if (spec.n_nodes < 1 || !(spec.duration > 0) || !(spec.sample_period > 0) ||
      !(spec.world_w > 0) || !(spec.world_h > 0) || spec.speed_min < 0 ||
      spec.speed_min > spec.speed_max || spec.pause_min < 0 ||
      spec.pause_min > spec.pause_max) {
    fail(TraceError::Code::InvalidRange, 0, "invalid synthetic trace parameters");
  }

  const auto n_samples =
      static_cast<std::size_t>(std::floor(spec.duration / spec.sample_period)) + 1;

  // One independent waypoint walk per node, evaluated at the sample times.
  std::vector<std::vector<std::pair<double, double>>> tracks(spec.n_nodes);
  for (int node = 0; node < spec.n_nodes; ++node) {
    rng::Rng rng(rng::derive(spec.seed, static_cast<std::uint64_t>(node)));
    double cx = rng.uniform(0.0, spec.world_w);
    double cy = rng.uniform(0.0, spec.world_h);
    auto& track = tracks[node];
    track.reserve(n_samples);

    double t = 0;                  // time already covered by emitted samples
    double seg_end = 0;            // end time of the current segment
    double vx = 0, vy = 0;         // velocity during the current segment
    double sx = cx, sy = cy;       // segment start position
    double seg_start = 0;
    bool paused = true;

    for (std::size_t k = 0; k < n_samples; ++k) {
      const double ts = static_cast<double>(k) * spec.sample_period;
      while (ts > seg_end) {
        // advance to the next segment of the walk
        cx = sx + vx * (seg_end - seg_start);
        cy = sy + vy * (seg_end - seg_start);
        sx = cx;
        sy = cy;
        seg_start = seg_end;
        if (paused) {
          const double wx = rng.uniform(0.0, spec.world_w);
          const double wy = rng.uniform(0.0, spec.world_h);
          const double speed = rng.uniform(spec.speed_min, spec.speed_max);
          const double dist = std::hypot(wx - cx, wy - cy);
          if (speed <= 0 || dist <= 0) {
            // zero-speed node: hold position to the end of the walk
            vx = vy = 0;
            seg_end = spec.duration + spec.sample_period;
          } else {
            vx = (wx - cx) / dist * speed;
            vy = (wy - cy) / dist * speed;
            seg_end = seg_start + dist / speed;
          }
          paused = false;
        } else {
          vx = vy = 0;
          seg_end = seg_start + rng.uniform(spec.pause_min, spec.pause_max);
          paused = true;
        }
      }
      const double px = sx + vx * (ts - seg_start);
      const double py = sy + vy * (ts - seg_start);
      track.push_back({std::clamp(px, 0.0, spec.world_w),
                       std::clamp(py, 0.0, spec.world_h)});
      t = ts;
    }
    (void)t;
  }

  std::vector<TraceSample> out;
  out.reserve(n_samples * static_cast<std::size_t>(spec.n_nodes));
  for (std::size_t k = 0; k < n_samples; ++k) {
    const double ts = static_cast<double>(k) * spec.sample_period;
    // time-major, node ids in lexicographic order to match the writer
    std::vector<int> ids(spec.n_nodes);
    for (int i = 0; i < spec.n_nodes; ++i) ids[i] = i;
    std::sort(ids.begin(), ids.end(), [](int a, int b) {
      return std::to_string(a) < std::to_string(b);
    });
    for (int node : ids) {
      const auto [x, y] = tracks[node][k];
      out.push_back(TraceSample{ts, std::to_string(node), x, y});
    }
  }
  return out;
}

}  // namespace dtn::trace
