#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

// Mobility traces in the external-movement format: a six-number offset
// header ("minTime maxTime minX maxX minY maxY") followed by one
// "time id x y" tuple per line. Parsing, writing, GPS conversion and
// synthetic generation all live here.
namespace dtn::trace {

struct TraceSample {
  double time = 0;      // seconds
  std::string node_id;  // opaque token, no whitespace
  double x = 0;         // meters
  double y = 0;         // meters

  friend bool operator==(const TraceSample&, const TraceSample&) = default;
};

struct TraceBounds {
  double min_time = 0, max_time = 0;
  double min_x = 0, max_x = 0;
  double min_y = 0, max_y = 0;

  friend bool operator==(const TraceBounds&, const TraceBounds&) = default;
};

struct GeoBounds {
  double min_lat = 0, max_lat = 0;
  double min_lon = 0, max_lon = 0;
};

/// One raw GPS fix; occupancy is carried through but never used.
struct GeoFix {
  std::string taxi_id;
  double latitude = 0;
  double longitude = 0;
  double unix_time = 0;
  std::optional<bool> occupancy;
};

struct CivilDate {
  int year = 1970;
  int month = 1;  // 1..12
  int day = 1;    // 1..31

  friend bool operator==(const CivilDate&, const CivilDate&) = default;
};

/// Calendar date of a unix timestamp shifted by utc_offset seconds.
CivilDate civil_from_unix(double unix_time, long utc_offset_seconds = 0);

class TraceError : public std::runtime_error {
 public:
  enum class Code {
    MalformedHeader,
    MalformedSample,
    TimeRegression,
    EmptyTrace,
    DegenerateGeoBounds,
    EmptyAfterFilter,
    InvalidRange,
  };

  TraceError(Code code, int line, const std::string& what)
      : std::runtime_error(what), code_(code), line_(line) {}

  Code code() const { return code_; }
  int line() const { return line_; }  // 0 when not tied to a file line

 private:
  Code code_;
  int line_;
};

struct ParsedTrace {
  TraceBounds bounds;
  std::vector<TraceSample> samples;
};

/// Component-wise extremes of a non-empty sample list.
TraceBounds compute_bounds(const std::vector<TraceSample>& samples);

/// Reads header + samples; '#' comment lines and blank lines are skipped.
/// Errors carry the offending 1-based line number.
ParsedTrace parse_external_trace(std::istream& in);

/// Header is recomputed from the samples; samples are emitted sorted by
/// (time, node_id) with shortest-round-trip number formatting.
void write_external_trace(const std::vector<TraceSample>& samples,
                          std::ostream& out);
std::string write_external_trace(const std::vector<TraceSample>& samples);

/// Proportional mapping of the geo box onto [0,world_w]x[0,world_h]. Earth
/// curvature is ignored; only suitable for small regions.
std::pair<double, double> project_linear(double lat, double lon,
                                         const GeoBounds& geo, double world_w,
                                         double world_h);

/// GPS fixes -> external-movement samples: dense integer ids (lexicographic
/// over distinct raw ids), single-day filter, time sort, linear projection,
/// and a seeded synthetic start sample for every node that first appears
/// after the global minimum time.
std::vector<TraceSample> convert_taxi_dataset(const std::vector<GeoFix>& fixes,
                                              const CivilDate& day,
                                              const GeoBounds& geo,
                                              double world_w, double world_h,
                                              std::uint64_t seed,
                                              long utc_offset_seconds = 0);

struct SyntheticTraceSpec {
  int n_nodes = 10;
  double duration = 3600;  // seconds
  double world_w = 1000;   // meters
  double world_h = 1000;
  double speed_min = 0.5, speed_max = 1.5;  // m/s
  double pause_min = 0, pause_max = 60;     // seconds
  double sample_period = 1.0;               // seconds
  std::uint64_t seed = 1;
};

/// Random-waypoint walks sampled on a fixed period, time-major output.
std::vector<TraceSample> generate_synthetic_trace(const SyntheticTraceSpec& spec);

}  // namespace dtn::trace
