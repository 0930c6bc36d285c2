#include <doctest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "dtn/rng.hpp"
#include "dtn/trace.hpp"

using namespace dtn::trace;

namespace {

std::vector<TraceSample> random_trace(dtn::rng::Rng& rng) {
  const int nodes = 1 + static_cast<int>(rng.below(6));
  const int steps = 1 + static_cast<int>(rng.below(20));
  std::vector<TraceSample> out;
  for (int k = 0; k < steps; ++k) {
    for (int node = 0; node < nodes; ++node) {
      out.push_back(TraceSample{static_cast<double>(k) * 0.5,
                                "n" + std::to_string(node),
                                rng.uniform(-500.0, 500.0),
                                rng.uniform(-500.0, 500.0)});
    }
  }
  // normalized order: (time, node_id)
  std::stable_sort(out.begin(), out.end(),
                   [](const TraceSample& a, const TraceSample& b) {
                     if (a.time != b.time) return a.time < b.time;
                     return a.node_id < b.node_id;
                   });
  return out;
}

}  // namespace

TEST_CASE("trace: single-sample file parses to forced bounds") {
  std::istringstream in("5 5 2.0 2.0 3.0 3.0\n5 n1 2.0 3.0\n");
  const auto parsed = parse_external_trace(in);
  CHECK(parsed.bounds == TraceBounds{5, 5, 2, 2, 3, 3});
  REQUIRE(parsed.samples.size() == 1);
  CHECK(parsed.samples[0] == TraceSample{5, "n1", 2.0, 3.0});
}

TEST_CASE("trace: header-only file yields empty sample list") {
  std::istringstream in("0 10 0 1 0 1\n# a comment\n\n");
  const auto parsed = parse_external_trace(in);
  CHECK(parsed.samples.empty());
  CHECK(parsed.bounds.max_time == 10);
}

TEST_CASE("trace: parse errors carry line numbers") {
  SUBCASE("malformed header") {
    std::istringstream in("1 2 3\n");
    try {
      parse_external_trace(in);
      FAIL("expected TraceError");
    } catch (const TraceError& e) {
      CHECK(e.code() == TraceError::Code::MalformedHeader);
      CHECK(e.line() == 1);
    }
  }
  SUBCASE("non-numeric header") {
    std::istringstream in("0 1 0 1 0 oops\n");
    try {
      parse_external_trace(in);
      FAIL("expected TraceError");
    } catch (const TraceError& e) {
      CHECK(e.code() == TraceError::Code::MalformedHeader);
    }
  }
  SUBCASE("malformed sample") {
    std::istringstream in("0 1 0 1 0 1\n# ok\n0 a 1\n");
    try {
      parse_external_trace(in);
      FAIL("expected TraceError");
    } catch (const TraceError& e) {
      CHECK(e.code() == TraceError::Code::MalformedSample);
      CHECK(e.line() == 3);
    }
  }
  SUBCASE("time regression") {
    std::istringstream in("0 1 0 1 0 1\n1 a 0 0\n0.5 b 0 0\n");
    try {
      parse_external_trace(in);
      FAIL("expected TraceError");
    } catch (const TraceError& e) {
      CHECK(e.code() == TraceError::Code::TimeRegression);
      CHECK(e.line() == 3);
    }
  }
}

TEST_CASE("trace: writer emits exact extremes and plain decimals") {
  const std::vector<TraceSample> s = {{0, "a", 1.0, 2.0}, {10, "b", 3.0, 4.0}};
  const auto text = write_external_trace(s);
  CHECK(text == "0 10 1 3 2 4\n0 a 1 2\n10 b 3 4\n");
}

TEST_CASE("trace: write of empty list is refused") {
  CHECK_THROWS_AS(write_external_trace({}), TraceError);
}

TEST_CASE("trace: parse(write(S)) round-trips field-exactly") {
  dtn::rng::Rng rng(11);
  for (int it = 0; it < 50; ++it) {
    const auto s = random_trace(rng);
    std::istringstream in(write_external_trace(s));
    const auto parsed = parse_external_trace(in);
    CHECK(parsed.samples == s);
    CHECK(parsed.bounds == compute_bounds(s));
  }
}

TEST_CASE("trace: projection maps the geo box onto the world rectangle") {
  const GeoBounds geo{37.6, 37.8, -122.5, -122.3};
  const double w = 4000, h = 3000;
  auto [x0, y0] = project_linear(geo.min_lat, geo.min_lon, geo, w, h);
  CHECK(x0 == 0.0);
  CHECK(y0 == 0.0);
  auto [x1, y1] = project_linear(geo.max_lat, geo.max_lon, geo, w, h);
  CHECK(x1 == w);
  CHECK(y1 == h);
  auto [xm, ym] = project_linear((geo.min_lat + geo.max_lat) / 2,
                                 (geo.min_lon + geo.max_lon) / 2, geo, w, h);
  CHECK(xm == doctest::Approx(w / 2).epsilon(1e-12));
  CHECK(ym == doctest::Approx(h / 2).epsilon(1e-12));
  CHECK_THROWS_AS(project_linear(0, 0, GeoBounds{1, 1, 0, 2}, w, h), TraceError);
}

TEST_CASE("trace: taxi conversion filters by day and codes ids densely") {
  // 2008-05-20 ends at unix 1211327999 UTC; 2008-05-21 spans the next day
  const double may20 = 1211300000;
  const double may21 = 1211350000;
  const GeoBounds geo{37.0, 38.0, -123.0, -122.0};
  std::vector<GeoFix> fixes = {
      {"xyz", 37.5, -122.5, may20, {}},
      {"abc", 37.5, -122.5, may21, {}},
      {"xyz", 37.6, -122.4, may21 + 60, {}},
      {"abc", 37.7, -122.3, may21 + 120, {}},
  };
  const auto samples =
      convert_taxi_dataset(fixes, CivilDate{2008, 5, 21}, geo, 1000, 1000, 7);

  // only May-21 fixes survive; ids dense by lexicographic raw order
  std::set<std::string> ids;
  for (const auto& s : samples) ids.insert(s.node_id);
  CHECK(ids == std::set<std::string>{"0", "1"});

  // every node has a sample at the global minimum time
  const double t0 = samples.front().time;
  std::set<std::string> at_start;
  for (const auto& s : samples) {
    if (s.time == t0) at_start.insert(s.node_id);
  }
  CHECK(at_start == ids);

  // time-sorted
  for (std::size_t i = 1; i < samples.size(); ++i) {
    CHECK(samples[i - 1].time <= samples[i].time);
  }

  // "xyz" first appears after t0, so it got a synthetic start sample; "abc"
  // ("0") did not need one
  int zero_at_start = 0;
  for (const auto& s : samples) {
    if (s.time == t0 && s.node_id == "0") ++zero_at_start;
  }
  CHECK(zero_at_start == 1);
  CHECK(samples.size() == 4);  // 3 retained fixes + 1 synthetic
}

TEST_CASE("trace: conversion with both taxis at the start adds nothing") {
  const double t = 1211350000;
  const GeoBounds geo{37.0, 38.0, -123.0, -122.0};
  std::vector<GeoFix> fixes = {
      {"a", 37.2, -122.8, t, {}},
      {"b", 37.3, -122.7, t, {}},
      {"a", 37.4, -122.6, t + 10, {}},
  };
  const auto samples =
      convert_taxi_dataset(fixes, CivilDate{2008, 5, 21}, geo, 100, 100, 1);
  CHECK(samples.size() == 3);
}

TEST_CASE("trace: conversion on a day with no fixes fails") {
  std::vector<GeoFix> fixes = {{"a", 37.2, -122.8, 1211350000, {}}};
  const GeoBounds geo{37.0, 38.0, -123.0, -122.0};
  try {
    convert_taxi_dataset(fixes, CivilDate{2009, 1, 1}, geo, 100, 100, 1);
    FAIL("expected TraceError");
  } catch (const TraceError& e) {
    CHECK(e.code() == TraceError::Code::EmptyAfterFilter);
  }
}

TEST_CASE("trace: civil date conversion") {
  CHECK(civil_from_unix(0) == CivilDate{1970, 1, 1});
  CHECK(civil_from_unix(86399) == CivilDate{1970, 1, 1});
  CHECK(civil_from_unix(86400) == CivilDate{1970, 1, 2});
  CHECK(civil_from_unix(1211328000) == CivilDate{2008, 5, 21});
  CHECK(civil_from_unix(1211328000, -3600) == CivilDate{2008, 5, 20});
}

TEST_CASE("trace: synthetic generation is deterministic and in-bounds") {
  SyntheticTraceSpec spec;
  spec.n_nodes = 20;
  spec.duration = 3600;
  spec.world_w = 500;
  spec.world_h = 400;
  spec.sample_period = 10;
  spec.seed = 99;
  const auto a = generate_synthetic_trace(spec);
  const auto b = generate_synthetic_trace(spec);
  CHECK(a == b);

  std::set<std::string> ids;
  for (const auto& s : a) {
    ids.insert(s.node_id);
    CHECK(s.x >= 0);
    CHECK(s.x <= spec.world_w);
    CHECK(s.y >= 0);
    CHECK(s.y <= spec.world_h);
  }
  CHECK(ids.size() == 20);
  CHECK(a.size() == 20 * 361);

  // writer round trip holds for generated traces
  std::istringstream in(write_external_trace(a));
  CHECK(parse_external_trace(in).samples == a);
}

TEST_CASE("trace: zero-speed node never moves") {
  SyntheticTraceSpec spec;
  spec.n_nodes = 1;
  spec.duration = 100;
  spec.sample_period = 5;
  spec.speed_min = 0;
  spec.speed_max = 0;
  const auto samples = generate_synthetic_trace(spec);
  REQUIRE(!samples.empty());
  for (const auto& s : samples) {
    CHECK(s.x == samples[0].x);
    CHECK(s.y == samples[0].y);
  }
}

TEST_CASE("trace: invalid synthetic parameters are rejected") {
  SyntheticTraceSpec spec;
  spec.speed_min = 2;
  spec.speed_max = 1;
  CHECK_THROWS_AS(generate_synthetic_trace(spec), TraceError);
}
