#include <doctest.h>

#include <cmath>
#include <map>
#include <sstream>

#include "dtn/engine.hpp"
#include "dtn/routing.hpp"
#include "dtn/rng.hpp"

using namespace dtn::sim;

namespace {

Trace static_pair(double distance) {
  return Trace::from_samples({{0, "a", 0, 0}, {0, "b", distance, 0}});
}

std::string log_text(const RunResult& r, const Trace& t) {
  std::ostringstream os;
  r.log.write_text(os, t.node_names);
  return os.str();
}

// Brute-force recomputation of Eq. 1 / Eq. 2 from the raw event records.
struct LogScan {
  std::int64_t created = 0;
  std::map<int, double> created_at;
  std::map<int, double> delivered_at;

  explicit LogScan(const EventLog& log) {
    for (const auto& e : log.events) {
      if (e.kind == EventKind::Created) {
        ++created;
        created_at[e.msg] = e.time;
      } else if (e.kind == EventKind::Delivered) {
        if (!delivered_at.count(e.msg)) delivered_at[e.msg] = e.time;
      }
    }
  }

  double delivery_prob() const {
    return static_cast<double>(delivered_at.size()) /
           static_cast<double>(created);
  }

  double avg_latency() const {
    double total = 0;
    for (const auto& [msg, t] : delivered_at) total += t - created_at.at(msg);
    return total / static_cast<double>(delivered_at.size());
  }
};

}  // namespace

TEST_CASE("engine: two static nodes in range deliver one message") {
  const auto trace = static_pair(5.0);
  ScenarioConfig cfg;
  cfg.transmit_range = 10;
  cfg.transmit_speed = 250;  // kB/s
  cfg.event_size = 100;      // kB -> 0.4 s on the wire
  cfg.event_interval = 10;
  cfg.event_window = {{10.0, 10.0}};  // exactly one creation
  cfg.msg_ttl = 3600;
  cfg.sim_duration = 60;
  cfg.seed = 3;

  const auto result = run(cfg, trace);
  CHECK(result.report.created == 1);
  CHECK(result.report.delivered == 1);
  REQUIRE(result.report.delivery_prob.has_value());
  CHECK(*result.report.delivery_prob == 1.0);
  REQUIRE(result.report.latencies.size() == 1);
  CHECK(std::abs(result.report.latencies[0] - 0.4) <= cfg.time_step + 1e-9);
}

TEST_CASE("engine: nodes out of range never deliver") {
  const auto trace = static_pair(50.0);
  ScenarioConfig cfg;
  cfg.transmit_range = 10;
  cfg.sim_duration = 120;
  cfg.event_interval = 10;
  const auto result = run(cfg, trace);
  CHECK(result.report.created > 0);
  CHECK(result.report.delivered == 0);
  CHECK(*result.report.delivery_prob == 0.0);
  CHECK(result.report.relayed == 0);
  CHECK(!result.report.overhead_ratio.has_value());
}

TEST_CASE("engine: identical config and trace give byte-identical logs") {
  dtn::trace::SyntheticTraceSpec spec;
  spec.n_nodes = 8;
  spec.duration = 300;
  spec.world_w = 120;
  spec.world_h = 120;
  spec.sample_period = 5;
  spec.seed = 21;
  const auto samples = dtn::trace::generate_synthetic_trace(spec);
  const auto trace = Trace::from_samples(samples);

  for (RouterKind kind : {RouterKind::Epidemic, RouterKind::MaxProp}) {
    ScenarioConfig cfg;
    cfg.router = kind;
    cfg.transmit_range = 30;
    cfg.event_interval = 7;
    cfg.msg_ttl = 200;
    cfg.buffer_size = 1;  // tight, forces drops
    cfg.seed = 5;
    const auto a = run(cfg, trace);
    const auto b = run(cfg, trace);
    CHECK(log_text(a, trace) == log_text(b, trace));
    CHECK(a.final_buffers == b.final_buffers);
  }
}

TEST_CASE("engine: report matches a brute-force log scan") {
  dtn::trace::SyntheticTraceSpec spec;
  spec.n_nodes = 10;
  spec.duration = 400;
  spec.world_w = 150;
  spec.world_h = 150;
  spec.sample_period = 5;
  spec.seed = 33;
  const auto trace = Trace::from_samples(dtn::trace::generate_synthetic_trace(spec));

  ScenarioConfig cfg;
  cfg.transmit_range = 25;
  cfg.event_interval = 6;
  cfg.msg_ttl = 250;
  cfg.seed = 8;
  const auto result = run(cfg, trace);
  REQUIRE(result.report.created > 0);

  const LogScan scan(result.log);
  CHECK(scan.created == result.report.created);
  CHECK(static_cast<std::int64_t>(scan.delivered_at.size()) ==
        result.report.delivered);
  if (result.report.delivered > 0) {
    CHECK(scan.delivery_prob() == *result.report.delivery_prob);
    CHECK(scan.avg_latency() == *result.report.avg_latency);
  }
}

TEST_CASE("engine: accounting identity over random scenarios") {
  dtn::rng::Rng rng(99);
  for (int it = 0; it < 12; ++it) {
    dtn::trace::SyntheticTraceSpec spec;
    spec.n_nodes = 6 + static_cast<int>(rng.below(6));
    spec.duration = 200 + rng.uniform(0, 200);
    spec.world_w = 100;
    spec.world_h = 100;
    spec.sample_period = 5;
    spec.seed = 1000 + static_cast<std::uint64_t>(it);
    const auto trace =
        Trace::from_samples(dtn::trace::generate_synthetic_trace(spec));

    ScenarioConfig cfg;
    cfg.router = (it % 2 == 0) ? RouterKind::Epidemic : RouterKind::MaxProp;
    cfg.transmit_range = rng.uniform(10, 30);
    cfg.transmit_speed = rng.uniform(125, 375);
    cfg.buffer_size = rng.uniform(0.05, 1.0);  // tiny: forces evictions
    cfg.event_interval = rng.uniform(5, 15);
    cfg.event_size = rng.uniform(20, 50);
    cfg.msg_ttl = rng.uniform(60, 400);
    cfg.seed = 77 + static_cast<std::uint64_t>(it);

    const auto result = run(cfg, trace);
    const auto& r = result.report;
    CHECK(r.created == r.delivered + r.final_buffered + r.final_inflight +
                           r.final_dead);
    CHECK(r.relayed >= r.delivered);
    CHECK(r.dropped >= 0);
    CHECK(r.aborted >= 0);
    CHECK(r.expired >= 0);
  }
}

TEST_CASE("engine: delivered records close their paths") {
  dtn::trace::SyntheticTraceSpec spec;
  spec.n_nodes = 10;
  spec.duration = 300;
  spec.world_w = 150;
  spec.world_h = 150;
  spec.sample_period = 5;
  spec.seed = 55;
  const auto trace = Trace::from_samples(dtn::trace::generate_synthetic_trace(spec));
  ScenarioConfig cfg;
  cfg.transmit_range = 28;
  cfg.event_interval = 6;
  cfg.seed = 2;
  const auto result = run(cfg, trace);

  for (const auto& e : result.log.events) {
    if (e.kind == EventKind::Delivered) {
      CHECK(e.to == result.messages[static_cast<std::size_t>(e.msg)].dest);
    }
  }
}

TEST_CASE("engine: connectivity predicate") {
  SUBCASE("boundary distance is linked") {
    const auto links = connectivity({0, 10}, {0, 0}, 10);
    REQUIRE(links.size() == 1);
    CHECK(links[0] == std::pair<int, int>{0, 1});
  }
  SUBCASE("single node yields no links") {
    CHECK(connectivity({5}, {5}, 100).empty());
  }
  SUBCASE("collinear chain links neighbours only") {
    const double r = 10;
    const auto links = connectivity({0, 0.6 * r, 1.2 * r}, {0, 0, 0}, r);
    REQUIRE(links.size() == 2);
    CHECK(links[0] == std::pair<int, int>{0, 1});
    CHECK(links[1] == std::pair<int, int>{1, 2});
  }
}

TEST_CASE("engine: buffer admission") {
  const auto mk = [](int msg, std::int64_t size, double at) {
    Held h;
    h.msg = msg;
    h.size = size;
    h.received_at = at;
    return h;
  };

  SUBCASE("fits without drops") {
    Buffer buf;
    buf.capacity = 100;
    const auto out = buffer_admit(buf, mk(0, 40, 0), {});
    CHECK(out.admitted);
    CHECK(out.evicted.empty());
    CHECK(buf.used == 40);
  }
  SUBCASE("oldest-received evicted first under FIFO order") {
    Buffer buf;
    buf.capacity = 100;
    buffer_admit(buf, mk(0, 50, 0), {});
    buffer_admit(buf, mk(1, 50, 1), {});
    const auto out = buffer_admit(buf, mk(2, 50, 2), {0, 1});
    CHECK(out.admitted);
    REQUIRE(out.evicted.size() == 1);
    CHECK(out.evicted[0].msg == 0);
    CHECK(buf.holds(1));
    CHECK(buf.holds(2));
    CHECK(buf.used == 100);
  }
  SUBCASE("copy larger than the buffer is rejected untouched") {
    Buffer buf;
    buf.capacity = 100;
    buffer_admit(buf, mk(0, 60, 0), {});
    const auto out = buffer_admit(buf, mk(1, 200, 1), {0});
    CHECK(!out.admitted);
    CHECK(out.evicted.empty());
    CHECK(buf.used == 60);
    CHECK(buf.holds(0));
  }
}

TEST_CASE("engine: ttl expiry uses a strict threshold") {
  std::vector<MessageInfo> msgs = {{0, 1, 10, 0.0, 1800.0}};
  Buffer buf;
  buf.capacity = 1000;
  Held h;
  h.msg = 0;
  h.size = 10;
  buffer_admit(buf, h, {});

  CHECK(expire_ttl(buf, 1800.0, msgs).empty());  // boundary: retained
  CHECK(buf.holds(0));
  const auto expired = expire_ttl(buf, 1800.1, msgs);
  REQUIRE(expired.size() == 1);
  CHECK(expired[0].msg == 0);
  CHECK(buf.used == 0);

  Buffer empty;
  empty.capacity = 10;
  CHECK(expire_ttl(empty, 100.0, msgs).empty());
}

TEST_CASE("engine: trace validation errors") {
  CHECK_THROWS_AS(Trace::from_samples({}), EngineError);

  // node "b" first appears after sim start
  const auto trace = Trace::from_samples({{0, "a", 0, 0}, {5, "b", 1, 0}});
  ScenarioConfig cfg;
  cfg.sim_duration = 10;
  try {
    run(cfg, trace);
    FAIL("expected EngineError");
  } catch (const EngineError& e) {
    CHECK(e.code() == EngineError::Code::UnknownNodeInTrace);
  }
}
