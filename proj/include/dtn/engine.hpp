#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "dtn/event_log.hpp"
#include "dtn/metrics.hpp"
#include "dtn/scenario.hpp"
#include "dtn/trace.hpp"

namespace dtn::routing {
class Router;
}

namespace dtn::sim {

class EngineError : public std::runtime_error {
 public:
  enum class Code { EmptyTrace, UnknownNodeInTrace, MessageLargerThanBuffer };

  EngineError(Code code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  Code code() const { return code_; }

 private:
  Code code_;
};

/// Engine-ready trace: node names sorted lexicographically and mapped to
/// dense indices, samples time-sorted.
struct Trace {
  struct Sample {
    double time;
    int node;
    double x, y;
  };

  std::vector<std::string> node_names;
  std::vector<Sample> samples;
  double min_time = 0;
  double max_time = 0;

  int node_count() const { return static_cast<int>(node_names.size()); }

  static Trace from_samples(const std::vector<trace::TraceSample>& samples);
};

/// Immutable per-message facts; per-copy state lives in Held.
struct MessageInfo {
  int src = -1;
  int dest = -1;
  std::int64_t size = 0;  // bytes
  double created_at = 0;
  double ttl = 0;
};

/// One buffered copy of a message at one node.
struct Held {
  int msg = -1;
  std::int64_t size = 0;
  double received_at = 0;
  std::uint64_t seq = 0;  // global receive order, tie-break for FCFS
  int hop_count = 0;      // path.size() - 1
  std::vector<int> path;  // node indices from the source to this holder
};

struct Buffer {
  std::int64_t capacity = 0;  // bytes
  std::int64_t used = 0;
  std::vector<Held> items;

  bool holds(int msg) const;
  const Held* find(int msg) const;
};

struct AdmitOutcome {
  bool admitted = false;
  std::vector<Held> evicted;
};

/// Admits a copy, evicting per drop_order (indices into buf.items, every item
/// exactly once) until it fits. A copy larger than the whole buffer is
/// rejected and the buffer left untouched.
AdmitOutcome buffer_admit(Buffer& buf, Held incoming,
                          const std::vector<int>& drop_order);

/// Removes exactly the copies with now - created_at > ttl; returns them.
std::vector<Held> expire_ttl(Buffer& buf, double now,
                             const std::vector<MessageInfo>& messages);

/// All unordered pairs with Euclidean distance <= range, ascending.
std::vector<std::pair<int, int>> connectivity(const std::vector<double>& xs,
                                              const std::vector<double>& ys,
                                              double range);

struct RunResult {
  metrics::SimReport report;
  EventLog log;
  std::vector<MessageInfo> messages;
  std::vector<std::vector<int>> final_buffers;  // per node, sorted msg ids
};

/// One deterministic time-sliced run; see ScenarioConfig for the knobs.
RunResult run(const ScenarioConfig& cfg, const Trace& trace,
              routing::Router& router);

/// Convenience: builds the router named by cfg.router.
RunResult run(const ScenarioConfig& cfg, const Trace& trace);

}  // namespace dtn::sim
