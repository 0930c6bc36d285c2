#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace dtn::sim {

enum class EventKind {
  Created,
  TransferStarted,
  Relayed,
  Delivered,
  Dropped,
  Expired,
  Aborted,
};

const char* to_string(EventKind k);

/// One log record; node and message fields are run-local indices, -1 when
/// not applicable. Drops caused by ack purging carry acked_drop.
struct Event {
  double time = 0;
  EventKind kind = EventKind::Created;
  int msg = -1;
  int from = -1;
  int to = -1;
  bool acked_drop = false;

  friend bool operator==(const Event&, const Event&) = default;
};

struct EventLog {
  std::vector<Event> events;

  void append(double time, EventKind kind, int msg, int from, int to,
              bool acked_drop = false) {
    events.push_back(Event{time, kind, msg, from, to, acked_drop});
  }

  /// "t kind msg_id from to" lines, message ids rendered as "M<n>", node
  /// indices as their trace names, "-" for absent fields. Ack-purge drops
  /// carry a trailing "acked" token.
  void write_text(std::ostream& out,
                  const std::vector<std::string>& node_names) const;
};

std::string message_label(int msg_index);  // "M1", "M2", ...

}  // namespace dtn::sim
