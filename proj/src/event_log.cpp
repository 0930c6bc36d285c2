#include "dtn/event_log.hpp"

#include <ostream>

#include "dtn/text.hpp"

namespace dtn::sim {

const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::Created: return "created";
    case EventKind::TransferStarted: return "transfer_started";
    case EventKind::Relayed: return "relayed";
    case EventKind::Delivered: return "delivered";
    case EventKind::Dropped: return "dropped";
    case EventKind::Expired: return "expired";
    case EventKind::Aborted: return "aborted";
  }
  return "?";
}

std::string message_label(int msg_index) {
  return "M" + std::to_string(msg_index + 1);
}

void EventLog::write_text(std::ostream& out,
                          const std::vector<std::string>& node_names) const {
  const auto name = [&](int node) -> std::string {
    if (node < 0 || node >= static_cast<int>(node_names.size())) return "-";
    return node_names[node];
  };
  for (const auto& e : events) {
    out << text::format_double(e.time) << ' ' << to_string(e.kind) << ' '
        << message_label(e.msg) << ' ' << name(e.from) << ' ' << name(e.to);
    if (e.acked_drop) out << " acked";
    out << '\n';
  }
}

}  // namespace dtn::sim
