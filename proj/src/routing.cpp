#include "dtn/routing.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

#include "dtn/kernels.hpp"

namespace dtn::routing {

namespace {

// FCFS view of a buffer: (received_at, msg id) ascending.
std::vector<const sim::Held*> fcfs_order(const sim::Buffer& buf) {
  std::vector<const sim::Held*> order;
  order.reserve(buf.items.size());
  for (const auto& h : buf.items) order.push_back(&h);
  std::stable_sort(order.begin(), order.end(),
                   [](const sim::Held* a, const sim::Held* b) {
                     if (a->received_at != b->received_at) {
                       return a->received_at < b->received_at;
                     }
                     return a->msg < b->msg;
                   });
  return order;
}

std::vector<bool> held_mask(const sim::Buffer& buf, int n_messages) {
  std::vector<bool> mask(static_cast<std::size_t>(n_messages), false);
  for (const auto& h : buf.items) mask[static_cast<std::size_t>(h.msg)] = true;
  return mask;
}

}  // namespace

std::pair<std::vector<int>, std::vector<int>> epidemic_exchange(
    const sim::Buffer& a, const sim::Buffer& b) {
  int max_msg = -1;
  for (const auto& h : a.items) max_msg = std::max(max_msg, h.msg);
  for (const auto& h : b.items) max_msg = std::max(max_msg, h.msg);
  const auto in_a = held_mask(a, max_msg + 1);
  const auto in_b = held_mask(b, max_msg + 1);

  std::pair<std::vector<int>, std::vector<int>> out;
  for (const auto* h : fcfs_order(a)) {
    if (!in_b[static_cast<std::size_t>(h->msg)]) out.first.push_back(h->msg);
  }
  for (const auto* h : fcfs_order(b)) {
    if (!in_a[static_cast<std::size_t>(h->msg)]) out.second.push_back(h->msg);
  }
  return out;
}

std::vector<int> EpidemicRouter::select_transfers(int from, int to) {
  const auto& sender = (*world_.buffers)[static_cast<std::size_t>(from)];
  const auto& peer = (*world_.buffers)[static_cast<std::size_t>(to)];
  std::vector<int> out;
  for (const auto* h : fcfs_order(sender)) {
    if (!peer.holds(h->msg)) out.push_back(h->msg);
  }
  return out;
}

std::vector<int> EpidemicRouter::drop_order(int node) {
  const auto& buf = (*world_.buffers)[static_cast<std::size_t>(node)];
  std::vector<int> out;
  for (const auto* h : fcfs_order(buf)) out.push_back(h->msg);
  return out;  // oldest-received first
}

MaxPropState MaxPropState::uniform(int self, int n) {
  MaxPropState s;
  s.self = self;
  s.likelihood.assign(static_cast<std::size_t>(n), 0.0);
  if (n > 1) {
    const double p = 1.0 / static_cast<double>(n - 1);
    for (int j = 0; j < n; ++j) {
      if (j != self) s.likelihood[static_cast<std::size_t>(j)] = p;
    }
  }
  return s;
}

void MaxPropState::meet_update(int met) {
  if (met == self) {
    throw RoutingError(RoutingError::Code::SelfMeeting,
                       "node cannot meet itself");
  }
  assert(met >= 0 && met < static_cast<int>(likelihood.size()));
  likelihood[static_cast<std::size_t>(met)] += 1.0;
  const double total = kernels::sum(likelihood.data(), likelihood.size());
  for (auto& f : likelihood) f /= total;
  ++version;
}

void MaxPropState::record_contact_bytes(double bytes) {
  ++contact_count;
  avg_transfer_bytes += (bytes - avg_transfer_bytes) /
                        static_cast<double>(contact_count);
}

std::vector<double> maxprop_costs_from(
    const std::vector<std::optional<std::vector<double>>>& tables, int src) {
  const auto n = static_cast<int>(tables.size());
  assert(src >= 0 && src < n);
  std::vector<double> dist(static_cast<std::size_t>(n), kUnreachable);
  std::vector<bool> done(static_cast<std::size_t>(n), false);
  dist[static_cast<std::size_t>(src)] = 0.0;
  for (int round = 0; round < n; ++round) {
    int u = -1;
    double best = kUnreachable;
    for (int i = 0; i < n; ++i) {
      if (!done[static_cast<std::size_t>(i)] &&
          dist[static_cast<std::size_t>(i)] < best) {
        best = dist[static_cast<std::size_t>(i)];
        u = i;
      }
    }
    if (u < 0) break;
    done[static_cast<std::size_t>(u)] = true;
    const auto& table = tables[static_cast<std::size_t>(u)];
    if (!table) continue;  // unknown peer: no outgoing edges
    for (int v = 0; v < n; ++v) {
      if (v == u || done[static_cast<std::size_t>(v)]) continue;
      const double w = 1.0 - (*table)[static_cast<std::size_t>(v)];
      const double cand = dist[static_cast<std::size_t>(u)] + w;
      if (cand < dist[static_cast<std::size_t>(v)]) {
        dist[static_cast<std::size_t>(v)] = cand;
      }
    }
  }
  return dist;
}

double maxprop_path_cost(
    const std::vector<std::optional<std::vector<double>>>& tables, int src,
    int dest) {
  assert(src != dest);
  return maxprop_costs_from(tables, src)[static_cast<std::size_t>(dest)];
}

PriorityOrder maxprop_priority(const std::vector<PriorityItem>& items,
                               int threshold_p) {
  std::vector<const PriorityItem*> low, high;
  for (const auto& it : items) {
    (it.hop_count < threshold_p ? low : high).push_back(&it);
  }
  // low-hop segment: hop ascending, newer creation first, then id
  std::stable_sort(low.begin(), low.end(),
                   [](const PriorityItem* a, const PriorityItem* b) {
                     if (a->hop_count != b->hop_count) {
                       return a->hop_count < b->hop_count;
                     }
                     if (a->created_at != b->created_at) {
                       return a->created_at > b->created_at;
                     }
                     return a->msg < b->msg;
                   });
  // remainder: ascending path cost, ties by id
  std::stable_sort(high.begin(), high.end(),
                   [](const PriorityItem* a, const PriorityItem* b) {
                     if (a->cost != b->cost) return a->cost < b->cost;
                     return a->msg < b->msg;
                   });

  PriorityOrder order;
  order.transmit.reserve(items.size());
  for (const auto* it : low) order.transmit.push_back(it->msg);
  for (const auto* it : high) order.transmit.push_back(it->msg);
  order.drop.assign(order.transmit.rbegin(), order.transmit.rend());
  return order;
}

int adaptive_hop_threshold(const std::vector<PriorityItem>& items,
                           double cap_bytes) {
  std::vector<std::pair<int, std::int64_t>> by_hop;  // (hop, bytes at hop)
  for (const auto& it : items) by_hop.emplace_back(it.hop_count, it.size);
  std::sort(by_hop.begin(), by_hop.end());
  int p = 0;
  double cum = 0;
  std::size_t i = 0;
  while (i < by_hop.size()) {
    const int hop = by_hop[i].first;
    double level = 0;
    for (; i < by_hop.size() && by_hop[i].first == hop; ++i) {
      level += static_cast<double>(by_hop[i].second);
    }
    if (cum + level > cap_bytes) break;
    cum += level;
    p = hop + 1;
  }
  return p;
}

void MaxPropRouter::on_start(const WorldView& world) {
  Router::on_start(world);
  const int n = world.node_count;
  up_links_.clear();
  states_.clear();
  states_.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) states_.push_back(MaxPropState::uniform(i, n));
  purge_clean_.assign(static_cast<std::size_t>(n), true);
  tables_.assign(static_cast<std::size_t>(n),
                 std::vector<std::optional<std::vector<double>>>(
                     static_cast<std::size_t>(n)));
  table_versions_.assign(static_cast<std::size_t>(n),
                         std::vector<std::uint64_t>(static_cast<std::size_t>(n), 0));
}

void MaxPropRouter::learn_ack(int node, int msg) {
  auto& st = states_[static_cast<std::size_t>(node)];
  if (st.acked.insert(msg).second) {
    ++st.ack_epoch;
    purge_clean_[static_cast<std::size_t>(node)] = false;
  }
}

void MaxPropRouter::merge_acks(int a, int b) {
  auto& sa = states_[static_cast<std::size_t>(a)];
  auto& sb = states_[static_cast<std::size_t>(b)];
  if (sa.acked == sb.acked) return;
  const auto na = sa.acked.size();
  sa.acked.insert(sb.acked.begin(), sb.acked.end());
  if (sa.acked.size() != na) {
    ++sa.ack_epoch;
    purge_clean_[static_cast<std::size_t>(a)] = false;
  }
  if (sb.acked.size() != sa.acked.size()) {
    sb.acked = sa.acked;
    ++sb.ack_epoch;
    purge_clean_[static_cast<std::size_t>(b)] = false;
  }
}

void MaxPropRouter::on_link_up(int a, int b) {
  up_links_[{std::min(a, b), std::max(a, b)}] = {0, 0};
  auto& sa = states_[static_cast<std::size_t>(a)];
  auto& sb = states_[static_cast<std::size_t>(b)];
  sa.meet_update(b);
  sb.meet_update(a);

  // refresh own snapshots, then both sides keep the newest copy per owner
  const auto ua = static_cast<std::size_t>(a);
  const auto ub = static_cast<std::size_t>(b);
  tables_[ua][ua] = sa.likelihood;
  table_versions_[ua][ua] = sa.version;
  tables_[ub][ub] = sb.likelihood;
  table_versions_[ub][ub] = sb.version;
  const auto n = static_cast<std::size_t>(world_.node_count);
  for (std::size_t o = 0; o < n; ++o) {
    if (table_versions_[ua][o] > table_versions_[ub][o]) {
      tables_[ub][o] = tables_[ua][o];
      table_versions_[ub][o] = table_versions_[ua][o];
    } else if (table_versions_[ub][o] > table_versions_[ua][o]) {
      tables_[ua][o] = tables_[ub][o];
      table_versions_[ua][o] = table_versions_[ub][o];
    }
  }

  if (ack_flooding_) merge_acks(a, b);
}

void MaxPropRouter::on_link_down(int a, int b, double bytes_moved) {
  up_links_.erase({std::min(a, b), std::max(a, b)});
  states_[static_cast<std::size_t>(a)].record_contact_bytes(bytes_moved);
  states_[static_cast<std::size_t>(b)].record_contact_bytes(bytes_moved);
}

std::vector<double> MaxPropRouter::costs_from(int node) const {
  auto view = tables_[static_cast<std::size_t>(node)];
  view[static_cast<std::size_t>(node)] =
      states_[static_cast<std::size_t>(node)].likelihood;
  return maxprop_costs_from(view, node);
}

std::vector<PriorityItem> MaxPropRouter::prioritized(int node,
                                                     double& cap_bytes) const {
  const auto& buf = (*world_.buffers)[static_cast<std::size_t>(node)];
  const auto& msgs = *world_.messages;
  const auto costs = costs_from(node);
  std::vector<PriorityItem> items;
  items.reserve(buf.items.size());
  for (const auto& h : buf.items) {
    const auto& info = msgs[static_cast<std::size_t>(h.msg)];
    PriorityItem it;
    it.msg = h.msg;
    it.hop_count = h.hop_count;
    it.created_at = info.created_at;
    it.size = h.size;
    it.cost = info.dest == node ? 0.0
                                : costs[static_cast<std::size_t>(info.dest)];
    items.push_back(it);
  }
  const auto& st = states_[static_cast<std::size_t>(node)];
  cap_bytes = std::min(st.avg_transfer_bytes,
                       static_cast<double>(buf.capacity) / 2.0);
  return items;
}

std::vector<int> MaxPropRouter::select_transfers(int from, int to) {
  const auto& peer = (*world_.buffers)[static_cast<std::size_t>(to)];
  const auto& st = states_[static_cast<std::size_t>(from)];
  double cap = 0;
  auto items = prioritized(from, cap);
  items.erase(std::remove_if(items.begin(), items.end(),
                             [&](const PriorityItem& it) {
                               return peer.holds(it.msg) ||
                                      st.acked.count(it.msg) > 0;
                             }),
              items.end());
  const int p = fixed_threshold_ ? *fixed_threshold_
                                 : adaptive_hop_threshold(items, cap);
  return maxprop_priority(items, p).transmit;
}

std::vector<int> MaxPropRouter::drop_order(int node) {
  double cap = 0;
  auto items = prioritized(node, cap);
  const int p = fixed_threshold_ ? *fixed_threshold_
                                 : adaptive_hop_threshold(items, cap);
  return maxprop_priority(items, p).drop;
}

void MaxPropRouter::on_delivered(int msg, int dest, int relayer) {
  // the delivering contact learns the ack on both ends
  learn_ack(dest, msg);
  learn_ack(relayer, msg);
}

void MaxPropRouter::on_received(int node, int msg) {
  (void)msg;
  purge_clean_[static_cast<std::size_t>(node)] = false;
}

std::vector<std::pair<int, int>> MaxPropRouter::purge_requests() {
  if (ack_flooding_) {
    // acks born mid-contact keep spreading while the links last
    for (auto& [link, epochs] : up_links_) {
      const auto ea = states_[static_cast<std::size_t>(link.first)].ack_epoch;
      const auto eb = states_[static_cast<std::size_t>(link.second)].ack_epoch;
      if (epochs == std::pair{ea, eb}) continue;
      merge_acks(link.first, link.second);
      epochs = {states_[static_cast<std::size_t>(link.first)].ack_epoch,
                states_[static_cast<std::size_t>(link.second)].ack_epoch};
    }
  }
  std::vector<std::pair<int, int>> out;
  const auto& buffers = *world_.buffers;
  for (std::size_t node = 0; node < buffers.size(); ++node) {
    if (purge_clean_[node]) continue;
    const auto& acked = states_[node].acked;
    if (!acked.empty()) {
      for (const auto& h : buffers[node].items) {
        if (acked.count(h.msg)) out.emplace_back(static_cast<int>(node), h.msg);
      }
    }
    purge_clean_[node] = true;
  }
  return out;
}

std::unique_ptr<Router> make_router(const sim::ScenarioConfig& cfg) {
  if (cfg.router == sim::RouterKind::MaxProp) {
    return std::make_unique<MaxPropRouter>(cfg.maxprop_ack_flooding,
                                           cfg.maxprop_hop_threshold);
  }
  return std::make_unique<EpidemicRouter>();
}

}  // namespace dtn::routing
