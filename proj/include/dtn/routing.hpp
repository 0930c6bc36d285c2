#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <vector>

#include "dtn/engine.hpp"

// Store-carry-forward routing policies. The engine drives a Router through
// link callbacks and asks it for transfer and eviction orders; all router
// state is confined to one run.
namespace dtn::routing {

class RoutingError : public std::runtime_error {
 public:
  enum class Code { SelfMeeting };

  RoutingError(Code code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  Code code() const { return code_; }

 private:
  Code code_;
};

/// What a router may see of the engine's state.
struct WorldView {
  const std::vector<sim::Buffer>* buffers = nullptr;
  const std::vector<sim::MessageInfo>* messages = nullptr;
  int node_count = 0;
};

class Router {
 public:
  virtual ~Router() = default;

  virtual void on_start(const WorldView& world) { world_ = world; }
  virtual void on_link_up(int /*a*/, int /*b*/) {}
  virtual void on_link_down(int /*a*/, int /*b*/, double /*bytes_moved*/) {}

  /// Messages `from` should offer `to`, best first. Never proposes a message
  /// the peer already holds.
  virtual std::vector<int> select_transfers(int from, int to) = 0;

  /// Eviction order over the node's buffer: every buffered message exactly
  /// once, first to be dropped first.
  virtual std::vector<int> drop_order(int node) = 0;

  virtual void on_received(int /*node*/, int /*msg*/) {}

  /// First arrival of msg at its destination; relayer is the node that
  /// completed the delivering transfer.
  virtual void on_delivered(int /*msg*/, int /*dest*/, int /*relayer*/) {}

  /// (node, msg) pairs the engine should purge from buffers this step;
  /// MaxProp uses this to delete acknowledged messages.
  virtual std::vector<std::pair<int, int>> purge_requests() { return {}; }

 protected:
  WorldView world_;
};

/// Set difference of two summary vectors: what A sends B and vice versa,
/// each FCFS-ordered by receive time at the sender (ties by message id).
std::pair<std::vector<int>, std::vector<int>> epidemic_exchange(
    const sim::Buffer& a, const sim::Buffer& b);

/// Flooding with FIFO eviction; transfer order is FCFS by local receive time.
class EpidemicRouter : public Router {
 public:
  std::vector<int> select_transfers(int from, int to) override;
  std::vector<int> drop_order(int node) override;
};

/// Per-node MaxProp state: delivery likelihoods over peers, delivered-message
/// acks, and the running per-contact transfer capacity estimate.
struct MaxPropState {
  int self = -1;
  std::vector<double> likelihood;  // size n; self entry unused (0)
  std::uint64_t version = 0;       // bumps on every meet update
  std::set<int> acked;
  std::uint64_t ack_epoch = 0;     // bumps whenever acked grows
  double avg_transfer_bytes = 0;
  std::uint64_t contact_count = 0;

  /// Uniform prior 1/(n-1) over the other nodes.
  static MaxPropState uniform(int self, int n);

  /// f_met += 1 then renormalize to sum 1.
  void meet_update(int met);

  void record_contact_bytes(double bytes);
};

inline constexpr double kUnreachable = std::numeric_limits<double>::infinity();

/// Dijkstra distances from src to every node under edge weight
/// w(i,j) = 1 - f_i(j), over the likelihood tables known locally (absent
/// tables contribute no outgoing edges). Unreachable nodes cost +infinity.
std::vector<double> maxprop_costs_from(
    const std::vector<std::optional<std::vector<double>>>& tables, int src);

/// Single-pair shortest-path cost; +infinity when dest is unreachable.
double maxprop_path_cost(
    const std::vector<std::optional<std::vector<double>>>& tables, int src,
    int dest);

struct PriorityItem {
  int msg = -1;
  int hop_count = 0;
  double created_at = 0;
  std::int64_t size = 0;
  double cost = 0;  // path cost to the destination
};

struct PriorityOrder {
  std::vector<int> transmit;  // message ids, first to send first
  std::vector<int> drop;      // message ids, first to evict first
};

/// Two-segment MaxProp ordering: messages with hop_count < threshold_p go
/// first (hop ascending, newer creation first, then id), the rest by
/// ascending path cost (ties by id). Drop order reverses the segments:
/// highest-cost high-hop messages first, low-hop messages last.
PriorityOrder maxprop_priority(const std::vector<PriorityItem>& items,
                               int threshold_p);

/// Largest p such that the messages with hop_count < p fit in cap_bytes.
int adaptive_hop_threshold(const std::vector<PriorityItem>& items,
                           double cap_bytes);

class MaxPropRouter : public Router {
 public:
  explicit MaxPropRouter(bool ack_flooding = true,
                         std::optional<int> fixed_hop_threshold = std::nullopt)
      : ack_flooding_(ack_flooding), fixed_threshold_(fixed_hop_threshold) {}

  void on_start(const WorldView& world) override;
  void on_link_up(int a, int b) override;
  void on_link_down(int a, int b, double bytes_moved) override;
  std::vector<int> select_transfers(int from, int to) override;
  std::vector<int> drop_order(int node) override;
  void on_delivered(int msg, int dest, int relayer) override;

  const MaxPropState& state(int node) const { return states_[node]; }
  bool is_acked(int node, int msg) const {
    return states_[node].acked.count(msg) > 0;
  }

  /// Runs one round of ack exchange over the currently-up links (acks keep
  /// flowing while a contact lasts), then reports every (node, msg) whose
  /// holder knows the message was delivered. The caller is expected to purge
  /// the reported copies; they are not reported again until state changes.
  std::vector<std::pair<int, int>> purge_requests() override;

  void on_received(int node, int msg) override;

 private:
  std::vector<PriorityItem> prioritized(int node, double& cap_bytes) const;
  std::vector<double> costs_from(int node) const;
  void learn_ack(int node, int msg);
  void merge_acks(int a, int b);

  bool ack_flooding_;
  std::optional<int> fixed_threshold_;
  // up link -> ack epochs of both endpoints at the last exchange
  std::map<std::pair<int, int>, std::pair<std::uint64_t, std::uint64_t>> up_links_;
  std::vector<MaxPropState> states_;
  std::vector<bool> purge_clean_;  // true: buffer provably holds no acked msg
  // tables_[observer][owner]: owner's likelihood vector as last heard of by
  // observer, with the version it carried.
  std::vector<std::vector<std::optional<std::vector<double>>>> tables_;
  std::vector<std::vector<std::uint64_t>> table_versions_;
};

std::unique_ptr<Router> make_router(const sim::ScenarioConfig& cfg);

}  // namespace dtn::routing
