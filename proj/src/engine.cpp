#include "dtn/engine.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <map>
#include <set>

#include "dtn/kernels.hpp"
#include "dtn/rng.hpp"
#include "dtn/routing.hpp"

namespace dtn::sim {

namespace {

[[noreturn]] void fail(EngineError::Code code, const std::string& msg) {
  throw EngineError(code, msg);
}

}  // namespace

Trace Trace::from_samples(const std::vector<trace::TraceSample>& samples) {
  if (samples.empty()) {
    fail(EngineError::Code::EmptyTrace, "trace holds no samples");
  }
  Trace t;
  std::set<std::string> names;
  for (const auto& s : samples) names.insert(s.node_id);
  t.node_names.assign(names.begin(), names.end());
  std::map<std::string, int> index;
  for (int i = 0; i < static_cast<int>(t.node_names.size()); ++i) {
    index[t.node_names[i]] = i;
  }
  t.samples.reserve(samples.size());
  double prev = samples.front().time;
  for (const auto& s : samples) {
    if (s.time < prev) {
      fail(EngineError::Code::EmptyTrace, "trace samples are not time-sorted");
    }
    prev = s.time;
    t.samples.push_back(Sample{s.time, index.at(s.node_id), s.x, s.y});
  }
  t.min_time = t.samples.front().time;
  t.max_time = t.samples.back().time;
  return t;
}

bool Buffer::holds(int msg) const { return find(msg) != nullptr; }

const Held* Buffer::find(int msg) const {
  for (const auto& h : items) {
    if (h.msg == msg) return &h;
  }
  return nullptr;
}

AdmitOutcome buffer_admit(Buffer& buf, Held incoming,
                          const std::vector<int>& drop_order) {
  AdmitOutcome out;
  if (incoming.size > buf.capacity) return out;  // rejected outright
  if (buf.used + incoming.size > buf.capacity) {
    for (int victim : drop_order) {
      if (buf.used + incoming.size <= buf.capacity) break;
      for (std::size_t i = 0; i < buf.items.size(); ++i) {
        if (buf.items[i].msg == victim) {
          buf.used -= buf.items[i].size;
          out.evicted.push_back(std::move(buf.items[i]));
          buf.items.erase(buf.items.begin() + static_cast<std::ptrdiff_t>(i));
          break;
        }
      }
    }
  }
  assert(buf.used + incoming.size <= buf.capacity);
  buf.used += incoming.size;
  buf.items.push_back(std::move(incoming));
  out.admitted = true;
  return out;
}

std::vector<Held> expire_ttl(Buffer& buf, double now,
                             const std::vector<MessageInfo>& messages) {
  std::vector<Held> expired;
  auto& items = buf.items;
  for (std::size_t i = 0; i < items.size();) {
    const auto& info = messages[static_cast<std::size_t>(items[i].msg)];
    if (now - info.created_at > info.ttl) {
      buf.used -= items[i].size;
      expired.push_back(std::move(items[i]));
      items.erase(items.begin() + static_cast<std::ptrdiff_t>(i));
    } else {
      ++i;
    }
  }
  return expired;
}

std::vector<std::pair<int, int>> connectivity(const std::vector<double>& xs,
                                              const std::vector<double>& ys,
                                              double range) {
  assert(xs.size() == ys.size());
  const auto n = xs.size();
  std::vector<std::pair<int, int>> links;
  if (n < 2) return links;
  const double r2 = range * range;
  std::vector<std::uint8_t> mask(n);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const std::size_t m = n - i - 1;
    kernels::in_range(xs.data() + i + 1, ys.data() + i + 1, m, xs[i], ys[i], r2,
                      mask.data());
    for (std::size_t j = 0; j < m; ++j) {
      if (mask[j]) {
        links.emplace_back(static_cast<int>(i), static_cast<int>(i + 1 + j));
      }
    }
  }
  return links;
}

namespace {

struct Transfer {
  int msg = -1;
  int from = -1;
  int to = -1;
  double bytes_done = 0;
};

struct LinkState {
  std::optional<Transfer> tx;
  double contact_bytes = 0;
  // selection cache: skip re-asking the router while both endpoint buffers
  // are unchanged and the last ask found nothing
  std::uint64_t checked_vv[2] = {0, 0};
  bool checked_empty = false;
};

class Run {
 public:
  Run(const ScenarioConfig& cfg, const Trace& trace, routing::Router& router)
      : cfg_(cfg), trace_(trace), router_(router), n_(trace.node_count()),
        ev_rng_(rng::derive(cfg.seed, 0)) {}

  RunResult execute();

 private:
  void apply_positions(double now);
  void update_links(double now);
  void create_messages(double now);
  void purge_acked(double now);
  void schedule_transfers(double now);
  void progress_transfers(double now);
  void expire_messages(double now);
  void abort_orphans(double now);
  bool admit_with_policy(int node, Held copy, double now);
  void bump(int node) { ++version_[node]; }

  const ScenarioConfig& cfg_;
  const Trace& trace_;
  routing::Router& router_;
  const int n_;

  std::vector<double> xs_, ys_;
  std::size_t cursor_ = 0;
  std::vector<Buffer> buffers_;
  std::vector<double> expiry_watermark_;
  std::vector<MessageInfo> messages_;
  std::vector<std::optional<double>> delivered_at_;
  std::map<std::pair<int, int>, LinkState> links_;
  std::vector<std::uint64_t> version_;
  std::uint64_t seq_ = 0;
  std::uint64_t event_tick_ = 1;
  rng::Rng ev_rng_;
  EventLog log_;
  metrics::SimReport report_;
};

void Run::apply_positions(double now) {
  while (cursor_ < trace_.samples.size() &&
         trace_.samples[cursor_].time <= now) {
    const auto& s = trace_.samples[cursor_];
    xs_[s.node] = s.x;
    ys_[s.node] = s.y;
    ++cursor_;
  }
}

void Run::update_links(double now) {
  const auto fresh = connectivity(xs_, ys_, cfg_.transmit_range);

  // tear down vanished links first (ascending), aborting in-flight transfers
  for (auto it = links_.begin(); it != links_.end();) {
    if (!std::binary_search(fresh.begin(), fresh.end(), it->first)) {
      if (it->second.tx) {
        const auto& tx = *it->second.tx;
        log_.append(now, EventKind::Aborted, tx.msg, tx.from, tx.to);
        ++report_.aborted;
      }
      router_.on_link_down(it->first.first, it->first.second,
                           it->second.contact_bytes);
      bump(it->first.first);
      bump(it->first.second);
      it = links_.erase(it);
    } else {
      ++it;
    }
  }
  for (const auto& link : fresh) {
    if (!links_.count(link)) {
      links_.emplace(link, LinkState{});
      router_.on_link_up(link.first, link.second);
      bump(link.first);
      bump(link.second);
    }
  }
}

void Run::create_messages(double now) {
  if (n_ < 2) return;  // no src != dest pair exists
  const double start = trace_.min_time;
  const double w_lo = cfg_.event_window ? cfg_.event_window->first : 0.0;
  const double w_hi = cfg_.event_window
                          ? cfg_.event_window->second
                          : std::numeric_limits<double>::infinity();
  while (true) {
    const double tick =
        start + static_cast<double>(event_tick_) * cfg_.event_interval;
    if (tick > now) break;
    ++event_tick_;
    const double rel = tick - start;
    if (rel < w_lo || rel > w_hi) continue;

    const int src = static_cast<int>(ev_rng_.below(static_cast<std::uint64_t>(n_)));
    int dest = static_cast<int>(ev_rng_.below(static_cast<std::uint64_t>(n_ - 1)));
    if (dest >= src) ++dest;

    const int msg = static_cast<int>(messages_.size());
    messages_.push_back(MessageInfo{src, dest, cfg_.message_bytes(), now,
                                    cfg_.msg_ttl});
    delivered_at_.push_back(std::nullopt);
    log_.append(now, EventKind::Created, msg, src, dest);
    ++report_.created;

    Held copy;
    copy.msg = msg;
    copy.size = cfg_.message_bytes();
    copy.received_at = now;
    copy.seq = seq_++;
    copy.hop_count = 0;
    copy.path = {src};
    admit_with_policy(src, std::move(copy), now);
  }
}

bool Run::admit_with_policy(int node, Held copy, double now) {
  auto& buf = buffers_[static_cast<std::size_t>(node)];
  std::vector<int> order;
  if (copy.size <= buf.capacity && buf.used + copy.size > buf.capacity) {
    order = router_.drop_order(node);
  }
  const auto& info = messages_[static_cast<std::size_t>(copy.msg)];
  auto& watermark = expiry_watermark_[static_cast<std::size_t>(node)];
  watermark = std::min(watermark, info.created_at + info.ttl);
  auto outcome = buffer_admit(buf, std::move(copy), order);
  for (const auto& victim : outcome.evicted) {
    log_.append(now, EventKind::Dropped, victim.msg, node, -1);
    ++report_.dropped;
  }
  if (outcome.admitted || !outcome.evicted.empty()) bump(node);
  return outcome.admitted;
}

void Run::purge_acked(double now) {
  for (const auto& [node, msg] : router_.purge_requests()) {
    auto& buf = buffers_[static_cast<std::size_t>(node)];
    for (std::size_t i = 0; i < buf.items.size(); ++i) {
      if (buf.items[i].msg == msg) {
        buf.used -= buf.items[i].size;
        buf.items.erase(buf.items.begin() + static_cast<std::ptrdiff_t>(i));
        log_.append(now, EventKind::Dropped, msg, node, -1, /*acked=*/true);
        ++report_.dropped;
        bump(node);
        break;
      }
    }
  }
}

void Run::schedule_transfers(double now) {
  // single-channel radios: a node engaged in a transfer on any link cannot
  // join another one until it completes
  std::vector<bool> busy(static_cast<std::size_t>(n_), false);
  for (const auto& [key, link] : links_) {
    if (link.tx) {
      busy[static_cast<std::size_t>(link.tx->from)] = true;
      busy[static_cast<std::size_t>(link.tx->to)] = true;
    }
  }
  for (auto& [key, link] : links_) {
    if (link.tx) continue;
    if (busy[static_cast<std::size_t>(key.first)] ||
        busy[static_cast<std::size_t>(key.second)]) {
      continue;
    }
    const std::uint64_t va = version_[key.first];
    const std::uint64_t vb = version_[key.second];
    if (link.checked_empty && link.checked_vv[0] == va &&
        link.checked_vv[1] == vb) {
      continue;  // nothing changed at either endpoint since the last miss
    }
    bool started = false;
    const int dirs[2][2] = {{key.first, key.second}, {key.second, key.first}};
    for (const auto& d : dirs) {
      const int from = d[0], to = d[1];
      const auto candidates = router_.select_transfers(from, to);
      for (int msg : candidates) {
        if (!buffers_[static_cast<std::size_t>(from)].holds(msg)) continue;
        if (buffers_[static_cast<std::size_t>(to)].holds(msg)) continue;
        link.tx = Transfer{msg, from, to, 0.0};
        log_.append(now, EventKind::TransferStarted, msg, from, to);
        busy[static_cast<std::size_t>(from)] = true;
        busy[static_cast<std::size_t>(to)] = true;
        started = true;
        break;
      }
      if (started) break;
    }
    if (!started) {
      link.checked_empty = true;
      link.checked_vv[0] = va;
      link.checked_vv[1] = vb;
    } else {
      link.checked_empty = false;
    }
  }
}

void Run::progress_transfers(double now) {
  const double step_bytes = cfg_.bytes_per_second() * cfg_.time_step;
  for (auto& [key, link] : links_) {
    if (!link.tx) continue;
    auto& tx = *link.tx;
    auto& sender = buffers_[static_cast<std::size_t>(tx.from)];
    if (!sender.holds(tx.msg)) {
      // source copy vanished (evicted or purged) mid-transfer
      log_.append(now, EventKind::Aborted, tx.msg, tx.from, tx.to);
      ++report_.aborted;
      link.tx.reset();
      continue;
    }
    const auto& info = messages_[static_cast<std::size_t>(tx.msg)];
    const double advanced =
        std::min(step_bytes, static_cast<double>(info.size) - tx.bytes_done);
    tx.bytes_done += advanced;
    link.contact_bytes += advanced;
    if (tx.bytes_done + 1e-9 < static_cast<double>(info.size)) continue;

    // completed
    log_.append(now, EventKind::Relayed, tx.msg, tx.from, tx.to);
    ++report_.relayed;
    if (tx.to == info.dest && !delivered_at_[static_cast<std::size_t>(tx.msg)]) {
      delivered_at_[static_cast<std::size_t>(tx.msg)] = now;
      log_.append(now, EventKind::Delivered, tx.msg, tx.from, tx.to);
      ++report_.delivered;
      router_.on_delivered(tx.msg, tx.to, tx.from);
      bump(tx.to);
      bump(tx.from);
    }
    auto& receiver = buffers_[static_cast<std::size_t>(tx.to)];
    if (!receiver.holds(tx.msg)) {
      const Held* held = sender.find(tx.msg);
      Held copy;
      copy.msg = tx.msg;
      copy.size = info.size;
      copy.received_at = now;
      copy.seq = seq_++;
      copy.hop_count = held->hop_count + 1;
      copy.path = held->path;
      copy.path.push_back(tx.to);
      if (admit_with_policy(tx.to, std::move(copy), now)) {
        router_.on_received(tx.to, tx.msg);
      }
    }
    link.tx.reset();
  }
}

void Run::expire_messages(double now) {
  for (int node = 0; node < n_; ++node) {
    // the buffer's earliest possible expiry gates the scan
    auto& watermark = expiry_watermark_[static_cast<std::size_t>(node)];
    if (now <= watermark) continue;
    auto& buf = buffers_[static_cast<std::size_t>(node)];
    auto expired = expire_ttl(buf, now, messages_);
    for (const auto& h : expired) {
      log_.append(now, EventKind::Expired, h.msg, node, -1);
      ++report_.expired;
    }
    if (!expired.empty()) bump(node);
    double next = std::numeric_limits<double>::infinity();
    for (const auto& h : buf.items) {
      const auto& info = messages_[static_cast<std::size_t>(h.msg)];
      next = std::min(next, info.created_at + info.ttl);
    }
    watermark = next;
  }
}

void Run::abort_orphans(double now) {
  for (auto& [key, link] : links_) {
    if (link.tx &&
        !buffers_[static_cast<std::size_t>(link.tx->from)].holds(link.tx->msg)) {
      log_.append(now, EventKind::Aborted, link.tx->msg, link.tx->from,
                  link.tx->to);
      ++report_.aborted;
      link.tx.reset();
    }
  }
}

RunResult Run::execute() {
  cfg_.validate();
  if (trace_.samples.empty() || n_ == 0) {
    fail(EngineError::Code::EmptyTrace, "trace holds no samples");
  }

  std::vector<double> first_time(static_cast<std::size_t>(n_),
                                 std::numeric_limits<double>::infinity());
  for (const auto& s : trace_.samples) {
    auto& t = first_time[static_cast<std::size_t>(s.node)];
    t = std::min(t, s.time);
  }
  const double start = trace_.min_time;
  for (int i = 0; i < n_; ++i) {
    if (first_time[static_cast<std::size_t>(i)] > start) {
      fail(EngineError::Code::UnknownNodeInTrace,
           "node " + trace_.node_names[static_cast<std::size_t>(i)] +
               " has no position at sim start");
    }
  }

  const double duration =
      cfg_.sim_duration.value_or(trace_.max_time - trace_.min_time);
  const double dt = cfg_.time_step;
  const auto n_steps =
      static_cast<std::int64_t>(std::floor(duration / dt + 1e-6)) + 1;

  xs_.assign(static_cast<std::size_t>(n_), 0.0);
  ys_.assign(static_cast<std::size_t>(n_), 0.0);
  buffers_.assign(static_cast<std::size_t>(n_), Buffer{});
  for (auto& b : buffers_) b.capacity = cfg_.buffer_bytes();
  expiry_watermark_.assign(static_cast<std::size_t>(n_),
                           std::numeric_limits<double>::infinity());
  version_.assign(static_cast<std::size_t>(n_), 1);

  routing::WorldView world;
  world.buffers = &buffers_;
  world.messages = &messages_;
  world.node_count = n_;
  router_.on_start(world);

  for (std::int64_t k = 0; k < n_steps; ++k) {
    const double now = start + static_cast<double>(k) * dt;
    apply_positions(now);
    update_links(now);
    create_messages(now);
    purge_acked(now);
    schedule_transfers(now);
    progress_transfers(now);
    expire_messages(now);
    abort_orphans(now);
  }

  // end-of-run accounting by best-reached state per message
  std::set<int> buffered;
  for (const auto& b : buffers_) {
    for (const auto& h : b.items) buffered.insert(h.msg);
  }
  std::set<int> inflight;
  for (const auto& [key, link] : links_) {
    if (link.tx) inflight.insert(link.tx->msg);
  }
  for (std::size_t m = 0; m < messages_.size(); ++m) {
    if (delivered_at_[m]) {
      report_.latencies.push_back(*delivered_at_[m] - messages_[m].created_at);
    } else if (buffered.count(static_cast<int>(m))) {
      ++report_.final_buffered;
    } else if (inflight.count(static_cast<int>(m))) {
      ++report_.final_inflight;
    } else {
      ++report_.final_dead;
    }
  }

  if (report_.created > 0) {
    report_.delivery_prob =
        metrics::delivery_probability(report_.delivered, report_.created);
  }
  report_.overhead_ratio =
      metrics::overhead_ratio(report_.relayed, report_.delivered);
  if (!report_.latencies.empty()) {
    double total = 0;  // left-to-right, matching a direct log-scan oracle
    for (double l : report_.latencies) total += l;
    report_.avg_latency = total / static_cast<double>(report_.latencies.size());
  }

  RunResult result;
  result.report = std::move(report_);
  result.log = std::move(log_);
  result.messages = std::move(messages_);
  result.final_buffers.resize(static_cast<std::size_t>(n_));
  for (int i = 0; i < n_; ++i) {
    auto& ids = result.final_buffers[static_cast<std::size_t>(i)];
    for (const auto& h : buffers_[static_cast<std::size_t>(i)].items) {
      ids.push_back(h.msg);
    }
    std::sort(ids.begin(), ids.end());
  }
  return result;
}

}  // namespace

RunResult run(const ScenarioConfig& cfg, const Trace& trace,
              routing::Router& router) {
  return Run(cfg, trace, router).execute();
}

RunResult run(const ScenarioConfig& cfg, const Trace& trace) {
  auto router = routing::make_router(cfg);
  return run(cfg, trace, *router);
}

}  // namespace dtn::sim
