#include "dtn/experiment.hpp"

#include <atomic>
#include <cmath>
#include <thread>

#include "dtn/rng.hpp"
#include "dtn/routing.hpp"

namespace dtn::exp {

void SweepPlan::set_range(const std::string& knob, double lo, double hi) {
  const auto assign = [&](KnobRange& r) { r = KnobRange{lo, hi}; };
  if (knob == "btInterface.transmitSpeed") assign(transmit_speed);
  else if (knob == "btInterface.transmitRange") assign(transmit_range);
  else if (knob == "Group.bufferSize") assign(buffer_size);
  else if (knob == "Group.waitTime") assign(wait_time);
  else if (knob == "Group.msgTtl") assign(msg_ttl);
  else if (knob == "Events1.interval" || knob == "EventsI.interval") assign(event_interval);
  else if (knob == "Events1.size" || knob == "EventsI.size") assign(event_size);
  else throw sim::ConfigError("unknown sweep knob '" + knob + "'");
}

namespace {

std::vector<double> grid_values(const KnobRange& r, int levels) {
  std::vector<double> out;
  if (levels <= 1) {
    out.push_back(std::round((r.lo + r.hi) / 2));
    return out;
  }
  for (int i = 0; i < levels; ++i) {
    out.push_back(std::round(r.lo + (r.hi - r.lo) * static_cast<double>(i) /
                                        static_cast<double>(levels - 1)));
  }
  return out;
}

}  // namespace

std::vector<sim::ScenarioConfig> SweepPlan::draw(
    const sim::ScenarioConfig& base) const {
  std::vector<sim::ScenarioConfig> out;

  if (mode == Mode::Grid) {
    const std::vector<std::vector<double>> axes = {
        grid_values(transmit_speed, grid_levels),
        grid_values(transmit_range, grid_levels),
        grid_values(buffer_size, grid_levels),
        grid_values(wait_time, grid_levels),
        {0, 1},  // router
        grid_values(msg_ttl, grid_levels),
        grid_values(event_interval, grid_levels),
        grid_values(event_size, grid_levels),
    };
    std::size_t total = 1;
    for (const auto& a : axes) total *= a.size();
    for (std::size_t idx = 0; idx < total; ++idx) {
      std::array<double, 8> row{};
      std::size_t rem = idx;
      for (std::size_t a = axes.size(); a-- > 0;) {
        row[a] = axes[a][rem % axes[a].size()];
        rem /= axes[a].size();
      }
      auto cfg = ml::scenario_from_features(row, base);
      cfg.seed = rng::derive(master_seed, 500000 + idx);
      out.push_back(cfg);
    }
    return out;
  }

  rng::Rng knobs(rng::derive(master_seed, 1));
  const auto draw_int = [&](const KnobRange& r) {
    return static_cast<double>(knobs.uniform_int(
        static_cast<std::int64_t>(std::llround(r.lo)),
        static_cast<std::int64_t>(std::llround(r.hi))));
  };
  for (int i = 0; i < runs; ++i) {
    sim::ScenarioConfig cfg = base;
    cfg.transmit_speed = draw_int(transmit_speed);
    cfg.transmit_range = draw_int(transmit_range);
    cfg.buffer_size = draw_int(buffer_size);
    cfg.wait_time = draw_int(wait_time);
    cfg.router = knobs.below(2) ? sim::RouterKind::MaxProp
                                : sim::RouterKind::Epidemic;
    cfg.msg_ttl = draw_int(msg_ttl);
    cfg.event_interval = draw_int(event_interval);
    cfg.event_size = draw_int(event_size);
    cfg.seed = rng::derive(master_seed, 500000 + static_cast<std::uint64_t>(i));
    out.push_back(cfg);
  }
  return out;
}

SweepOutcome run_sweep(const SweepPlan& plan, const sim::Trace& trace,
                       const sim::ScenarioConfig& base, int jobs) {
  const auto scenarios = plan.draw(base);
  const auto n = scenarios.size();

  struct RowResult {
    std::optional<double> delivery;
    std::optional<double> overhead;
    std::string error;
  };
  std::vector<RowResult> rows(n);

  const auto work = [&](std::size_t i) {
    try {
      const auto result = sim::run(scenarios[i], trace);
      rows[i].delivery = result.report.delivery_prob;
      rows[i].overhead = result.report.overhead_ratio;
    } catch (const std::exception& e) {
      rows[i].error = e.what();
    }
  };

  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    const auto workers = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (;;) {
          const auto i = next.fetch_add(1);
          if (i >= n) return;
          work(i);
        }
      });
    }
    for (auto& t : pool) t.join();
  }

  SweepOutcome out;
  for (std::size_t i = 0; i < n; ++i) {
    out.dataset.append(scenarios[i], rows[i].delivery, rows[i].overhead);
    out.run_errors.push_back(rows[i].error);
  }
  return out;
}

}  // namespace dtn::exp
