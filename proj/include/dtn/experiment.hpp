#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dtn/dataset.hpp"
#include "dtn/engine.hpp"

namespace dtn::exp {

struct KnobRange {
  double lo = 0;
  double hi = 0;
};

/// Scenario draws for one sweep. Router is always sampled fairly from {0,1};
/// the numeric knobs draw integer values from their ranges (defaults are the
/// studied sweep ranges).
struct SweepPlan {
  KnobRange transmit_speed{125, 375};
  KnobRange transmit_range{10, 30};
  KnobRange buffer_size{500, 10240};
  KnobRange wait_time{60, 900};
  KnobRange msg_ttl{1800, 7200};
  KnobRange event_interval{5, 15};
  KnobRange event_size{20, 50};

  enum class Mode { UniformRandom, Grid };
  Mode mode = Mode::UniformRandom;
  int grid_levels = 2;  // per knob, grid mode only
  int runs = 100;       // uniform mode only; grid mode runs the full factorial
  std::uint64_t master_seed = 1;

  void set_range(const std::string& knob, double lo, double hi);

  /// The scenario of every planned run, in run-index order.
  std::vector<sim::ScenarioConfig> draw(const sim::ScenarioConfig& base) const;
};

struct SweepOutcome {
  ml::Dataset dataset;                   // one row per run, in run order
  std::vector<std::string> run_errors;   // "" for clean runs
};

/// Executes the plan over a fixed trace. Failed runs yield NaN-target rows.
/// Workers only affect wall time; output is identical for any job count.
SweepOutcome run_sweep(const SweepPlan& plan, const sim::Trace& trace,
                       const sim::ScenarioConfig& base, int jobs);

}  // namespace dtn::exp
