#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dtn/dataset.hpp"
#include "dtn/engine.hpp"
#include "dtn/ml.hpp"

// Differential evolution over the eight-knob scenario box, driving the two
// fitted surrogates through a weighted min-max-scaled objective that trades
// predicted delivery probability against predicted overhead ratio.
namespace dtn::opt {

class OptError : public std::runtime_error {
 public:
  enum class Code { DegenerateBox, OutOfBounds, BadConfig };

  OptError(Code code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  Code code() const { return code_; }

 private:
  Code code_;
};

enum class DimKind { Real, Integer, Categorical01 };

struct Dim {
  std::string name;
  double low = 0;
  double high = 1;
  DimKind kind = DimKind::Real;
};

struct ParamBox {
  std::vector<Dim> dims;

  void validate() const;  // throws DegenerateBox

  /// Clamp to bounds, round integer dims, snap categorical dims to {0,1}.
  double repair(std::size_t dim, double v) const;

  bool contains(const std::vector<double>& x) const;
};

/// The eight knobs in dataset column order with the studied sweep ranges.
ParamBox default_param_box();

struct DEConfig {
  int population = 0;  // 0 selects 15 per dimension
  double weight = 0.8;      // differential weight F
  double crossover = 0.9;   // crossover rate CR
  int max_generations = 200;
  double stagnation_tol = 1e-10;
  int stagnation_window = 30;  // generations without improvement to stop
  std::uint64_t seed = 1;
};

struct DEResult {
  std::vector<double> best;
  double best_score = 0;
  std::vector<double> history;  // best-so-far per generation (index 0 = init)
  std::size_t evaluations = 0;
};

/// Classic rand/1/bin with greedy selection at a generation barrier;
/// deterministic per seed.
DEResult differential_evolution(
    const std::function<double(const std::vector<double>&)>& objective,
    const ParamBox& box, const DEConfig& cfg);

struct ObjectiveSpec {
  const ml::Model* model_delivery = nullptr;
  const ml::Model* model_overhead = nullptr;
  // min-max scaling ranges observed in the training dataset
  double min_delivery = 0, max_delivery = 1;
  double min_overhead = 0, max_overhead = 1;
  double weight_delivery = 0.5;
  double weight_overhead = 0.5;
};

/// Fills the scaling ranges from the dataset's defined target values.
void freeze_scaling(ObjectiveSpec& spec, const ml::Dataset& dataset);

struct Prediction {
  double delivery = 0;
  double overhead = 0;
};

Prediction predict_targets(const std::vector<double>& x,
                           const ObjectiveSpec& spec);

/// wd*(1 - scaled_delivery) + wo*scaled_overhead, lower is better; scaled
/// values clamp to [0,1] and degenerate ranges scale to 0.
double score_prediction(const Prediction& p, const ObjectiveSpec& spec);

/// Bounds check, predict, score.
double objective(const std::vector<double>& x, const ObjectiveSpec& spec,
                 const ParamBox& box);

struct Recommendation {
  std::vector<double> x;
  Prediction predicted;
  double score = 0;
  DEResult de;
};

Recommendation recommend(const ObjectiveSpec& spec, const ParamBox& box,
                         const DEConfig& cfg);

/// Decode a DE vector (dataset column order) into a runnable scenario.
sim::ScenarioConfig decode_scenario(const std::vector<double>& x,
                                    const sim::ScenarioConfig& base);

struct ValidationOutcome {
  Recommendation rec;
  metrics::SimReport simulated;
};

/// DE-optimize, decode the winner, re-simulate it on the given trace.
ValidationOutcome recommend_and_validate(const ObjectiveSpec& spec,
                                         const ParamBox& box,
                                         const DEConfig& cfg,
                                         const sim::Trace& trace,
                                         const sim::ScenarioConfig& base);

}  // namespace dtn::opt
