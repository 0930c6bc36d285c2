#include "dtn/optimize.hpp"

#include <algorithm>
#include <cmath>

#include "dtn/rng.hpp"

namespace dtn::opt {

namespace {

[[noreturn]] void fail(OptError::Code code, const std::string& msg) {
  throw OptError(code, msg);
}

}  // namespace

void ParamBox::validate() const {
  if (dims.empty()) fail(OptError::Code::DegenerateBox, "box has no dimensions");
  for (const auto& d : dims) {
    if (d.kind == DimKind::Categorical01) {
      if (d.low != 0 || d.high != 1) {
        fail(OptError::Code::DegenerateBox,
             "categorical dimension '" + d.name + "' must span {0,1}");
      }
    } else if (!(d.low < d.high)) {
      fail(OptError::Code::DegenerateBox,
           "dimension '" + d.name + "' has an empty range");
    }
  }
}

double ParamBox::repair(std::size_t dim, double v) const {
  const auto& d = dims[dim];
  v = std::clamp(v, d.low, d.high);
  if (d.kind == DimKind::Integer) v = std::round(v);
  if (d.kind == DimKind::Categorical01) v = v >= 0.5 ? 1.0 : 0.0;
  return v;
}

bool ParamBox::contains(const std::vector<double>& x) const {
  if (x.size() != dims.size()) return false;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    const auto& d = dims[i];
    if (x[i] < d.low || x[i] > d.high) return false;
    if (d.kind == DimKind::Integer && x[i] != std::round(x[i])) return false;
    if (d.kind == DimKind::Categorical01 && x[i] != 0.0 && x[i] != 1.0) {
      return false;
    }
  }
  return true;
}

ParamBox default_param_box() {
  ParamBox box;
  box.dims = {
      {"btInterface.transmitSpeed", 125, 375, DimKind::Integer},
      {"btInterface.transmitRange", 10, 30, DimKind::Integer},
      {"Group.bufferSize", 500, 10240, DimKind::Integer},
      {"Group.waitTime", 60, 900, DimKind::Integer},
      {"Group.router", 0, 1, DimKind::Categorical01},
      {"Group.msgTtl", 1800, 7200, DimKind::Integer},
      {"Events1.interval", 5, 15, DimKind::Integer},
      {"Events1.size", 20, 50, DimKind::Integer},
  };
  return box;
}

DEResult differential_evolution(
    const std::function<double(const std::vector<double>&)>& objective,
    const ParamBox& box, const DEConfig& cfg) {
  box.validate();
  const auto d = box.dims.size();
  const int np = cfg.population > 0 ? cfg.population
                                    : 15 * static_cast<int>(d);
  if (np < 4) fail(OptError::Code::BadConfig, "population must be at least 4");
  if (!(cfg.weight > 0) || cfg.weight > 2 || cfg.crossover < 0 ||
      cfg.crossover > 1) {
    fail(OptError::Code::BadConfig, "need 0 < F <= 2 and 0 <= CR <= 1");
  }

  rng::Rng rng(cfg.seed);
  const auto und = static_cast<std::size_t>(np);

  std::vector<std::vector<double>> pop(und, std::vector<double>(d));
  std::vector<double> score(und);
  for (auto& x : pop) {
    for (std::size_t j = 0; j < d; ++j) {
      x[j] = box.repair(j, rng.uniform(box.dims[j].low, box.dims[j].high));
    }
  }

  DEResult result;
  for (std::size_t i = 0; i < und; ++i) {
    score[i] = objective(pop[i]);
    ++result.evaluations;
  }
  auto best_it = std::min_element(score.begin(), score.end());
  result.best_score = *best_it;
  result.best = pop[static_cast<std::size_t>(best_it - score.begin())];
  result.history.push_back(result.best_score);

  std::vector<std::vector<double>> trials(und, std::vector<double>(d));
  for (int gen = 1; gen <= cfg.max_generations; ++gen) {
    // trial construction is sequential in i; evaluation and selection behave
    // as one generation barrier
    for (std::size_t i = 0; i < und; ++i) {
      std::size_t a, b, c;
      do { a = rng.below(und); } while (a == i);
      do { b = rng.below(und); } while (b == i || b == a);
      do { c = rng.below(und); } while (c == i || c == a || c == b);
      const auto j_forced = static_cast<std::size_t>(rng.below(d));
      auto& trial = trials[i];
      for (std::size_t j = 0; j < d; ++j) {
        if (rng.uniform() < cfg.crossover || j == j_forced) {
          trial[j] = box.repair(j, pop[a][j] + cfg.weight * (pop[b][j] - pop[c][j]));
        } else {
          trial[j] = pop[i][j];
        }
      }
    }
    for (std::size_t i = 0; i < und; ++i) {
      const double trial_score = objective(trials[i]);
      ++result.evaluations;
      if (trial_score <= score[i]) {
        score[i] = trial_score;
        pop[i] = trials[i];
        if (trial_score < result.best_score) {
          result.best_score = trial_score;
          result.best = pop[i];
        }
      }
    }
    result.history.push_back(result.best_score);

    const auto w = static_cast<std::size_t>(cfg.stagnation_window);
    if (w > 0 && result.history.size() > w) {
      const double then = result.history[result.history.size() - 1 - w];
      if (then - result.best_score < cfg.stagnation_tol) break;
    }
  }
  return result;
}

void freeze_scaling(ObjectiveSpec& spec, const ml::Dataset& dataset) {
  bool first_d = true, first_o = true;
  for (std::size_t i = 0; i < dataset.n(); ++i) {
    if (dataset.delivery_prob[i]) {
      const double v = *dataset.delivery_prob[i];
      if (first_d || v < spec.min_delivery) spec.min_delivery = v;
      if (first_d || v > spec.max_delivery) spec.max_delivery = v;
      first_d = false;
    }
    if (dataset.overhead_ratio[i]) {
      const double v = *dataset.overhead_ratio[i];
      if (first_o || v < spec.min_overhead) spec.min_overhead = v;
      if (first_o || v > spec.max_overhead) spec.max_overhead = v;
      first_o = false;
    }
  }
}

Prediction predict_targets(const std::vector<double>& x,
                           const ObjectiveSpec& spec) {
  if (!spec.model_delivery || !spec.model_overhead) {
    fail(OptError::Code::BadConfig, "objective needs both fitted models");
  }
  Prediction p;
  p.delivery = spec.model_delivery->predict_row(x.data());
  p.overhead = spec.model_overhead->predict_row(x.data());
  return p;
}

namespace {

// min-max scaling with clamping; a degenerate range scales to 0
double scaled(double v, double lo, double hi) {
  if (!(hi > lo)) return 0.0;
  return std::clamp((v - lo) / (hi - lo), 0.0, 1.0);
}

}  // namespace

double score_prediction(const Prediction& p, const ObjectiveSpec& spec) {
  const double sd = scaled(p.delivery, spec.min_delivery, spec.max_delivery);
  const double so = scaled(p.overhead, spec.min_overhead, spec.max_overhead);
  return spec.weight_delivery * (1.0 - sd) + spec.weight_overhead * so;
}

double objective(const std::vector<double>& x, const ObjectiveSpec& spec,
                 const ParamBox& box) {
  if (!box.contains(x)) {
    fail(OptError::Code::OutOfBounds, "candidate lies outside the box");
  }
  return score_prediction(predict_targets(x, spec), spec);
}

Recommendation recommend(const ObjectiveSpec& spec, const ParamBox& box,
                         const DEConfig& cfg) {
  Recommendation rec;
  rec.de = differential_evolution(
      [&](const std::vector<double>& x) { return objective(x, spec, box); },
      box, cfg);
  rec.x = rec.de.best;
  rec.score = rec.de.best_score;
  rec.predicted = predict_targets(rec.x, spec);
  return rec;
}

sim::ScenarioConfig decode_scenario(const std::vector<double>& x,
                                    const sim::ScenarioConfig& base) {
  if (x.size() != 8) {
    fail(OptError::Code::BadConfig, "expected an 8-dimensional vector");
  }
  std::array<double, 8> row;
  std::copy(x.begin(), x.end(), row.begin());
  return ml::scenario_from_features(row, base);
}

ValidationOutcome recommend_and_validate(const ObjectiveSpec& spec,
                                         const ParamBox& box,
                                         const DEConfig& cfg,
                                         const sim::Trace& trace,
                                         const sim::ScenarioConfig& base) {
  ValidationOutcome out;
  out.rec = recommend(spec, box, cfg);
  const auto scenario = decode_scenario(out.rec.x, base);
  out.simulated = sim::run(scenario, trace).report;
  return out;
}

}  // namespace dtn::opt
