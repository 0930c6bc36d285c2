#include "dtn/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "dtn/dataset.hpp"
#include "dtn/engine.hpp"
#include "dtn/experiment.hpp"
#include "dtn/metrics.hpp"
#include "dtn/ml.hpp"
#include "dtn/model_io.hpp"
#include "dtn/optimize.hpp"
#include "dtn/rng.hpp"
#include "dtn/routing.hpp"
#include "dtn/scenario.hpp"
#include "dtn/text.hpp"
#include "dtn/trace.hpp"

namespace dtn::cli {

namespace {

using text::format_double;
using text::parse_double;
using text::split_on;
using text::split_ws;
using text::trim;

[[noreturn]] void usage_error(const std::string& msg) {
  throw CLI::ValidationError(msg);
}

std::pair<double, double> parse_pair(const std::string& raw, const char* what) {
  const auto parts = split_on(raw, ',');
  if (parts.size() == 2) {
    const auto a = parse_double(trim(parts[0]));
    const auto b = parse_double(trim(parts[1]));
    if (a && b) return {*a, *b};
  }
  usage_error(std::string(what) + " expects 'a,b', got '" + raw + "'");
}

// "knob=lo:hi"
std::tuple<std::string, double, double> parse_range(const std::string& raw) {
  const auto eq = raw.find('=');
  const auto colon = raw.find(':', eq == std::string::npos ? 0 : eq);
  if (eq != std::string::npos && colon != std::string::npos) {
    const auto lo = parse_double(trim(std::string_view(raw).substr(eq + 1, colon - eq - 1)));
    const auto hi = parse_double(trim(std::string_view(raw).substr(colon + 1)));
    if (lo && hi) return {std::string(trim(std::string_view(raw).substr(0, eq))), *lo, *hi};
  }
  usage_error("range expects 'knob=lo:hi', got '" + raw + "'");
}

trace::CivilDate parse_date(const std::string& raw) {
  const auto parts = split_on(raw, '-');
  if (parts.size() == 3) {
    const auto y = text::parse_int(trim(parts[0]));
    const auto m = text::parse_int(trim(parts[1]));
    const auto d = text::parse_int(trim(parts[2]));
    if (y && m && d) {
      return trace::CivilDate{static_cast<int>(*y), static_cast<int>(*m),
                              static_cast<int>(*d)};
    }
  }
  usage_error("date expects YYYY-MM-DD, got '" + raw + "'");
}

sim::Trace load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace file '" + path + "'");
  const auto parsed = trace::parse_external_trace(in);
  return sim::Trace::from_samples(parsed.samples);
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << content;
}

// ---------------------------------------------------------------------------
// convert
// ---------------------------------------------------------------------------

struct ConvertArgs {
  std::string input, out, day, world, geo;
  std::string columns = "id,lat,lon,occupancy,time";
  long utc_offset = 0;
  std::uint64_t seed = 1;
};

std::vector<trace::GeoFix> read_fixes(const std::string& path,
                                      const std::string& columns) {
  enum class Col { Id, Lat, Lon, Time, Occupancy, Skip };
  std::vector<Col> layout;
  for (const auto tok : split_on(columns, ',')) {
    const auto t = trim(tok);
    if (t == "id") layout.push_back(Col::Id);
    else if (t == "lat") layout.push_back(Col::Lat);
    else if (t == "lon") layout.push_back(Col::Lon);
    else if (t == "time") layout.push_back(Col::Time);
    else if (t == "occupancy") layout.push_back(Col::Occupancy);
    else if (t == "skip") layout.push_back(Col::Skip);
    else usage_error("unknown column tag '" + std::string(t) + "'");
  }

  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open input file '" + path + "'");
  std::vector<trace::GeoFix> fixes;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    std::vector<std::string_view> cells;
    if (t.find(',') != std::string_view::npos) {
      cells = split_on(t, ',');
    } else {
      cells = split_ws(t);
    }
    if (cells.size() != layout.size()) {
      throw std::runtime_error("line " + std::to_string(line_no) +
                               ": expected " + std::to_string(layout.size()) +
                               " columns, got " + std::to_string(cells.size()));
    }
    trace::GeoFix fix;
    for (std::size_t c = 0; c < layout.size(); ++c) {
      const auto cell = trim(cells[c]);
      const auto numeric = [&]() {
        const auto v = parse_double(cell);
        if (!v) {
          throw std::runtime_error("line " + std::to_string(line_no) +
                                   ": non-numeric cell '" + std::string(cell) + "'");
        }
        return *v;
      };
      switch (layout[c]) {
        case Col::Id: fix.taxi_id = std::string(cell); break;
        case Col::Lat: fix.latitude = numeric(); break;
        case Col::Lon: fix.longitude = numeric(); break;
        case Col::Time: fix.unix_time = numeric(); break;
        case Col::Occupancy: fix.occupancy = numeric() != 0; break;
        case Col::Skip: break;
      }
    }
    fixes.push_back(std::move(fix));
  }
  return fixes;
}

int cmd_convert(const ConvertArgs& args, std::ostream& out) {
  const auto fixes = read_fixes(args.input, args.columns);
  const auto day = parse_date(args.day);
  const auto [world_w, world_h] = parse_pair(args.world, "--world");

  trace::GeoBounds geo;
  if (!args.geo.empty()) {
    const auto parts = split_on(args.geo, ',');
    if (parts.size() != 4) usage_error("--geo expects minLat,minLon,maxLat,maxLon");
    const auto v = [&](int i) {
      const auto p = parse_double(trim(parts[static_cast<std::size_t>(i)]));
      if (!p) usage_error("--geo expects numeric bounds");
      return *p;
    };
    geo = trace::GeoBounds{v(0), v(2), v(1), v(3)};
  } else {
    // tight box over the day's fixes
    bool first = true;
    for (const auto& f : fixes) {
      if (!(trace::civil_from_unix(f.unix_time, args.utc_offset) == day)) continue;
      if (first) {
        geo = trace::GeoBounds{f.latitude, f.latitude, f.longitude, f.longitude};
        first = false;
      } else {
        geo.min_lat = std::min(geo.min_lat, f.latitude);
        geo.max_lat = std::max(geo.max_lat, f.latitude);
        geo.min_lon = std::min(geo.min_lon, f.longitude);
        geo.max_lon = std::max(geo.max_lon, f.longitude);
      }
    }
  }

  const auto samples = trace::convert_taxi_dataset(
      fixes, day, geo, world_w, world_h, args.seed, args.utc_offset);
  write_file(args.out, trace::write_external_trace(samples));

  const auto bounds = trace::compute_bounds(samples);
  std::set<std::string> nodes;
  for (const auto& s : samples) nodes.insert(s.node_id);
  out << "samples=" << samples.size() << '\n'
      << "nodes=" << nodes.size() << '\n'
      << "bounds=" << format_double(bounds.min_time) << ' '
      << format_double(bounds.max_time) << ' ' << format_double(bounds.min_x)
      << ' ' << format_double(bounds.max_x) << ' '
      << format_double(bounds.min_y) << ' ' << format_double(bounds.max_y)
      << '\n'
      << "out=" << args.out << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// gen-trace
// ---------------------------------------------------------------------------

struct GenTraceArgs {
  std::string out;
  int nodes = 10;
  double duration = 3600;
  std::string world = "1000,1000";
  std::string speed = "0.5,1.5";
  std::string pause = "0,60";
  double period = 1.0;
  std::uint64_t seed = 1;
};

int cmd_gen_trace(const GenTraceArgs& args, std::ostream& out) {
  trace::SyntheticTraceSpec spec;
  spec.n_nodes = args.nodes;
  spec.duration = args.duration;
  std::tie(spec.world_w, spec.world_h) = parse_pair(args.world, "--world");
  std::tie(spec.speed_min, spec.speed_max) = parse_pair(args.speed, "--speed");
  std::tie(spec.pause_min, spec.pause_max) = parse_pair(args.pause, "--pause");
  spec.sample_period = args.period;
  spec.seed = args.seed;

  const auto samples = trace::generate_synthetic_trace(spec);
  write_file(args.out, trace::write_external_trace(samples));
  const auto bounds = trace::compute_bounds(samples);
  out << "samples=" << samples.size() << '\n'
      << "nodes=" << args.nodes << '\n'
      << "bounds=" << format_double(bounds.min_time) << ' '
      << format_double(bounds.max_time) << ' ' << format_double(bounds.min_x)
      << ' ' << format_double(bounds.max_x) << ' '
      << format_double(bounds.min_y) << ' ' << format_double(bounds.max_y)
      << '\n'
      << "out=" << args.out << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string config;
  std::string trace_path;
  std::string log_path;
};

int cmd_simulate(const SimulateArgs& args, std::ostream& out, std::ostream& err) {
  const auto settings = sim::parse_settings_file(args.config);
  std::string trace_file = args.trace_path;
  if (trace_file.empty() && settings.movement_file) {
    trace_file = *settings.movement_file;
  }
  if (trace_file.empty()) {
    usage_error("no trace: set Movement.file in the config or pass --trace");
  }
  for (const auto& w : settings.config.range_warnings()) {
    err << "warning: " << w << '\n';
  }
  const auto trace = load_trace(trace_file);
  const auto result = sim::run(settings.config, trace);
  result.report.write_kv(out);
  if (!args.log_path.empty()) {
    std::ostringstream os;
    result.log.write_text(os, trace.node_names);
    write_file(args.log_path, os.str());
  }
  return 0;
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

struct SweepArgs {
  std::string trace_path, out, config;
  int runs = 100;
  std::uint64_t seed = 1;
  std::string mode = "uniform";
  int levels = 2;
  int jobs = 1;
  double time_step = 0;   // 0: keep config/default
  double duration = 0;    // 0: trace span
  std::vector<std::string> ranges;
};

sim::ScenarioConfig base_engine_config(const std::string& config_path,
                                       double time_step, double duration) {
  sim::ScenarioConfig base;
  if (!config_path.empty()) {
    base = sim::parse_settings_file(config_path).config;
  }
  if (time_step > 0) base.time_step = time_step;
  if (duration > 0) base.sim_duration = duration;
  return base;
}

int cmd_sweep(const SweepArgs& args, std::ostream& out, std::ostream& err) {
  exp::SweepPlan plan;
  plan.runs = args.runs;
  plan.master_seed = args.seed;
  plan.grid_levels = args.levels;
  if (args.mode == "uniform") plan.mode = exp::SweepPlan::Mode::UniformRandom;
  else if (args.mode == "grid") plan.mode = exp::SweepPlan::Mode::Grid;
  else usage_error("--mode expects uniform or grid");
  if (args.runs < 1) usage_error("--runs must be at least 1");
  for (const auto& r : args.ranges) {
    const auto [knob, lo, hi] = parse_range(r);
    plan.set_range(knob, lo, hi);
  }

  const auto base = base_engine_config(args.config, args.time_step, args.duration);
  const auto trace = load_trace(args.trace_path);
  const auto outcome = exp::run_sweep(plan, trace, base, args.jobs);

  for (std::size_t i = 0; i < outcome.run_errors.size(); ++i) {
    if (!outcome.run_errors[i].empty()) {
      err << "run " << i << " failed: " << outcome.run_errors[i] << '\n';
    }
  }
  std::ostringstream csv;
  outcome.dataset.write_csv(csv);
  write_file(args.out, csv.str());
  out << "rows=" << outcome.dataset.n() << '\n' << "out=" << args.out << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// train / tune / select shared pieces
// ---------------------------------------------------------------------------

struct ModelArgs {
  std::string data, model = "rf", target = ml::kTargetDelivery;
  std::uint64_t seed = 1;
  double split = -1;  // default depends on the family
  std::string out;
  // hyperparameters; -1/empty means family default
  int trees = -1, depth = -1, min_split = -1, min_leaf = -1;
  std::string max_features;
  int bootstrap = -1;
  double learning_rate = -1, subsample = -1;
};

ml::ModelParams resolve_params(const ModelArgs& args) {
  ml::ModelParams params;
  params.family = ml::parse_family(args.model);
  auto& rf = params.rf;
  auto& gbm = params.gbm;
  if (args.trees >= 0) { rf.n_estimators = args.trees; gbm.n_estimators = args.trees; }
  if (args.depth >= 0) { rf.max_depth = args.depth; gbm.max_depth = args.depth; }
  if (args.min_split >= 0) { rf.min_samples_split = args.min_split; gbm.min_samples_split = args.min_split; }
  if (args.min_leaf >= 0) { rf.min_samples_leaf = args.min_leaf; gbm.min_samples_leaf = args.min_leaf; }
  if (!args.max_features.empty()) {
    rf.max_features = ml::parse_max_features(args.max_features);
    gbm.max_features = rf.max_features;
  }
  if (args.bootstrap >= 0) rf.bootstrap = args.bootstrap != 0;
  if (args.learning_rate > 0) gbm.learning_rate = args.learning_rate;
  if (args.subsample > 0) gbm.subsample = args.subsample;
  return params;
}

std::pair<ml::Matrix, std::vector<double>> load_clean(const std::string& path,
                                                      const std::string& target) {
  const auto dataset = ml::Dataset::read_csv_file(path);
  auto [X, y] = dataset.clean(target);
  if (X.rows < 2) {
    throw ml::MlError(ml::MlError::Code::TooFewRows,
                      "dataset holds fewer than 2 usable rows for target '" +
                          target + "'");
  }
  return {std::move(X), std::move(y)};
}

ml::Model finish_model(ml::Model model, const std::string& target) {
  model.target_name = target;
  model.feature_names.assign(ml::kFeatureNames.begin(), ml::kFeatureNames.end());
  return model;
}

void print_eval(std::ostream& out, const char* tag, const ml::EvalMetrics& m) {
  out << "mse_" << tag << '=' << format_double(m.mse) << '\n'
      << "rmse_" << tag << '=' << format_double(m.rmse) << '\n'
      << "r2_" << tag << '=' << format_double(m.r_squared) << '\n';
}

ml::Matrix gather_rows(const ml::Matrix& X, const std::vector<std::size_t>& rows) {
  ml::Matrix out(rows.size(), X.cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy(X.row(rows[i]), X.row(rows[i]) + X.cols,
              out.data.begin() + static_cast<std::ptrdiff_t>(i * X.cols));
  }
  return out;
}

std::vector<double> gather(const std::vector<double>& y,
                           const std::vector<std::size_t>& rows) {
  std::vector<double> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) out[i] = y[rows[i]];
  return out;
}

std::vector<double> predict_all(const ml::Model& model, const ml::Matrix& X) {
  std::vector<double> pred(X.rows);
  for (std::size_t i = 0; i < X.rows; ++i) pred[i] = model.predict_row(X.row(i));
  return pred;
}

int cmd_train(const ModelArgs& args, std::ostream& out) {
  const auto params = resolve_params(args);
  auto [X, y] = load_clean(args.data, args.target);

  // study splits: 80/20 for the forest, 70/30 for the gbm
  double split = args.split;
  if (split <= 0) {
    split = params.family == ml::ModelFamily::RandomForest ? 0.2 : 0.3;
  }
  const auto [train_idx, test_idx] =
      ml::train_test_split(X.rows, split, rng::derive(args.seed, 7));
  if (train_idx.empty() || test_idx.empty()) {
    usage_error("split leaves an empty train or test set");
  }
  const auto train_x = gather_rows(X, train_idx);
  const auto train_y = gather(y, train_idx);
  const auto test_x = gather_rows(X, test_idx);
  const auto test_y = gather(y, test_idx);

  const auto model = finish_model(
      ml::fit_model(train_x, train_y, params, rng::derive(args.seed, 11)),
      args.target);

  out << "model=" << ml::family_token(params.family) << '\n'
      << "target=" << args.target << '\n'
      << "rows=" << X.rows << '\n'
      << "train_rows=" << train_x.rows << '\n'
      << "test_rows=" << test_x.rows << '\n';
  print_eval(out, "train", ml::evaluate(train_y, predict_all(model, train_x)));
  print_eval(out, "test", ml::evaluate(test_y, predict_all(model, test_x)));
  if (!args.out.empty()) {
    ml::save_model_file(model, args.out);
    out << "out=" << args.out << '\n';
  }
  return 0;
}

struct TuneArgs {
  ModelArgs base;
  int folds = 5;
  std::string grid;
};

ml::GridSpec parse_grid(const std::string& raw) {
  ml::GridSpec grid;
  for (const auto axis : split_on(raw, ';')) {
    const auto a = trim(axis);
    if (a.empty()) continue;
    const auto eq = a.find('=');
    if (eq == std::string_view::npos) usage_error("grid axis needs name=v1,v2");
    ml::GridAxis out;
    out.name = std::string(trim(a.substr(0, eq)));
    for (const auto v : split_on(a.substr(eq + 1), ',')) {
      out.values.emplace_back(trim(v));
    }
    if (out.values.empty()) usage_error("grid axis '" + out.name + "' is empty");
    grid.push_back(std::move(out));
  }
  if (grid.empty()) usage_error("empty grid");
  return grid;
}

ml::GridSpec default_grid(ml::ModelFamily family) {
  if (family == ml::ModelFamily::RandomForest) {
    return {
        {"n_estimators", {"15", "50"}},
        {"max_depth", {"10", "12"}},
        {"min_samples_split", {"10", "20"}},
        {"min_samples_leaf", {"15", "20"}},
    };
  }
  return {
      {"learning_rate", {"0.04", "0.1"}},
      {"max_depth", {"2", "3"}},
      {"subsample", {"0.12", "1"}},
      {"min_samples_leaf", {"5", "6"}},
  };
}

int cmd_tune(const TuneArgs& args, std::ostream& out) {
  const auto params = resolve_params(args.base);
  auto [X, y] = load_clean(args.base.data, args.base.target);
  const auto grid = args.grid.empty() ? default_grid(params.family)
                                      : parse_grid(args.grid);

  const auto result =
      ml::grid_search(X, y, params, grid, args.folds, args.base.seed);

  for (std::size_t i = 0; i < result.table.size(); ++i) {
    const auto& combo = result.table[i];
    out << "cv";
    for (std::size_t a = 0; a < grid.size(); ++a) {
      out << ' ' << grid[a].name << '=' << combo.values[a];
    }
    out << " mean_mse=" << format_double(combo.mean_mse)
        << " std_mse=" << format_double(combo.std_mse) << '\n';
  }
  const auto& best = result.table[result.best];
  out << "best";
  for (std::size_t a = 0; a < grid.size(); ++a) {
    out << ' ' << grid[a].name << '=' << best.values[a];
  }
  out << " mean_mse=" << format_double(best.mean_mse) << '\n';

  const auto model = finish_model(
      ml::fit_model(X, y, result.best_params, rng::derive(args.base.seed, 11)),
      args.base.target);
  print_eval(out, "refit", ml::evaluate(y, predict_all(model, X)));
  if (!args.base.out.empty()) {
    ml::save_model_file(model, args.base.out);
    out << "out=" << args.base.out << '\n';
  }
  return 0;
}

struct SelectArgs {
  ModelArgs base;
  int k = 5;
};

int cmd_select(const SelectArgs& args, std::ostream& out) {
  const auto params = resolve_params(args.base);
  auto [X, y] = load_clean(args.base.data, args.base.target);
  const auto model = finish_model(
      ml::fit_model(X, y, params, rng::derive(args.base.seed, 11)),
      args.base.target);

  const auto importance = ml::feature_importance(model);
  if (!importance.defined) out << "importance_undefined=1\n";
  for (std::size_t i = 0; i < importance.weights.size(); ++i) {
    out << "importance " << ml::kFeatureNames[i] << '='
        << format_double(importance.weights[i]) << '\n';
  }
  const auto top =
      ml::select_top_k(importance.weights, static_cast<std::size_t>(args.k));
  out << "selected=";
  for (std::size_t i = 0; i < top.size(); ++i) {
    if (i) out << ',';
    out << ml::kFeatureNames[top[i]];
  }
  out << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// optimize / validate
// ---------------------------------------------------------------------------

struct OptimizeArgs {
  std::string data, model_delivery, model_overhead;
  std::string weights = "0.5,0.5";
  int pop = 0;
  int gens = 200;
  std::uint64_t de_seed = 1;
  std::vector<std::string> bounds;
  // validate extras
  std::string trace_path, config;
  double time_step = 0, duration = 0;
  std::uint64_t sim_seed = 1;
  bool append = false;
};

struct PreparedOpt {
  ml::Model model_d, model_o;
  opt::ObjectiveSpec spec;
  opt::ParamBox box;                          // free dims only
  std::vector<std::optional<double>> pinned;  // full 8, set where lo == hi
  opt::DEConfig de;
};

std::vector<double> expand(const PreparedOpt& prep, const std::vector<double>& sub) {
  std::vector<double> full;
  full.reserve(8);
  std::size_t j = 0;
  for (const auto& pin : prep.pinned) {
    full.push_back(pin ? *pin : sub[j++]);
  }
  return full;
}

PreparedOpt prepare_opt(const OptimizeArgs& args) {
  PreparedOpt prep;
  prep.model_d = ml::load_model_file(args.model_delivery);
  prep.model_o = ml::load_model_file(args.model_overhead);
  prep.spec.model_delivery = &prep.model_d;
  prep.spec.model_overhead = &prep.model_o;
  std::tie(prep.spec.weight_delivery, prep.spec.weight_overhead) =
      parse_pair(args.weights, "--weights");
  if (prep.spec.weight_delivery < 0 || prep.spec.weight_overhead < 0) {
    usage_error("--weights must be non-negative");
  }
  const double wsum = prep.spec.weight_delivery + prep.spec.weight_overhead;
  if (!(wsum > 0)) usage_error("--weights must not both be zero");
  prep.spec.weight_delivery /= wsum;
  prep.spec.weight_overhead /= wsum;

  const auto dataset = ml::Dataset::read_csv_file(args.data);
  opt::freeze_scaling(prep.spec, dataset);

  auto full_box = opt::default_param_box();
  for (const auto& b : args.bounds) {
    const auto [knob, lo, hi] = parse_range(b);
    bool found = false;
    for (auto& dim : full_box.dims) {
      if (dim.name == knob) {
        dim.low = lo;
        dim.high = hi;
        found = true;
        break;
      }
    }
    if (!found) usage_error("unknown knob '" + knob + "'");
  }

  // single-point bounds pin the dimension; DE runs over the rest
  prep.pinned.assign(8, std::nullopt);
  for (std::size_t i = 0; i < full_box.dims.size(); ++i) {
    const auto& dim = full_box.dims[i];
    if (dim.low == dim.high) {
      prep.pinned[i] = dim.kind == opt::DimKind::Integer
                           ? std::round(dim.low)
                           : dim.low;
    } else {
      prep.box.dims.push_back(dim);
    }
  }

  prep.de.population = args.pop;
  prep.de.max_generations = args.gens;
  prep.de.seed = args.de_seed;
  return prep;
}

opt::Recommendation run_recommend(const PreparedOpt& prep) {
  opt::Recommendation rec;
  if (prep.box.dims.empty()) {
    // everything pinned: the recommendation is that point
    rec.x = expand(prep, {});
    rec.predicted = opt::predict_targets(rec.x, prep.spec);
    rec.score = opt::score_prediction(rec.predicted, prep.spec);
    rec.de.best = rec.x;
    rec.de.best_score = rec.score;
    rec.de.history = {rec.score};
    rec.de.evaluations = 1;
    return rec;
  }
  // DE explores the free dims; the objective sees the re-expanded vector
  const auto wrapped = [&](const std::vector<double>& sub) {
    if (!prep.box.contains(sub)) {
      throw opt::OptError(opt::OptError::Code::OutOfBounds,
                          "candidate lies outside the box");
    }
    return opt::score_prediction(
        opt::predict_targets(expand(prep, sub), prep.spec), prep.spec);
  };
  rec.de = opt::differential_evolution(wrapped, prep.box, prep.de);
  rec.x = expand(prep, rec.de.best);
  rec.score = rec.de.best_score;
  rec.predicted = opt::predict_targets(rec.x, prep.spec);
  return rec;
}

void print_recommendation(std::ostream& out, const opt::Recommendation& rec) {
  for (std::size_t i = 0; i < 8; ++i) {
    if (ml::kFeatureNames[i] == std::string("Group.router")) {
      out << "recommend." << ml::kFeatureNames[i] << '='
          << (rec.x[i] >= 0.5 ? "MaxPropRouter" : "EpidemicRouter") << '\n';
    } else {
      out << "recommend." << ml::kFeatureNames[i] << '='
          << format_double(rec.x[i]) << '\n';
    }
  }
  out << "predicted_delivery_prob=" << format_double(rec.predicted.delivery) << '\n'
      << "predicted_overhead_ratio=" << format_double(rec.predicted.overhead) << '\n'
      << "score=" << format_double(rec.score) << '\n'
      << "evaluations=" << rec.de.evaluations << '\n'
      << "generations=" << (rec.de.history.empty() ? 0 : rec.de.history.size() - 1)
      << '\n';
}

int cmd_optimize(const OptimizeArgs& args, std::ostream& out) {
  const auto prep = prepare_opt(args);
  const auto rec = run_recommend(prep);
  print_recommendation(out, rec);
  return 0;
}

int cmd_validate(const OptimizeArgs& args, std::ostream& out) {
  const auto prep = prepare_opt(args);
  auto rec = run_recommend(prep);

  auto base = base_engine_config(args.config, args.time_step, args.duration);
  base.seed = args.sim_seed;
  const auto trace = load_trace(args.trace_path);
  const auto scenario = opt::decode_scenario(rec.x, base);
  const auto report = sim::run(scenario, trace).report;

  print_recommendation(out, rec);
  const auto opt_str = [](const std::optional<double>& v) {
    return v ? format_double(*v) : std::string("NaN");
  };
  out << "simulated_delivery_prob=" << opt_str(report.delivery_prob) << '\n'
      << "simulated_overhead_ratio=" << opt_str(report.overhead_ratio) << '\n';
  if (report.delivery_prob) {
    out << "delta_delivery_prob="
        << format_double(*report.delivery_prob - rec.predicted.delivery) << '\n';
  }
  if (report.overhead_ratio) {
    out << "delta_overhead_ratio="
        << format_double(*report.overhead_ratio - rec.predicted.overhead) << '\n';
  }

  if (args.append) {
    std::ofstream csv(args.data, std::ios::app);
    if (!csv) throw std::runtime_error("cannot append to '" + args.data + "'");
    for (const double v : ml::feature_row(scenario)) {
      csv << format_double(v) << ',';
    }
    csv << opt_str(report.delivery_prob) << ',' << opt_str(report.overhead_ratio)
        << '\n';
    out << "appended=" << args.data << '\n';
  }
  return 0;
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

struct AnalyzeArgs {
  std::string data;
  std::string out_prefix;
};

int cmd_analyze(const AnalyzeArgs& args, std::ostream& out) {
  const auto dataset = ml::Dataset::read_csv_file(args.data);

  // correlation table over rows where both targets are defined
  metrics::Table table;
  for (const char* name : ml::kFeatureNames) table.names.push_back(name);
  table.names.push_back(ml::kTargetDelivery);
  table.names.push_back(ml::kTargetOverhead);
  table.columns.assign(10, {});
  for (std::size_t i = 0; i < dataset.n(); ++i) {
    if (!dataset.delivery_prob[i] || !dataset.overhead_ratio[i]) continue;
    for (std::size_t c = 0; c < 8; ++c) {
      table.columns[c].push_back(dataset.features[i][c]);
    }
    table.columns[8].push_back(*dataset.delivery_prob[i]);
    table.columns[9].push_back(*dataset.overhead_ratio[i]);
  }

  std::ostringstream pearson_csv;
  const auto r = metrics::pearson_matrix(table);
  pearson_csv << "";
  for (const auto& name : table.names) pearson_csv << ',' << name;
  pearson_csv << '\n';
  for (std::size_t i = 0; i < table.names.size(); ++i) {
    pearson_csv << table.names[i];
    for (std::size_t j = 0; j < table.names.size(); ++j) {
      pearson_csv << ',' << (r[i][j] ? format_double(*r[i][j]) : "NaN");
    }
    pearson_csv << '\n';
  }

  std::ostringstream box_csv;
  box_csv << "metric,subset,count,minimum,q1,median,q3,maximum\n";
  const auto box_line = [&](const char* metric, const char* subset,
                            const std::vector<double>& values) {
    if (values.empty()) return;
    const auto b = metrics::box_stats(values);
    box_csv << metric << ',' << subset << ',' << values.size() << ','
            << format_double(b.minimum) << ',' << format_double(b.q1) << ','
            << format_double(b.median) << ',' << format_double(b.q3) << ','
            << format_double(b.maximum) << '\n';
  };
  const auto gather_target = [&](bool overhead, int router) {
    // router: -1 all, 0 epidemic, 1 maxprop
    std::vector<double> values;
    for (std::size_t i = 0; i < dataset.n(); ++i) {
      const auto& v = overhead ? dataset.overhead_ratio[i] : dataset.delivery_prob[i];
      if (!v) continue;
      if (router >= 0 && static_cast<int>(dataset.features[i][4]) != router) continue;
      values.push_back(*v);
    }
    return values;
  };
  for (const bool overhead : {false, true}) {
    const char* metric = overhead ? ml::kTargetOverhead : ml::kTargetDelivery;
    box_line(metric, "all", gather_target(overhead, -1));
    box_line(metric, "EpidemicRouter", gather_target(overhead, 0));
    box_line(metric, "MaxPropRouter", gather_target(overhead, 1));
  }

  if (!args.out_prefix.empty()) {
    write_file(args.out_prefix + ".pearson.csv", pearson_csv.str());
    write_file(args.out_prefix + ".box.csv", box_csv.str());
    out << "out=" << args.out_prefix << ".pearson.csv," << args.out_prefix
        << ".box.csv\n";
  } else {
    out << "# pearson\n" << pearson_csv.str() << "# box_stats\n" << box_csv.str();
  }
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"delay-tolerant-network experimentation toolkit"};
  app.require_subcommand(1);

  ConvertArgs convert_args;
  auto* convert = app.add_subcommand(
      "convert", "convert raw GPS fixes into an external movement trace");
  convert->add_option("--input", convert_args.input)->required();
  convert->add_option("--out", convert_args.out)->required();
  convert->add_option("--day", convert_args.day, "UTC date YYYY-MM-DD")->required();
  convert->add_option("--world", convert_args.world, "world size W,H in meters")->required();
  convert->add_option("--geo", convert_args.geo, "minLat,minLon,maxLat,maxLon");
  convert->add_option("--columns", convert_args.columns,
                      "input column layout (id,lat,lon,time,occupancy,skip)");
  convert->add_option("--utc-offset", convert_args.utc_offset,
                      "seconds added before the date filter");
  convert->add_option("--seed", convert_args.seed);

  GenTraceArgs gen_args;
  auto* gen = app.add_subcommand("gen-trace", "generate a random-waypoint trace");
  gen->add_option("--out", gen_args.out)->required();
  gen->add_option("--nodes", gen_args.nodes);
  gen->add_option("--duration", gen_args.duration);
  gen->add_option("--world", gen_args.world);
  gen->add_option("--speed", gen_args.speed, "m/s range min,max");
  gen->add_option("--pause", gen_args.pause, "seconds range min,max");
  gen->add_option("--period", gen_args.period, "sample period seconds");
  gen->add_option("--seed", gen_args.seed);

  SimulateArgs sim_args;
  auto* simulate = app.add_subcommand("simulate", "run one scenario");
  simulate->add_option("--config", sim_args.config)->required();
  simulate->add_option("--trace", sim_args.trace_path, "overrides Movement.file");
  simulate->add_option("--log", sim_args.log_path, "write the event log here");

  SweepArgs sweep_args;
  auto* sweep = app.add_subcommand("sweep", "run many scenarios into a dataset");
  sweep->add_option("--trace", sweep_args.trace_path)->required();
  sweep->add_option("--out", sweep_args.out)->required();
  sweep->add_option("--runs", sweep_args.runs);
  sweep->add_option("--seed", sweep_args.seed);
  sweep->add_option("--mode", sweep_args.mode, "uniform or grid");
  sweep->add_option("--levels", sweep_args.levels, "grid levels per knob");
  sweep->add_option("--jobs", sweep_args.jobs, "worker threads");
  sweep->add_option("--config", sweep_args.config, "base engine settings");
  sweep->add_option("--time-step", sweep_args.time_step);
  sweep->add_option("--duration", sweep_args.duration);
  sweep->add_option("--range", sweep_args.ranges, "knob=lo:hi, repeatable");

  const auto add_model_options = [](CLI::App* cmd, ModelArgs& margs) {
    cmd->add_option("--data", margs.data)->required();
    cmd->add_option("--model", margs.model, "rf or gbm");
    cmd->add_option("--target", margs.target, "delivery_prob or overhead_ratio");
    cmd->add_option("--seed", margs.seed);
    cmd->add_option("--out", margs.out, "save the fitted model here");
    cmd->add_option("--trees", margs.trees, "n_estimators");
    cmd->add_option("--depth", margs.depth, "max_depth");
    cmd->add_option("--min-split", margs.min_split, "min_samples_split");
    cmd->add_option("--min-leaf", margs.min_leaf, "min_samples_leaf");
    cmd->add_option("--max-features", margs.max_features, "auto, sqrt or log2");
    cmd->add_option("--bootstrap", margs.bootstrap, "0 or 1 (rf)");
    cmd->add_option("--learning-rate", margs.learning_rate, "gbm");
    cmd->add_option("--subsample", margs.subsample, "gbm");
  };

  ModelArgs train_args;
  auto* train = app.add_subcommand("train", "fit one surrogate and report metrics");
  add_model_options(train, train_args);
  train->add_option("--split", train_args.split, "test fraction");

  TuneArgs tune_args;
  auto* tune = app.add_subcommand("tune", "grid search with k-fold CV");
  add_model_options(tune, tune_args.base);
  tune->add_option("--folds", tune_args.folds);
  tune->add_option("--grid", tune_args.grid, "name=v1,v2;name2=w1,w2");

  SelectArgs select_args;
  auto* select = app.add_subcommand("select", "feature importances and top-k");
  add_model_options(select, select_args.base);
  select->add_option("--k", select_args.k);

  const auto add_opt_options = [](CLI::App* cmd, OptimizeArgs& oargs) {
    cmd->add_option("--data", oargs.data, "dataset for scaling ranges")->required();
    cmd->add_option("--model-delivery", oargs.model_delivery)->required();
    cmd->add_option("--model-overhead", oargs.model_overhead)->required();
    cmd->add_option("--weights", oargs.weights, "wd,wo");
    cmd->add_option("--pop", oargs.pop, "population (0: 15 per dimension)");
    cmd->add_option("--gens", oargs.gens, "max generations");
    cmd->add_option("--de-seed", oargs.de_seed);
    cmd->add_option("--bounds", oargs.bounds, "knob=lo:hi, repeatable");
  };

  OptimizeArgs optimize_args;
  auto* optimize = app.add_subcommand("optimize", "DE over the surrogates");
  add_opt_options(optimize, optimize_args);

  OptimizeArgs validate_args;
  auto* validate = app.add_subcommand(
      "validate", "optimize, then re-simulate the recommendation");
  add_opt_options(validate, validate_args);
  validate->add_option("--trace", validate_args.trace_path)->required();
  validate->add_option("--config", validate_args.config, "base engine settings");
  validate->add_option("--time-step", validate_args.time_step);
  validate->add_option("--duration", validate_args.duration);
  validate->add_option("--sim-seed", validate_args.sim_seed);
  validate->add_flag("--append", validate_args.append,
                     "append the validated row to --data");

  AnalyzeArgs analyze_args;
  auto* analyze = app.add_subcommand("analyze", "Pearson matrix and box stats");
  analyze->add_option("--data", analyze_args.data)->required();
  analyze->add_option("--out", analyze_args.out_prefix, "output file prefix");

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("dtnopt");
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return 1;
  }

  try {
    if (convert->parsed()) return cmd_convert(convert_args, out);
    if (gen->parsed()) return cmd_gen_trace(gen_args, out);
    if (simulate->parsed()) return cmd_simulate(sim_args, out, err);
    if (sweep->parsed()) return cmd_sweep(sweep_args, out, err);
    if (train->parsed()) return cmd_train(train_args, out);
    if (tune->parsed()) return cmd_tune(tune_args, out);
    if (select->parsed()) return cmd_select(select_args, out);
    if (optimize->parsed()) return cmd_optimize(optimize_args, out);
    if (validate->parsed()) return cmd_validate(validate_args, out);
    if (analyze->parsed()) return cmd_analyze(analyze_args, out);
  } catch (const CLI::ValidationError& e) {
    err << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const sim::ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

}  // namespace dtn::cli
