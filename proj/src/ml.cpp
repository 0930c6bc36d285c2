#include "dtn/ml.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

#include "dtn/kernels.hpp"
#include "dtn/rng.hpp"
#include "dtn/text.hpp"

namespace dtn::ml {

namespace {

[[noreturn]] void fail(MlError::Code code, const std::string& msg) {
  throw MlError(code, msg);
}

}  // namespace

const char* max_features_token(MaxFeatures m) {
  switch (m) {
    case MaxFeatures::All: return "auto";
    case MaxFeatures::Sqrt: return "sqrt";
    case MaxFeatures::Log2: return "log2";
  }
  return "?";
}

MaxFeatures parse_max_features(const std::string& token) {
  if (token == "auto" || token == "all") return MaxFeatures::All;
  if (token == "sqrt") return MaxFeatures::Sqrt;
  if (token == "log2") return MaxFeatures::Log2;
  fail(MlError::Code::BadFormat, "unknown max_features token '" + token + "'");
}

int feature_subset_size(MaxFeatures rule, int d) {
  switch (rule) {
    case MaxFeatures::All:
      return d;
    case MaxFeatures::Sqrt:
      return std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(d)))));
    case MaxFeatures::Log2:
      return std::max(1, static_cast<int>(std::floor(std::log2(static_cast<double>(d)))));
  }
  return d;
}

const char* family_token(ModelFamily f) {
  return f == ModelFamily::RandomForest ? "rf" : "gbm";
}

ModelFamily parse_family(const std::string& token) {
  if (token == "rf") return ModelFamily::RandomForest;
  if (token == "gbm") return ModelFamily::Gbm;
  fail(MlError::Code::BadFormat, "unknown model family '" + token + "'");
}

double DecisionTree::predict_row(const double* row) const {
  if (nodes.empty()) fail(MlError::Code::UnfittedModel, "tree not fitted");
  int i = 0;
  while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
    const auto& n = nodes[static_cast<std::size_t>(i)];
    i = row[n.feature] <= n.threshold ? n.left : n.right;
  }
  return nodes[static_cast<std::size_t>(i)].value;
}

namespace {

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& X, const std::vector<double>& y,
              const TreeParams& params, MaxFeatures rule, std::uint64_t seed,
              std::vector<double>* importance)
      : X_(X), y_(y), params_(params), rng_(seed), importance_(importance) {
    d_ = static_cast<int>(X.cols);
    subset_k_ = feature_subset_size(rule, d_);
  }

  DecisionTree build(std::vector<std::size_t> rows) {
    if (rows.empty()) {
      fail(MlError::Code::EmptyTrainingSet, "no rows to fit a tree on");
    }
    tree_.nodes.reserve(rows.size());
    grow(std::move(rows), 0);
    return std::move(tree_);
  }

 private:
  int leaf(double value) {
    DecisionTree::Node n;
    n.value = value;
    tree_.nodes.push_back(n);
    return static_cast<int>(tree_.nodes.size() - 1);
  }

  std::vector<int> candidate_features() {
    if (subset_k_ >= d_) {
      std::vector<int> all(static_cast<std::size_t>(d_));
      for (int f = 0; f < d_; ++f) all[static_cast<std::size_t>(f)] = f;
      return all;
    }
    // partial Fisher-Yates from the node's stream, then ascending order so
    // tie-breaks stay lowest-feature-first
    std::vector<int> pool(static_cast<std::size_t>(d_));
    for (int f = 0; f < d_; ++f) pool[static_cast<std::size_t>(f)] = f;
    for (int i = 0; i < subset_k_; ++i) {
      const auto j = i + static_cast<int>(rng_.below(
                             static_cast<std::uint64_t>(d_ - i)));
      std::swap(pool[static_cast<std::size_t>(i)],
                pool[static_cast<std::size_t>(j)]);
    }
    pool.resize(static_cast<std::size_t>(subset_k_));
    std::sort(pool.begin(), pool.end());
    return pool;
  }

  int grow(std::vector<std::size_t> rows, int depth) {
    const auto n = rows.size();
    double mean = 0;
    for (auto r : rows) mean += y_[r];
    mean /= static_cast<double>(n);

    double y_min = y_[rows[0]], y_max = y_[rows[0]];
    for (auto r : rows) {
      y_min = std::min(y_min, y_[r]);
      y_max = std::max(y_max, y_[r]);
    }
    const bool splittable =
        depth < params_.max_depth &&
        static_cast<int>(n) >= params_.min_samples_split &&
        static_cast<int>(n) >= 2 * params_.min_samples_leaf && y_min < y_max;
    if (!splittable) return leaf(mean);

    // centered targets keep the SSE arithmetic well conditioned
    std::vector<double> cy(n);
    for (std::size_t i = 0; i < n; ++i) cy[i] = y_[rows[i]] - mean;
    const double parent_sse = kernels::dot(cy.data(), cy.data(), n);
    const double total_sum = kernels::sum(cy.data(), cy.size());

    int best_feature = -1;
    double best_threshold = 0;
    double best_gain = 0;

    std::vector<std::pair<double, std::size_t>> order(n);  // (value, pos)
    for (int f : candidate_features()) {
      for (std::size_t i = 0; i < n; ++i) {
        order[i] = {X_.at(rows[i], static_cast<std::size_t>(f)), i};
      }
      std::sort(order.begin(), order.end());

      double left_sum = 0, left_sum2 = 0;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        const double v = cy[order[i].second];
        left_sum += v;
        left_sum2 += v * v;
        if (order[i].first == order[i + 1].first) continue;
        const auto n_left = i + 1;
        const auto n_right = n - n_left;
        if (static_cast<int>(n_left) < params_.min_samples_leaf ||
            static_cast<int>(n_right) < params_.min_samples_leaf) {
          continue;
        }
        const double right_sum = total_sum - left_sum;
        const double right_sum2 = parent_sse - left_sum2;
        const double sse_left =
            left_sum2 - left_sum * left_sum / static_cast<double>(n_left);
        const double sse_right =
            right_sum2 - right_sum * right_sum / static_cast<double>(n_right);
        const double gain = parent_sse - sse_left - sse_right;
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = f;
          best_threshold = (order[i].first + order[i + 1].first) / 2.0;
        }
      }
    }

    if (best_feature < 0) return leaf(mean);

    std::vector<std::size_t> left_rows, right_rows;
    left_rows.reserve(n);
    right_rows.reserve(n);
    for (auto r : rows) {
      (X_.at(r, static_cast<std::size_t>(best_feature)) <= best_threshold
           ? left_rows
           : right_rows)
          .push_back(r);
    }
    assert(!left_rows.empty() && !right_rows.empty());
    rows.clear();
    rows.shrink_to_fit();

    if (importance_) {
      (*importance_)[static_cast<std::size_t>(best_feature)] += best_gain;
    }

    DecisionTree::Node node;
    node.feature = best_feature;
    node.threshold = best_threshold;
    tree_.nodes.push_back(node);
    const auto index = static_cast<int>(tree_.nodes.size() - 1);
    const int left = grow(std::move(left_rows), depth + 1);
    const int right = grow(std::move(right_rows), depth + 1);
    tree_.nodes[static_cast<std::size_t>(index)].left = left;
    tree_.nodes[static_cast<std::size_t>(index)].right = right;
    return index;
  }

  const Matrix& X_;
  const std::vector<double>& y_;
  TreeParams params_;
  int d_ = 0;
  int subset_k_ = 0;
  rng::Rng rng_;
  std::vector<double>* importance_;
  DecisionTree tree_;
};

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i] = i;
  return rows;
}

}  // namespace

DecisionTree fit_tree(const Matrix& X, const std::vector<double>& y,
                      const TreeParams& params, MaxFeatures rule,
                      std::uint64_t seed, const std::vector<std::size_t>* rows,
                      std::vector<double>* importance) {
  if (X.rows == 0 || y.size() != X.rows) {
    fail(MlError::Code::EmptyTrainingSet,
         "training matrix and targets must be non-empty and aligned");
  }
  TreeBuilder builder(X, y, params, rule, seed, importance);
  return builder.build(rows ? *rows : all_rows(X.rows));
}

double RandomForestModel::predict_row(const double* row) const {
  if (!fitted()) fail(MlError::Code::UnfittedModel, "forest not fitted");
  double total = 0;
  for (const auto& tree : trees) total += tree.predict_row(row);
  return total / static_cast<double>(trees.size());
}

RandomForestModel fit_rf(const Matrix& X, const std::vector<double>& y,
                         const RandomForestParams& params, std::uint64_t seed) {
  if (X.rows == 0 || y.size() != X.rows) {
    fail(MlError::Code::EmptyTrainingSet, "empty training set");
  }
  if (params.n_estimators < 1) {
    fail(MlError::Code::BadFormat, "n_estimators must be at least 1");
  }
  RandomForestModel model;
  model.params = params;
  model.seed = seed;
  model.importance_raw.assign(X.cols, 0.0);

  const TreeParams tp{params.max_depth, params.min_samples_split,
                      params.min_samples_leaf};
  for (int t = 0; t < params.n_estimators; ++t) {
    // every tree draws from its own pre-derived seed stream
    const auto tree_seed = rng::derive(seed, static_cast<std::uint64_t>(t));
    std::vector<std::size_t> rows;
    if (params.bootstrap) {
      rng::Rng sampler(rng::derive(tree_seed, 0));
      rows.resize(X.rows);
      for (auto& r : rows) r = sampler.below(X.rows);
      std::sort(rows.begin(), rows.end());
    } else {
      rows = all_rows(X.rows);
    }
    model.trees.push_back(fit_tree(X, y, tp, params.max_features,
                                   rng::derive(tree_seed, 1), &rows,
                                   &model.importance_raw));
  }
  return model;
}

double GbmModel::predict_row(const double* row) const {
  if (!fitted()) fail(MlError::Code::UnfittedModel, "gbm not fitted");
  double value = f0;
  for (std::size_t m = 0; m < stages.size(); ++m) {
    value += stage_scale[m] * stages[m].predict_row(row);
  }
  return value;
}

GbmModel fit_gbm(const Matrix& X, const std::vector<double>& y,
                 const GbmParams& params, std::uint64_t seed) {
  if (X.rows == 0 || y.size() != X.rows) {
    fail(MlError::Code::EmptyTrainingSet, "empty training set");
  }
  if (!(params.subsample > 0) || params.subsample > 1) {
    fail(MlError::Code::InvalidSubsample, "subsample must be in (0, 1]");
  }
  if (!(params.learning_rate > 0)) {
    fail(MlError::Code::BadFormat, "learning_rate must be positive");
  }
  if (params.n_estimators < 0) {
    fail(MlError::Code::BadFormat, "n_estimators must be non-negative");
  }

  GbmModel model;
  model.params = params;
  model.seed = seed;
  model.importance_raw.assign(X.cols, 0.0);
  model.is_fitted = true;

  const auto n = X.rows;
  model.f0 = kernels::sum(y.data(), n) / static_cast<double>(n);

  std::vector<double> current(n, model.f0);
  std::vector<double> residual(n);
  const TreeParams tp{params.max_depth, params.min_samples_split,
                      params.min_samples_leaf};
  const auto m_rows = std::min<std::size_t>(
      n, std::max<std::size_t>(
             1, static_cast<std::size_t>(
                    std::llround(params.subsample * static_cast<double>(n)))));

  for (int m = 0; m < params.n_estimators; ++m) {
    const auto stage_seed = rng::derive(seed, 1000 + static_cast<std::uint64_t>(m));
    kernels::sub(residual.data(), y.data(), current.data(), n);

    std::vector<std::size_t> rows;
    if (m_rows == n) {
      rows = all_rows(n);
    } else {
      // without replacement, per stage
      rng::Rng sampler(rng::derive(stage_seed, 0));
      auto pool = all_rows(n);
      for (std::size_t i = 0; i < m_rows; ++i) {
        const auto j = i + sampler.below(n - i);
        std::swap(pool[i], pool[j]);
      }
      pool.resize(m_rows);
      std::sort(pool.begin(), pool.end());
      rows = std::move(pool);
    }

    auto tree = fit_tree(X, residual, tp, params.max_features,
                         rng::derive(stage_seed, 1), &rows,
                         &model.importance_raw);
    for (std::size_t i = 0; i < n; ++i) {
      current[i] += params.learning_rate * tree.predict_row(X.row(i));
    }
    model.stages.push_back(std::move(tree));
    model.stage_scale.push_back(params.learning_rate);
  }
  return model;
}

Model fit_model(const Matrix& X, const std::vector<double>& y,
                const ModelParams& params, std::uint64_t seed) {
  Model model;
  model.params = params;
  model.seed = seed;
  if (params.family == ModelFamily::RandomForest) {
    model.rf = fit_rf(X, y, params.rf, seed);
  } else {
    model.gbm = fit_gbm(X, y, params.gbm, seed);
  }
  return model;
}

EvalMetrics evaluate(const std::vector<double>& y_true,
                     const std::vector<double>& y_pred) {
  if (y_true.size() != y_pred.size()) {
    fail(MlError::Code::LengthMismatch, "prediction/target length mismatch");
  }
  if (y_true.empty()) {
    fail(MlError::Code::LengthMismatch, "empty evaluation vectors");
  }
  const auto n = y_true.size();
  EvalMetrics out;
  out.mse = kernels::sse(y_true.data(), y_pred.data(), n) /
            static_cast<double>(n);
  out.rmse = std::sqrt(out.mse);

  const double mean = kernels::sum(y_true.data(), n) / static_cast<double>(n);
  std::vector<double> centered(n);
  kernels::center(centered.data(), y_true.data(), mean, n);
  const double ss_tot = kernels::dot(centered.data(), centered.data(), n);
  if (ss_tot == 0.0) {
    fail(MlError::Code::ZeroVarianceTarget,
         "R^2 undefined for a constant target");
  }
  const double ss_res = kernels::sse(y_true.data(), y_pred.data(), n);
  out.r_squared = 1.0 - ss_res / ss_tot;
  return out;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> train_test_split(
    std::size_t n, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0) || !(test_fraction < 1)) {
    fail(MlError::Code::InvalidFraction, "test_fraction must be in (0, 1)");
  }
  auto idx = all_rows(n);
  rng::Rng rng(seed);
  rng.shuffle(idx);
  const auto n_test = static_cast<std::size_t>(
      std::llround(static_cast<double>(n) * test_fraction));
  std::vector<std::size_t> test(idx.begin(),
                                idx.begin() + static_cast<std::ptrdiff_t>(n_test));
  std::vector<std::size_t> train(idx.begin() + static_cast<std::ptrdiff_t>(n_test),
                                 idx.end());
  return {std::move(train), std::move(test)};
}

namespace {

int int_value(const std::string& value) {
  const auto v = text::parse_int(value);
  if (!v) fail(MlError::Code::BadFormat, "expected an integer, got '" + value + "'");
  return static_cast<int>(*v);
}

double double_value(const std::string& value) {
  const auto v = text::parse_double(value);
  if (!v) fail(MlError::Code::BadFormat, "expected a number, got '" + value + "'");
  return *v;
}

bool bool_value(const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  fail(MlError::Code::BadFormat, "expected a boolean, got '" + value + "'");
}

}  // namespace

void apply_param(RandomForestParams& p, const std::string& name,
                 const std::string& value) {
  if (name == "n_estimators") p.n_estimators = int_value(value);
  else if (name == "max_features") p.max_features = parse_max_features(value);
  else if (name == "max_depth") p.max_depth = int_value(value);
  else if (name == "min_samples_split") p.min_samples_split = int_value(value);
  else if (name == "min_samples_leaf") p.min_samples_leaf = int_value(value);
  else if (name == "bootstrap") p.bootstrap = bool_value(value);
  else fail(MlError::Code::BadFormat, "unknown rf parameter '" + name + "'");
}

void apply_param(GbmParams& p, const std::string& name,
                 const std::string& value) {
  if (name == "n_estimators") p.n_estimators = int_value(value);
  else if (name == "learning_rate") p.learning_rate = double_value(value);
  else if (name == "max_depth") p.max_depth = int_value(value);
  else if (name == "subsample") p.subsample = double_value(value);
  else if (name == "min_samples_split") p.min_samples_split = int_value(value);
  else if (name == "min_samples_leaf") p.min_samples_leaf = int_value(value);
  else if (name == "max_features") p.max_features = parse_max_features(value);
  else fail(MlError::Code::BadFormat, "unknown gbm parameter '" + name + "'");
}

std::vector<std::size_t> fold_sizes(std::size_t n, int k) {
  const auto uk = static_cast<std::size_t>(k);
  std::vector<std::size_t> sizes(uk, n / uk);
  for (std::size_t f = 0; f < n % uk; ++f) ++sizes[f];
  return sizes;
}

GridSearchResult grid_search(const Matrix& X, const std::vector<double>& y,
                             const ModelParams& base, const GridSpec& grid,
                             int k, std::uint64_t seed) {
  const auto n = X.rows;
  if (k < 2 || n < static_cast<std::size_t>(k)) {
    fail(MlError::Code::TooFewRows, "need at least k rows and k >= 2");
  }
  for (const auto& axis : grid) {
    if (axis.values.empty()) {
      fail(MlError::Code::BadFormat, "grid axis '" + axis.name + "' has no values");
    }
  }

  // seeded shuffle, then k near-equal contiguous blocks
  auto idx = all_rows(n);
  rng::Rng rng(rng::derive(seed, 101));
  rng.shuffle(idx);
  const auto uk = static_cast<std::size_t>(k);
  const auto sizes = fold_sizes(n, k);
  std::vector<std::vector<std::size_t>> folds(uk);
  std::size_t pos = 0;
  for (std::size_t f = 0; f < uk; ++f) {
    folds[f].assign(idx.begin() + static_cast<std::ptrdiff_t>(pos),
                    idx.begin() + static_cast<std::ptrdiff_t>(pos + sizes[f]));
    pos += sizes[f];
  }

  struct FoldData {
    Matrix train_x;
    std::vector<double> train_y;
    Matrix val_x;
    std::vector<double> val_y;
  };
  std::vector<FoldData> fold_data(uk);
  for (std::size_t f = 0; f < uk; ++f) {
    auto& fd = fold_data[f];
    const auto n_val = folds[f].size();
    fd.val_x = Matrix(n_val, X.cols);
    fd.val_y.resize(n_val);
    for (std::size_t i = 0; i < n_val; ++i) {
      const auto r = folds[f][i];
      std::copy(X.row(r), X.row(r) + X.cols, fd.val_x.data.begin() + static_cast<std::ptrdiff_t>(i * X.cols));
      fd.val_y[i] = y[r];
    }
    const auto n_train = n - n_val;
    fd.train_x = Matrix(n_train, X.cols);
    fd.train_y.resize(n_train);
    std::size_t w = 0;
    for (std::size_t g = 0; g < uk; ++g) {
      if (g == f) continue;
      for (const auto r : folds[g]) {
        std::copy(X.row(r), X.row(r) + X.cols, fd.train_x.data.begin() + static_cast<std::ptrdiff_t>(w * X.cols));
        fd.train_y[w] = y[r];
        ++w;
      }
    }
  }

  std::size_t total = 1;
  for (const auto& axis : grid) total *= axis.values.size();

  GridSearchResult result;
  result.grid = grid;
  result.best_params = base;
  const auto fit_seed = rng::derive(seed, 202);
  double best_mse = std::numeric_limits<double>::infinity();

  for (std::size_t combo = 0; combo < total; ++combo) {
    // mixed-radix decomposition, last axis fastest
    std::vector<std::string> values(grid.size());
    ModelParams params = base;
    std::size_t rem = combo;
    for (std::size_t a = grid.size(); a-- > 0;) {
      const auto vi = rem % grid[a].values.size();
      rem /= grid[a].values.size();
      values[a] = grid[a].values[vi];
      if (params.family == ModelFamily::RandomForest) {
        apply_param(params.rf, grid[a].name, values[a]);
      } else {
        apply_param(params.gbm, grid[a].name, values[a]);
      }
    }

    std::vector<double> fold_mse;
    fold_mse.reserve(uk);
    for (const auto& fd : fold_data) {
      const auto model = fit_model(fd.train_x, fd.train_y, params, fit_seed);
      std::vector<double> pred(fd.val_y.size());
      for (std::size_t i = 0; i < pred.size(); ++i) {
        pred[i] = model.predict_row(fd.val_x.row(i));
      }
      fold_mse.push_back(kernels::sse(fd.val_y.data(), pred.data(), pred.size()) /
                         static_cast<double>(pred.size()));
    }
    const double mean = kernels::sum(fold_mse.data(), fold_mse.size()) /
                        static_cast<double>(fold_mse.size());
    double var = 0;
    for (const double m : fold_mse) var += (m - mean) * (m - mean);
    var /= static_cast<double>(fold_mse.size());

    result.table.push_back(CvCombo{values, mean, std::sqrt(var)});
    if (mean < best_mse) {
      best_mse = mean;
      result.best = combo;
      result.best_params = params;
    }
  }
  return result;
}

ImportanceResult feature_importance(const Model& model) {
  if (!model.fitted()) fail(MlError::Code::UnfittedModel, "model not fitted");
  const auto& raw = model.importance_raw();
  ImportanceResult out;
  out.weights.assign(raw.size(), 0.0);
  const double total = kernels::sum(raw.data(), raw.size());
  if (total > 0) {
    out.defined = true;
    for (std::size_t i = 0; i < raw.size(); ++i) out.weights[i] = raw[i] / total;
  }
  return out;
}

std::vector<std::size_t> select_top_k(const std::vector<double>& weights,
                                      std::size_t k) {
  if (k > weights.size()) {
    fail(MlError::Code::KTooLarge, "k exceeds the number of features");
  }
  auto idx = all_rows(weights.size());
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return weights[a] > weights[b];
  });
  idx.resize(k);
  return idx;
}

}  // namespace dtn::ml
