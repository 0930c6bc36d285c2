#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

// From-scratch tree-ensemble regressors: CART decision trees grown by
// variance reduction, bagged into a random forest, and boosted into a GBM
// with squared loss. Plus the evaluation and model-selection machinery
// (train/test split, k-fold grid search, impurity-based feature importance).
namespace dtn::ml {

class MlError : public std::runtime_error {
 public:
  enum class Code {
    EmptyTrainingSet,
    LengthMismatch,
    ZeroVarianceTarget,
    InvalidFraction,
    InvalidSubsample,
    TooFewRows,
    KTooLarge,
    UnfittedModel,
    BadFormat,
  };

  MlError(Code code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  Code code() const { return code_; }

 private:
  Code code_;
};

/// Row-major feature matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  const double* row(std::size_t r) const { return data.data() + r * cols; }
};

enum class MaxFeatures { All, Sqrt, Log2 };  // "auto" = all, for regression

const char* max_features_token(MaxFeatures m);
MaxFeatures parse_max_features(const std::string& token);

/// Candidate features per split: auto=d, sqrt=floor(sqrt(d)), log2=max(1,floor(log2 d)).
int feature_subset_size(MaxFeatures rule, int d);

struct TreeParams {
  int max_depth = 12;
  int min_samples_split = 2;
  int min_samples_leaf = 1;
};

struct DecisionTree {
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0;
    int left = -1;
    int right = -1;
    double value = 0;  // leaf prediction: mean of training targets
  };

  std::vector<Node> nodes;

  bool fitted() const { return !nodes.empty(); }
  double predict_row(const double* row) const;
};

/// Greedy variance-reduction CART. Candidate thresholds are midpoints of
/// adjacent distinct sorted values; ties break toward the lowest feature
/// index, then the smallest threshold. `rows` may repeat indices (bootstrap
/// weighting); empty pointer means all rows. Split gains accumulate into
/// `importance` (size cols) when given.
DecisionTree fit_tree(const Matrix& X, const std::vector<double>& y,
                      const TreeParams& params, MaxFeatures rule,
                      std::uint64_t seed,
                      const std::vector<std::size_t>* rows = nullptr,
                      std::vector<double>* importance = nullptr);

struct RandomForestParams {
  int n_estimators = 50;
  MaxFeatures max_features = MaxFeatures::Log2;
  int max_depth = 12;
  int min_samples_split = 20;
  int min_samples_leaf = 20;
  bool bootstrap = true;
};

struct RandomForestModel {
  RandomForestParams params;
  std::uint64_t seed = 0;
  std::vector<DecisionTree> trees;
  std::vector<double> importance_raw;  // summed split gains per feature

  bool fitted() const { return !trees.empty(); }
  /// Arithmetic mean of the tree predictions.
  double predict_row(const double* row) const;
};

RandomForestModel fit_rf(const Matrix& X, const std::vector<double>& y,
                         const RandomForestParams& params, std::uint64_t seed);

struct GbmParams {
  int n_estimators = 100;
  double learning_rate = 0.04;
  int max_depth = 2;
  double subsample = 0.1;  // stage sample fraction, without replacement
  int min_samples_split = 10;
  int min_samples_leaf = 6;
  MaxFeatures max_features = MaxFeatures::All;
};

struct GbmModel {
  GbmParams params;
  std::uint64_t seed = 0;
  double f0 = 0;  // constant initial prediction: the target mean
  std::vector<DecisionTree> stages;
  std::vector<double> stage_scale;  // per-stage step scale (= learning rate)
  std::vector<double> importance_raw;
  bool is_fitted = false;

  bool fitted() const { return is_fitted; }
  double predict_row(const double* row) const;
};

/// Stagewise residual fitting under squared loss: F0 = mean(y), then M trees
/// fit to residuals on a seeded subsample, each applied with the learning
/// rate. Leaf values are residual means, the closed-form line search.
GbmModel fit_gbm(const Matrix& X, const std::vector<double>& y,
                 const GbmParams& params, std::uint64_t seed);

enum class ModelFamily { RandomForest, Gbm };

const char* family_token(ModelFamily f);  // "rf" / "gbm"
ModelFamily parse_family(const std::string& token);

struct ModelParams {
  ModelFamily family = ModelFamily::RandomForest;
  RandomForestParams rf;
  GbmParams gbm;
};

/// Either ensemble behind one prediction surface.
struct Model {
  ModelParams params;
  std::uint64_t seed = 0;
  std::vector<std::string> feature_names;
  std::string target_name;
  RandomForestModel rf;
  GbmModel gbm;

  bool fitted() const {
    return params.family == ModelFamily::RandomForest ? rf.fitted()
                                                      : gbm.fitted();
  }
  double predict_row(const double* row) const {
    return params.family == ModelFamily::RandomForest ? rf.predict_row(row)
                                                      : gbm.predict_row(row);
  }
  const std::vector<double>& importance_raw() const {
    return params.family == ModelFamily::RandomForest ? rf.importance_raw
                                                      : gbm.importance_raw;
  }
};

Model fit_model(const Matrix& X, const std::vector<double>& y,
                const ModelParams& params, std::uint64_t seed);

struct EvalMetrics {
  double mse = 0;
  double rmse = 0;
  double r_squared = 0;
};

EvalMetrics evaluate(const std::vector<double>& y_true,
                     const std::vector<double>& y_pred);

/// Seeded shuffle, then |test| = round(n * test_fraction) rows.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> train_test_split(
    std::size_t n, double test_fraction, std::uint64_t seed);

struct GridAxis {
  std::string name;
  std::vector<std::string> values;
};
using GridSpec = std::vector<GridAxis>;

void apply_param(RandomForestParams& p, const std::string& name,
                 const std::string& value);
void apply_param(GbmParams& p, const std::string& name,
                 const std::string& value);

struct CvCombo {
  std::vector<std::string> values;  // aligned with the grid axes
  double mean_mse = 0;
  double std_mse = 0;
};

struct GridSearchResult {
  GridSpec grid;
  std::vector<CvCombo> table;  // enumeration order, last axis fastest
  std::size_t best = 0;
  ModelParams best_params;
};

/// Balanced contiguous blocks: sizes differ by at most one, larger first.
std::vector<std::size_t> fold_sizes(std::size_t n, int k);

/// Mean MSE over k seeded contiguous-after-shuffle folds per combination;
/// ties keep the earliest enumerated combination.
GridSearchResult grid_search(const Matrix& X, const std::vector<double>& y,
                             const ModelParams& base, const GridSpec& grid,
                             int k, std::uint64_t seed);

struct ImportanceResult {
  std::vector<double> weights;  // non-negative, sum 1 when defined
  bool defined = false;         // false when no split ever happened
};

ImportanceResult feature_importance(const Model& model);

/// Indices of the k largest weights, ties by column order.
std::vector<std::size_t> select_top_k(const std::vector<double>& weights,
                                      std::size_t k);

}  // namespace dtn::ml
