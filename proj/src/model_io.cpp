#include "dtn/model_io.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "dtn/text.hpp"

namespace dtn::ml {

namespace {

using text::format_double;
using text::parse_double;
using text::parse_int;
using text::split_ws;
using text::trim;

constexpr const char* kMagic = "dtnopt-model v1";

[[noreturn]] void fail(const std::string& msg) {
  throw MlError(MlError::Code::BadFormat, "model file: " + msg);
}

void write_trees(const std::vector<DecisionTree>& trees, std::ostream& out) {
  out << "trees " << trees.size() << '\n';
  for (std::size_t t = 0; t < trees.size(); ++t) {
    out << "tree " << t << ' ' << trees[t].nodes.size() << '\n';
    for (const auto& n : trees[t].nodes) {
      if (n.feature < 0) {
        out << "leaf " << format_double(n.value) << '\n';
      } else {
        out << "split " << n.feature << ' ' << format_double(n.threshold)
            << ' ' << n.left << ' ' << n.right << '\n';
      }
    }
  }
}

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  std::vector<std::string> next() {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      const auto t = trim(line);
      if (t.empty() || t.front() == '#') continue;
      std::vector<std::string> toks;
      for (const auto tok : split_ws(t)) toks.emplace_back(tok);
      return toks;
    }
    fail("unexpected end of file at line " + std::to_string(line_no_));
  }

  std::vector<std::string> expect(const std::string& keyword,
                                  std::size_t n_args) {
    auto toks = next();
    if (toks.empty() || toks[0] != keyword || toks.size() != n_args + 1) {
      fail("expected '" + keyword + "' record at line " +
           std::to_string(line_no_));
    }
    return toks;
  }

  int line_no() const { return line_no_; }

 private:
  std::istream& in_;
  int line_no_ = 0;
};

double num(const std::string& tok) {
  const auto v = parse_double(tok);
  if (!v) fail("bad number '" + tok + "'");
  return *v;
}

int integer(const std::string& tok) {
  const auto v = parse_int(tok);
  if (!v) fail("bad integer '" + tok + "'");
  return static_cast<int>(*v);
}

std::vector<DecisionTree> read_trees(LineReader& reader) {
  const auto count = integer(reader.expect("trees", 1)[1]);
  std::vector<DecisionTree> trees;
  trees.reserve(static_cast<std::size_t>(count));
  for (int t = 0; t < count; ++t) {
    const auto head = reader.expect("tree", 2);
    if (integer(head[1]) != t) fail("tree records out of order");
    const auto n_nodes = integer(head[2]);
    DecisionTree tree;
    for (int i = 0; i < n_nodes; ++i) {
      const auto toks = reader.next();
      DecisionTree::Node node;
      if (toks[0] == "leaf" && toks.size() == 2) {
        node.value = num(toks[1]);
      } else if (toks[0] == "split" && toks.size() == 5) {
        node.feature = integer(toks[1]);
        node.threshold = num(toks[2]);
        node.left = integer(toks[3]);
        node.right = integer(toks[4]);
      } else {
        fail("bad node record");
      }
      tree.nodes.push_back(node);
    }
    trees.push_back(std::move(tree));
  }
  return trees;
}

}  // namespace

void save_model(const Model& model, std::ostream& out) {
  if (!model.fitted()) {
    throw MlError(MlError::Code::UnfittedModel, "cannot save an unfitted model");
  }
  out << kMagic << '\n';
  out << "family " << family_token(model.params.family) << '\n';
  out << "target " << (model.target_name.empty() ? "-" : model.target_name)
      << '\n';
  out << "seed " << model.seed << '\n';
  out << "features " << model.feature_names.size();
  for (const auto& name : model.feature_names) out << ' ' << name;
  out << '\n';

  if (model.params.family == ModelFamily::RandomForest) {
    const auto& p = model.params.rf;
    out << "rf_params " << p.n_estimators << ' '
        << max_features_token(p.max_features) << ' ' << p.max_depth << ' '
        << p.min_samples_split << ' ' << p.min_samples_leaf << ' '
        << (p.bootstrap ? 1 : 0) << '\n';
    out << "importance_raw";
    for (const double v : model.rf.importance_raw) out << ' ' << format_double(v);
    out << '\n';
    write_trees(model.rf.trees, out);
  } else {
    const auto& p = model.params.gbm;
    out << "gbm_params " << p.n_estimators << ' '
        << format_double(p.learning_rate) << ' ' << p.max_depth << ' '
        << format_double(p.subsample) << ' ' << p.min_samples_split << ' '
        << p.min_samples_leaf << ' ' << max_features_token(p.max_features)
        << '\n';
    out << "importance_raw";
    for (const double v : model.gbm.importance_raw) out << ' ' << format_double(v);
    out << '\n';
    out << "f0 " << format_double(model.gbm.f0) << '\n';
    out << "scales";
    for (const double v : model.gbm.stage_scale) out << ' ' << format_double(v);
    out << '\n';
    write_trees(model.gbm.stages, out);
  }
  out << "end\n";
}

void save_model_file(const Model& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail("cannot write '" + path + "'");
  save_model(model, out);
}

Model load_model(std::istream& in) {
  std::string magic;
  if (!std::getline(in, magic) || trim(magic) != kMagic) {
    fail("missing magic header");
  }
  LineReader reader(in);
  Model model;

  model.params.family = parse_family(reader.expect("family", 1)[1]);
  const auto target = reader.expect("target", 1)[1];
  model.target_name = target == "-" ? "" : target;
  model.seed = static_cast<std::uint64_t>(num(reader.expect("seed", 1)[1]));

  auto features = reader.next();
  if (features.empty() || features[0] != "features") fail("expected features");
  const auto n_features = integer(features[1]);
  if (static_cast<int>(features.size()) != n_features + 2) {
    fail("feature name count mismatch");
  }
  for (int i = 0; i < n_features; ++i) {
    model.feature_names.push_back(features[static_cast<std::size_t>(i) + 2]);
  }

  const auto read_importance = [&]() {
    auto toks = reader.next();
    if (toks.empty() || toks[0] != "importance_raw") fail("expected importance_raw");
    std::vector<double> raw;
    for (std::size_t i = 1; i < toks.size(); ++i) raw.push_back(num(toks[i]));
    return raw;
  };

  if (model.params.family == ModelFamily::RandomForest) {
    const auto p = reader.expect("rf_params", 6);
    model.params.rf.n_estimators = integer(p[1]);
    model.params.rf.max_features = parse_max_features(p[2]);
    model.params.rf.max_depth = integer(p[3]);
    model.params.rf.min_samples_split = integer(p[4]);
    model.params.rf.min_samples_leaf = integer(p[5]);
    model.params.rf.bootstrap = integer(p[6]) != 0;
    model.rf.params = model.params.rf;
    model.rf.seed = model.seed;
    model.rf.importance_raw = read_importance();
    model.rf.trees = read_trees(reader);
    if (model.rf.trees.empty()) fail("forest holds no trees");
  } else {
    const auto p = reader.expect("gbm_params", 7);
    model.params.gbm.n_estimators = integer(p[1]);
    model.params.gbm.learning_rate = num(p[2]);
    model.params.gbm.max_depth = integer(p[3]);
    model.params.gbm.subsample = num(p[4]);
    model.params.gbm.min_samples_split = integer(p[5]);
    model.params.gbm.min_samples_leaf = integer(p[6]);
    model.params.gbm.max_features = parse_max_features(p[7]);
    model.gbm.params = model.params.gbm;
    model.gbm.seed = model.seed;
    model.gbm.importance_raw = read_importance();
    model.gbm.f0 = num(reader.expect("f0", 1)[1]);
    auto scales = reader.next();
    if (scales.empty() || scales[0] != "scales") fail("expected scales");
    for (std::size_t i = 1; i < scales.size(); ++i) {
      model.gbm.stage_scale.push_back(num(scales[i]));
    }
    model.gbm.stages = read_trees(reader);
    if (model.gbm.stages.size() != model.gbm.stage_scale.size()) {
      fail("stage/scale count mismatch");
    }
    model.gbm.is_fitted = true;
  }
  reader.expect("end", 0);
  return model;
}

Model load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open '" + path + "'");
  return load_model(in);
}

}  // namespace dtn::ml
