#include "dtn/dataset.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>

#include "dtn/text.hpp"

namespace dtn::ml {

namespace {

using text::format_double;
using text::parse_double;
using text::split_on;
using text::trim;

[[noreturn]] void fail(const std::string& msg) {
  throw MlError(MlError::Code::BadFormat, msg);
}

std::string opt_str(const std::optional<double>& v) {
  return v ? format_double(*v) : "NaN";
}

// mirrors the study's cleaning: strip unit tags, map router tokens to 0/1,
// reduce "min,max" waitTime pairs to their first number
double clean_cell(std::string_view raw, const std::string& column, int line) {
  auto v = trim(raw);
  if (v == "NaN" || v == "nan") return std::nan("");
  if (v == "EpidemicRouter") return 0.0;
  if (v == "MaxPropRouter") return 1.0;
  std::size_t end = v.size();
  while (end > 0 && (std::isalpha(static_cast<unsigned char>(v[end - 1])))) {
    --end;
  }
  const auto num = parse_double(v.substr(0, end));
  if (!num) {
    fail("line " + std::to_string(line) + ": column '" + column +
         "' holds non-numeric value '" + std::string(raw) + "'");
  }
  return *num;
}

}  // namespace

std::array<double, 8> feature_row(const sim::ScenarioConfig& cfg) {
  return {cfg.transmit_speed,
          cfg.transmit_range,
          cfg.buffer_size,
          cfg.wait_time,
          cfg.router == sim::RouterKind::MaxProp ? 1.0 : 0.0,
          cfg.msg_ttl,
          cfg.event_interval,
          cfg.event_size};
}

sim::ScenarioConfig scenario_from_features(const std::array<double, 8>& row,
                                           const sim::ScenarioConfig& base) {
  sim::ScenarioConfig cfg = base;
  cfg.transmit_speed = row[0];
  cfg.transmit_range = row[1];
  cfg.buffer_size = row[2];
  cfg.wait_time = row[3];
  cfg.router = row[4] >= 0.5 ? sim::RouterKind::MaxProp : sim::RouterKind::Epidemic;
  cfg.msg_ttl = row[5];
  cfg.event_interval = row[6];
  cfg.event_size = row[7];
  return cfg;
}

void Dataset::append(const sim::ScenarioConfig& cfg,
                     std::optional<double> delivery,
                     std::optional<double> overhead) {
  features.push_back(feature_row(cfg));
  delivery_prob.push_back(delivery);
  overhead_ratio.push_back(overhead);
}

std::vector<std::optional<double>> Dataset::target(
    const std::string& target_name) const {
  if (target_name == kTargetDelivery) return delivery_prob;
  if (target_name == kTargetOverhead) return overhead_ratio;
  fail("unknown target '" + target_name + "'");
}

std::pair<Matrix, std::vector<double>> Dataset::clean(
    const std::string& target_name) const {
  const auto raw = target(target_name);
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i].has_value()) keep.push_back(i);
  }
  Matrix X(keep.size(), 8);
  std::vector<double> y(keep.size());
  for (std::size_t i = 0; i < keep.size(); ++i) {
    for (std::size_t c = 0; c < 8; ++c) X.at(i, c) = features[keep[i]][c];
    y[i] = *raw[keep[i]];
  }
  return {std::move(X), std::move(y)};
}

void Dataset::write_csv(std::ostream& out) const {
  for (std::size_t c = 0; c < kFeatureNames.size(); ++c) {
    out << kFeatureNames[c] << ',';
  }
  out << kTargetDelivery << ',' << kTargetOverhead << '\n';
  for (std::size_t i = 0; i < n(); ++i) {
    for (const double v : features[i]) out << format_double(v) << ',';
    out << opt_str(delivery_prob[i]) << ',' << opt_str(overhead_ratio[i])
        << '\n';
  }
}

Dataset Dataset::read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) fail("empty dataset file");

  auto header = split_on(trim(line), ',');
  std::map<std::string, std::size_t> column;
  for (std::size_t i = 0; i < header.size(); ++i) {
    auto name = std::string(trim(header[i]));
    if (name.rfind("EventsI.", 0) == 0) name = "Events1." + name.substr(8);
    column[name] = i;
  }
  std::vector<std::size_t> feature_cols;
  for (const char* name : kFeatureNames) {
    const auto it = column.find(name);
    if (it == column.end()) fail(std::string("missing column '") + name + "'");
    feature_cols.push_back(it->second);
  }
  for (const char* name : {kTargetDelivery, kTargetOverhead}) {
    if (!column.count(name)) fail(std::string("missing column '") + name + "'");
  }

  Dataset ds;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty()) continue;
    const auto cells = split_on(t, ',');
    if (cells.size() != header.size()) {
      fail("line " + std::to_string(line_no) + ": expected " +
           std::to_string(header.size()) + " cells, got " +
           std::to_string(cells.size()));
    }
    std::array<double, 8> row{};
    for (std::size_t c = 0; c < 8; ++c) {
      row[c] = clean_cell(cells[feature_cols[c]],
                          kFeatureNames[c], line_no);
      if (std::isnan(row[c])) {
        fail("line " + std::to_string(line_no) + ": feature '" +
             kFeatureNames[c] + "' is missing");
      }
    }
    const auto target_of = [&](const char* name) -> std::optional<double> {
      const double v = clean_cell(cells[column.at(name)], name, line_no);
      if (std::isnan(v)) return std::nullopt;
      return v;
    };
    ds.features.push_back(row);
    ds.delivery_prob.push_back(target_of(kTargetDelivery));
    ds.overhead_ratio.push_back(target_of(kTargetOverhead));
  }
  return ds;
}

Dataset Dataset::read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open dataset file '" + path + "'");
  return read_csv(in);
}

}  // namespace dtn::ml
