#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "dtn/metrics.hpp"
#include "dtn/rng.hpp"

using namespace dtn::metrics;

TEST_CASE("metrics: delivery probability") {
  CHECK(delivery_probability(0, 10) == 0.0);
  CHECK(delivery_probability(7, 7) == 1.0);
  // the mean the study reports for MaxProp, reconstructed from raw counts
  CHECK(delivery_probability(2257, 10000) == 2257.0 / 10000.0);
  CHECK(delivery_probability(2257, 10000) == doctest::Approx(0.2257));
  CHECK_THROWS_AS(delivery_probability(0, 0), MetricsError);
  CHECK_THROWS_AS(delivery_probability(3, 2), MetricsError);
}

TEST_CASE("metrics: average latency") {
  CHECK(average_latency({{0, 5}, {0, 15}}) == 10.0);
  CHECK(average_latency({{3, 3}}) == 0.0);
  CHECK_THROWS_AS(average_latency({}), MetricsError);

  // independent direct-summation oracle over random pairs
  dtn::rng::Rng rng(5);
  std::vector<std::pair<double, double>> pairs;
  double total = 0;
  for (int i = 0; i < 1000; ++i) {
    const double created = rng.uniform(0, 1000);
    const double delay = rng.uniform(0, 500);
    pairs.push_back({created, created + delay});
    total += delay;
  }
  CHECK(average_latency(pairs) ==
        doctest::Approx(total / 1000.0).epsilon(1e-9));
}

TEST_CASE("metrics: overhead ratio") {
  CHECK(overhead_ratio(100, 20) == 4.0);
  CHECK(overhead_ratio(20, 20) == 0.0);
  CHECK(!overhead_ratio(5, 0).has_value());
  CHECK_THROWS_AS(overhead_ratio(1, 2), MetricsError);
}

TEST_CASE("metrics: box stats use type-7 interpolation") {
  const auto b = box_stats({1, 2, 3, 4});
  CHECK(b.minimum == 1.0);
  CHECK(b.q1 == 1.75);
  CHECK(b.median == 2.5);
  CHECK(b.q3 == 3.25);
  CHECK(b.maximum == 4.0);

  const auto single = box_stats({5});
  CHECK(single.minimum == 5.0);
  CHECK(single.q1 == 5.0);
  CHECK(single.median == 5.0);
  CHECK(single.q3 == 5.0);
  CHECK(single.maximum == 5.0);

  CHECK_THROWS_AS(box_stats({}), MetricsError);
}

TEST_CASE("metrics: box stats match an independent oracle on random draws") {
  dtn::rng::Rng rng(17);
  std::vector<double> values;
  for (int i = 0; i < 500; ++i) values.push_back(rng.uniform(-10, 10));

  // sort-and-interpolate oracle, written against the type-7 definition
  auto sorted = values;
  std::sort(sorted.begin(), sorted.end());
  const auto oracle = [&](double p) {
    const double h = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const double frac = h - std::floor(h);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
  };

  const auto b = box_stats(values);
  CHECK(b.minimum == sorted.front());
  CHECK(b.q1 == oracle(0.25));
  CHECK(b.median == oracle(0.5));
  CHECK(b.q3 == oracle(0.75));
  CHECK(b.maximum == sorted.back());
}

TEST_CASE("metrics: box stats shift under translation") {
  dtn::rng::Rng rng(3);
  std::vector<double> values;
  for (int i = 0; i < 101; ++i) values.push_back(rng.uniform(0, 1));
  const auto base = box_stats(values);
  for (auto& v : values) v += 2.5;
  const auto shifted = box_stats(values);
  CHECK(shifted.median == doctest::Approx(base.median + 2.5).epsilon(1e-12));
  CHECK(shifted.q1 == doctest::Approx(base.q1 + 2.5).epsilon(1e-12));
  CHECK(shifted.q3 == doctest::Approx(base.q3 + 2.5).epsilon(1e-12));
}

TEST_CASE("metrics: pearson matrix basics") {
  Table t;
  t.names = {"x", "y", "z", "c"};
  std::vector<double> x, y, z, c;
  dtn::rng::Rng rng(23);
  for (int i = 0; i < 64; ++i) {
    const double v = rng.uniform(-5, 5);
    x.push_back(v);
    y.push_back(2 * v + 3);
    z.push_back(-v);
    c.push_back(7.0);
  }
  t.columns = {x, y, z, c};
  const auto r = pearson_matrix(t);

  CHECK(*r[0][0] == 1.0);
  CHECK(*r[0][1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(*r[0][2] == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(*r[1][2] == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(!r[0][3].has_value());  // constant column
  CHECK(!r[3][1].has_value());
  CHECK(*r[3][3] == 1.0);  // unit diagonal regardless

  // symmetry and range
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) {
      CHECK(r[i][j].has_value() == r[j][i].has_value());
      if (r[i][j]) {
        CHECK(*r[i][j] == *r[j][i]);
        CHECK(*r[i][j] >= -1.0);
        CHECK(*r[i][j] <= 1.0);
      }
    }
  }
}

TEST_CASE("metrics: pearson is invariant under positive affine rescaling") {
  dtn::rng::Rng rng(31);
  std::vector<double> x, y;
  for (int i = 0; i < 200; ++i) {
    x.push_back(rng.uniform(0, 1));
    y.push_back(rng.uniform(0, 1) + 0.5 * x.back());
  }
  Table t1{{"x", "y"}, {x, y}};
  auto scaled = x;
  for (auto& v : scaled) v = 13.0 * v + 7.0;
  Table t2{{"x", "y"}, {scaled, y}};
  const auto r1 = pearson_matrix(t1);
  const auto r2 = pearson_matrix(t2);
  CHECK(std::abs(*r1[0][1] - *r2[0][1]) < 1e-12);
}

TEST_CASE("metrics: pearson rejects short tables") {
  Table t{{"a"}, {{1.0}}};
  CHECK_THROWS_AS(pearson_matrix(t), MetricsError);
}
