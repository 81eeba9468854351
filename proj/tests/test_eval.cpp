// Copyright 2026 The lapboot Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "error.hpp"
#include "eval.hpp"
#include "rng.hpp"
#include "test_support.hpp"

using namespace lapboot;
using namespace lapboot::testing;

namespace {

// Two Gaussian blobs far apart along every coordinate.
void blobs(std::size_t n, std::size_t dim, double gap, std::uint64_t seed, Eigen::MatrixXd& x,
           std::vector<int>& y) {
  x = random_matrix(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim), seed);
  y.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = static_cast<int>(i % 2);
    if (y[i] == 1) x.row(static_cast<Eigen::Index>(i)).array() += gap;
  }
}

std::set<std::pair<NodeId, NodeId>> edge_set(const Graph& g) {
  std::set<std::pair<NodeId, NodeId>> s;
  for (const auto& e : g.edges()) s.emplace(e.lo, e.hi);
  return s;
}

}  // namespace

TEST_CASE("separable blobs are classified perfectly") {
  Eigen::MatrixXd x;
  std::vector<int> y;
  blobs(200, 4, 10.0, 1, x, y);
  const auto split = random_split(200, 0.3, 0.1, 7);
  CHECK(linear_probe(x, y, split).mean == 1.0);
}

TEST_CASE("labels can be arbitrary integers") {
  Eigen::MatrixXd x;
  std::vector<int> y;
  blobs(100, 3, 10.0, 1, x, y);
  for (auto& v : y) v = v == 0 ? -7 : 42;
  const auto model = fit_logistic(x, y);
  const auto pred = predict(model, x);
  CHECK(accuracy(pred, y) == 1.0);
  CHECK(model.classes == std::vector<int>{-7, 42});
}

TEST_CASE("random labels give chance accuracy") {
  const auto x = random_matrix(400, 5, 3u);
  Rng rng(9);
  std::vector<int> y(400);
  for (auto& v : y) v = rng.bernoulli(0.5) ? 1 : 0;
  const auto r = linear_probe_repeated(x, y, 0.5, 0.0, 10, 11);
  CHECK(r.values.size() == 10);
  CHECK(r.mean == doctest::Approx(0.5).epsilon(0.2));
  CHECK(r.std > 0.0);
}

TEST_CASE("logistic fit reaches a stationary point of the penalized loss") {
  Eigen::MatrixXd x;
  std::vector<int> y;
  blobs(60, 3, 0.7, 5, x, y);
  for (std::size_t i = 0; i < y.size(); i += 5) y[i] = 2;
  ProbeConfig cfg;
  cfg.l2 = 0.1;
  cfg.tol = 1e-14;
  cfg.max_iter = 20000;
  const auto m = fit_logistic(x, y, cfg);
  // Independent gradient evaluation on the standardized inputs.
  Eigen::MatrixXd z = (x.rowwise() - m.mean.transpose()).array().rowwise() / m.scale.transpose().array();
  Eigen::MatrixXd logits = (z * m.weights).rowwise() + m.bias;
  Eigen::MatrixXd p(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double mx = logits.row(i).maxCoeff();
    p.row(i) = (logits.row(i).array() - mx).exp();
    p.row(i) /= p.row(i).sum();
  }
  for (std::size_t i = 0; i < y.size(); ++i) p(static_cast<Eigen::Index>(i), y[i]) -= 1.0;
  const double n = static_cast<double>(y.size());
  const Eigen::MatrixXd gw = z.transpose() * p / n + cfg.l2 * m.weights;
  const Eigen::RowVectorXd gb = p.colwise().sum() / n;
  CHECK(gw.norm() < 1e-5);
  CHECK(gb.norm() < 1e-5);
}

TEST_CASE("single-class training split is a protocol error") {
  const auto x = random_matrix(10, 2, 1u);
  std::vector<int> y(10, 3);
  try {
    fit_logistic(x, y);
    FAIL("expected a protocol error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kProtocol);
  }
}

TEST_CASE("constant features do not break standardization") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Ones(20, 3);
  std::vector<int> y(20);
  for (int i = 0; i < 20; ++i) {
    y[i] = i % 2;
    x(i, 0) = y[i] ? 1.0 : -1.0;
  }
  const auto m = fit_logistic(x, y);
  CHECK(m.weights.allFinite());
  CHECK(accuracy(predict(m, x), y) == 1.0);
}

TEST_CASE("random split sizes and disjointness") {
  const auto s = random_split(101, 0.1, 0.1, 3);
  CHECK(s.train.size() == 10);
  CHECK(s.val.size() == 10);
  CHECK(s.test.size() == 81);
  std::set<std::size_t> all(s.train.begin(), s.train.end());
  all.insert(s.val.begin(), s.val.end());
  all.insert(s.test.begin(), s.test.end());
  CHECK(all.size() == 101);
  CHECK(random_split(101, 0.1, 0.1, 3).train == s.train);
  CHECK(random_split(101, 0.1, 0.1, 4).train != s.train);
  CHECK_THROWS_AS(random_split(10, 0.6, 0.5, 1), Error);
}

TEST_CASE("stratified folds partition every index and balance classes") {
  std::vector<int> y;
  for (int i = 0; i < 30; ++i) y.push_back(i < 20 ? 0 : 1);
  const auto folds = stratified_folds(y, 5, true, 2);
  CHECK(folds.size() == 5);
  std::vector<int> seen(30, 0);
  for (const auto& f : folds) {
    CHECK(f.size() == 6);
    int ones = 0;
    for (auto i : f) {
      ++seen[i];
      ones += y[i];
    }
    CHECK(ones == 2);
  }
  for (int s : seen) CHECK(s == 1);
  CHECK(stratified_folds(y, 5, true, 2) == folds);
  CHECK_THROWS_AS(stratified_folds(y, 1, true, 2), Error);
  try {
    stratified_folds(y, 31, true, 2);
    FAIL("expected a protocol error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kProtocol);
  }
}

TEST_CASE("two folds over duplicated halves score perfectly") {
  // Rows i and i + 20 are identical, with the same label; contiguous
  // unshuffled folds put one copy in each half.
  const auto base = random_matrix(20, 3, 5u);
  Eigen::MatrixXd x(40, 3);
  std::vector<int> y(40);
  for (int i = 0; i < 20; ++i) {
    x.row(i) = base.row(i);
    x.row(i + 20) = base.row(i);
  }
  for (int i = 0; i < 20; ++i) y[i] = y[i + 20] = base(i, 0) > 0 ? 1 : 0;
  const auto folds = stratified_folds(y, 2, false, 0);
  for (const auto& f : folds) {
    std::vector<Eigen::Index> keys;
    for (auto i : f) keys.push_back(static_cast<Eigen::Index>(i % 20));
    std::sort(keys.begin(), keys.end());
    CHECK(std::adjacent_find(keys.begin(), keys.end()) == keys.end());
  }
  ProbeConfig cfg;
  cfg.l2 = 1e-6;
  const auto r = kfold_eval(x, y, 2, 1, 0, cfg);
  CHECK(r.values.size() == 1);
  CHECK(r.mean == doctest::Approx(1.0));
}

TEST_CASE("k-fold evaluation is deterministic and averages per repeat") {
  Eigen::MatrixXd x;
  std::vector<int> y;
  blobs(60, 3, 1.0, 8, x, y);
  const auto a = kfold_eval(x, y, 5, 3, 12);
  const auto b = kfold_eval(x, y, 5, 3, 12);
  CHECK(a.values == b.values);
  CHECK(a.values.size() == 3);
  for (double v : a.values) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("summary statistics use the sample deviation") {
  const auto r = summarize("t", {1.0, 2.0, 3.0, 4.0});
  CHECK(r.mean == doctest::Approx(2.5));
  CHECK(r.std == doctest::Approx(std::sqrt(5.0 / 3.0)));
  CHECK(summarize("t", {0.7}).std == 0.0);
}

TEST_CASE("ridge recovers an exact linear map") {
  const auto x = random_matrix(80, 4, 2u);
  Eigen::MatrixXd w(4, 2);
  w << 1, -2, 0.5, 0, 3, 1, -1, 0.25;
  Eigen::MatrixXd y = x * w;
  y.col(0).array() += 0.7;
  const auto fit = ridge_regression(x, y, 1e-8);
  CHECK(fit.r2 >= 0.999);
  CHECK(fit.weights.topRows(4).isApprox(w, 1e-5));
  CHECK(fit.weights(4, 0) == doctest::Approx(0.7).epsilon(1e-6));
}

TEST_CASE("attack budget rounds sigma times edge count") {
  const auto g = path_graph(11);
  CHECK(attack_budget(g, 0.0) == 0);
  CHECK(attack_budget(g, 0.25) == 3);  // 2.5 rounds away from zero
  CHECK(attack_budget(g, 1.0) == 10);
  CHECK_THROWS_AS(attack_budget(g, -0.1), Error);
}

TEST_CASE("random attack flips exactly the budget of distinct pairs") {
  const auto g = random_graph(40, 0.1, 3);
  const auto r = random_attack(g, 0.2, 5);
  const auto budget = attack_budget(g, 0.2);
  CHECK(r.added.size() + r.removed.size() == budget);
  const auto before = edge_set(g);
  const auto after = edge_set(r.graph);
  for (const auto& e : r.added) {
    CHECK_FALSE(before.count({e.lo, e.hi}));
    CHECK(after.count({e.lo, e.hi}));
  }
  for (const auto& e : r.removed) {
    CHECK(before.count({e.lo, e.hi}));
    CHECK_FALSE(after.count({e.lo, e.hi}));
  }
  CHECK(r.graph.num_edges() == g.num_edges() + r.added.size() - r.removed.size());
  CHECK(edge_set(random_attack(g, 0.2, 5).graph) == after);
  CHECK(random_attack(g, 0.0, 5).graph.num_edges() == g.num_edges());
}

TEST_CASE("DICE removes within-class edges and adds cross-class ones") {
  const std::size_t n = 50;
  const auto g = block_graph(n, 2, 0.3, 0.02, 4);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i * 2 / n);
  const auto r = dice_attack(g, labels, 0.2, 7);
  const auto budget = attack_budget(g, 0.2);
  CHECK(r.removed.size() == budget / 2);
  CHECK(r.added.size() == budget - budget / 2);
  const auto before = edge_set(g);
  for (const auto& e : r.removed) {
    CHECK(labels[e.lo] == labels[e.hi]);
    CHECK(before.count({e.lo, e.hi}));
  }
  for (const auto& e : r.added) {
    CHECK(labels[e.lo] != labels[e.hi]);
    CHECK_FALSE(before.count({e.lo, e.hi}));
  }
  CHECK_THROWS_AS(dice_attack(g, std::vector<int>(3, 0), 0.2, 7), Error);
}

TEST_CASE("DICE spills over when there is nothing to delete") {
  // No within-class edges at all: the whole budget becomes insertions.
  const auto g = make_graph(6, {{0, 3}, {1, 4}, {2, 5}});
  std::vector<int> labels{0, 0, 0, 1, 1, 1};
  const auto r = dice_attack(g, labels, 1.0, 1);
  CHECK(r.removed.empty());
  CHECK(r.added.size() == 3);
}

TEST_CASE("flipping a pair twice restores the graph") {
  const auto g = path_graph(5);
  const std::vector<Edge> pairs{{0, 1}, {0, 4}};
  const auto once = flip_pairs(g, pairs);
  CHECK(once.num_edges() == 4);
  CHECK(edge_set(flip_pairs(once, pairs)) == edge_set(g));
}
