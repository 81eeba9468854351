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

#include "eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <unordered_set>

#include "error.hpp"
#include "rng.hpp"

namespace lapboot {

ProbeResult summarize(std::string protocol, std::vector<double> values) {
  ProbeResult r;
  r.protocol = std::move(protocol);
  r.values = std::move(values);
  if (r.values.empty()) return r;
  const double n = static_cast<double>(r.values.size());
  r.mean = std::accumulate(r.values.begin(), r.values.end(), 0.0) / n;
  if (r.values.size() > 1) {
    double ss = 0.0;
    for (double v : r.values) ss += (v - r.mean) * (v - r.mean);
    r.std = std::sqrt(ss / (n - 1.0));
  }
  return r;
}

namespace {

Eigen::MatrixXd rows_of(const Eigen::MatrixXd& x, const std::vector<std::size_t>& idx) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), x.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    require(idx[i] < static_cast<std::size_t>(x.rows()), ErrorKind::kStructural,
            "split index " + std::to_string(idx[i]) + " out of range");
    out.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(idx[i]));
  }
  return out;
}

std::vector<int> labels_of(const std::vector<int>& y, const std::vector<std::size_t>& idx) {
  std::vector<int> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(y.at(i));
  return out;
}

Eigen::MatrixXd standardized(const LogisticModel& m, const Eigen::MatrixXd& x) {
  return (x.rowwise() - m.mean.transpose()).array().rowwise() / m.scale.transpose().array();
}

// Row-wise softmax of the logits in place; returns the mean cross entropy.
double softmax_xent(Eigen::MatrixXd& logits, const std::vector<int>& target) {
  double loss = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double mx = logits.row(i).maxCoeff();
    logits.row(i).array() = (logits.row(i).array() - mx).exp();
    const double z = logits.row(i).sum();
    logits.row(i) /= z;
    loss -= std::log(std::max(logits(i, target[static_cast<std::size_t>(i)]), 1e-300));
  }
  return loss / static_cast<double>(logits.rows());
}

}  // namespace

LogisticModel fit_logistic(const Eigen::MatrixXd& x, const std::vector<int>& y,
                           const ProbeConfig& cfg) {
  require(static_cast<std::size_t>(x.rows()) == y.size() && x.rows() > 0, ErrorKind::kStructural,
          "fit_logistic: rows and labels disagree");
  LogisticModel m;
  m.classes = y;
  std::sort(m.classes.begin(), m.classes.end());
  m.classes.erase(std::unique(m.classes.begin(), m.classes.end()), m.classes.end());
  require(m.classes.size() >= 2, ErrorKind::kProtocol,
          "linear probe needs at least two classes in the training split");

  m.mean = x.colwise().mean().transpose();
  m.scale = ((x.rowwise() - m.mean.transpose()).colwise().squaredNorm() /
             static_cast<double>(x.rows()))
                .cwiseSqrt()
                .transpose();
  for (Eigen::Index j = 0; j < m.scale.size(); ++j) {
    if (m.scale(j) < 1e-12) m.scale(j) = 1.0;
  }
  const Eigen::MatrixXd z = standardized(m, x);
  std::vector<int> target(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    target[i] = static_cast<int>(std::lower_bound(m.classes.begin(), m.classes.end(), y[i]) -
                                 m.classes.begin());
  }
  const auto c = static_cast<Eigen::Index>(m.classes.size());
  const double inv_n = 1.0 / static_cast<double>(x.rows());

  m.weights = Eigen::MatrixXd::Zero(x.cols(), c);
  m.bias = Eigen::RowVectorXd::Zero(c);
  auto objective = [&](const Eigen::MatrixXd& w, const Eigen::RowVectorXd& b, Eigen::MatrixXd* probs) {
    Eigen::MatrixXd logits = (z * w).rowwise() + b;
    const double f = softmax_xent(logits, target) + 0.5 * cfg.l2 * w.squaredNorm();
    if (probs) *probs = std::move(logits);
    return f;
  };

  Eigen::MatrixXd probs;
  double f = objective(m.weights, m.bias, &probs);
  double step = 1.0;
  std::size_t it = 0;
  for (; it < cfg.max_iter; ++it) {
    for (std::size_t i = 0; i < y.size(); ++i) probs(static_cast<Eigen::Index>(i), target[i]) -= 1.0;
    const Eigen::MatrixXd gw = inv_n * (z.transpose() * probs) + cfg.l2 * m.weights;
    const Eigen::RowVectorXd gb = inv_n * probs.colwise().sum();
    const double gsq = gw.squaredNorm() + gb.squaredNorm();
    if (gsq == 0.0) break;
    Eigen::MatrixXd w_new;
    Eigen::RowVectorXd b_new;
    double f_new = f;
    while (true) {
      w_new = m.weights - step * gw;
      b_new = m.bias - step * gb;
      f_new = objective(w_new, b_new, nullptr);
      if (f_new <= f - 0.5 * step * gsq || step < 1e-12) break;
      step *= 0.5;
    }
    m.weights = std::move(w_new);
    m.bias = std::move(b_new);
    const double change = f - f_new;
    f = objective(m.weights, m.bias, &probs);
    step = std::min(step * 2.0, 1e4);
    if (std::abs(change) < cfg.tol) {
      ++it;
      break;
    }
  }
  m.iterations = it;
  m.loss = f;
  return m;
}

std::vector<int> predict(const LogisticModel& model, const Eigen::MatrixXd& x) {
  const Eigen::MatrixXd logits = (standardized(model, x) * model.weights).rowwise() + model.bias;
  std::vector<int> out(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    Eigen::Index best = 0;
    logits.row(i).maxCoeff(&best);
    out[static_cast<std::size_t>(i)] = model.classes[static_cast<std::size_t>(best)];
  }
  return out;
}

double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth) {
  require(predicted.size() == truth.size(), ErrorKind::kStructural, "accuracy: size mismatch");
  if (truth.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i];
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

double probe_accuracy(const Eigen::MatrixXd& embeddings, const std::vector<int>& labels,
                      const std::vector<std::size_t>& train, const std::vector<std::size_t>& test,
                      const ProbeConfig& cfg) {
  require(static_cast<std::size_t>(embeddings.rows()) == labels.size(), ErrorKind::kStructural,
          "probe: embeddings and labels disagree on the number of rows");
  require(!test.empty(), ErrorKind::kProtocol, "probe: empty test split");
  const auto model = fit_logistic(rows_of(embeddings, train), labels_of(labels, train), cfg);
  return accuracy(predict(model, rows_of(embeddings, test)), labels_of(labels, test));
}

Split random_split(std::size_t n, double train_ratio, double val_ratio, std::uint64_t seed) {
  require(train_ratio > 0.0 && val_ratio >= 0.0 && train_ratio + val_ratio < 1.0,
          ErrorKind::kInvalidArgument, "split ratios must leave room for a test set");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
  const auto n_train = static_cast<std::size_t>(std::llround(train_ratio * static_cast<double>(n)));
  const auto n_val = static_cast<std::size_t>(std::llround(val_ratio * static_cast<double>(n)));
  Split s;
  s.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(std::min(n, n_train)));
  s.val.assign(perm.begin() + static_cast<std::ptrdiff_t>(std::min(n, n_train)),
               perm.begin() + static_cast<std::ptrdiff_t>(std::min(n, n_train + n_val)));
  s.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(std::min(n, n_train + n_val)), perm.end());
  for (auto* part : {&s.train, &s.val, &s.test}) std::sort(part->begin(), part->end());
  return s;
}

ProbeResult linear_probe(const Eigen::MatrixXd& embeddings, const std::vector<int>& labels,
                         const Split& split, const ProbeConfig& cfg) {
  return summarize("split", {probe_accuracy(embeddings, labels, split.train, split.test, cfg)});
}

ProbeResult linear_probe_repeated(const Eigen::MatrixXd& embeddings, const std::vector<int>& labels,
                                  double train_ratio, double val_ratio, std::size_t seeds,
                                  std::uint64_t seed, const ProbeConfig& cfg) {
  std::vector<double> values;
  for (std::size_t s = 0; s < seeds; ++s) {
    const Split split = random_split(labels.size(), train_ratio, val_ratio, derive_seed(seed, s));
    values.push_back(probe_accuracy(embeddings, labels, split.train, split.test, cfg));
  }
  return summarize("random-split x" + std::to_string(seeds), std::move(values));
}

std::vector<std::vector<std::size_t>> stratified_folds(const std::vector<int>& labels,
                                                       std::size_t k, bool shuffle,
                                                       std::uint64_t seed) {
  require(k >= 2, ErrorKind::kInvalidArgument, "k-fold needs k >= 2");
  require(k <= labels.size(), ErrorKind::kProtocol,
          "k-fold: " + std::to_string(k) + " folds exceed " + std::to_string(labels.size()) +
              " samples");
  std::vector<int> classes = labels;
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  Rng rng(seed);
  std::vector<std::vector<std::size_t>> folds(k);
  for (int c : classes) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == c) members.push_back(i);
    }
    if (shuffle) {
      for (std::size_t i = members.size(); i > 1; --i) std::swap(members[i - 1], members[rng.below(i)]);
    }
    const std::size_t m = members.size();
    for (std::size_t f = 0; f < k; ++f) {
      for (std::size_t i = f * m / k; i < (f + 1) * m / k; ++i) folds[f].push_back(members[i]);
    }
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

ProbeResult kfold_eval(const Eigen::MatrixXd& embeddings, const std::vector<int>& labels,
                       std::size_t k, std::size_t repeats, std::uint64_t seed,
                       const ProbeConfig& cfg) {
  require(repeats >= 1, ErrorKind::kInvalidArgument, "k-fold needs at least one repeat");
  std::vector<double> values;
  for (std::size_t r = 0; r < repeats; ++r) {
    const auto folds = stratified_folds(labels, k, true, derive_seed(seed, r));
    double sum = 0.0;
    std::size_t used = 0;
    for (std::size_t f = 0; f < k; ++f) {
      if (folds[f].empty()) continue;
      std::vector<std::size_t> train;
      for (std::size_t g = 0; g < k; ++g) {
        if (g != f) train.insert(train.end(), folds[g].begin(), folds[g].end());
      }
      sum += probe_accuracy(embeddings, labels, train, folds[f], cfg);
      ++used;
    }
    values.push_back(sum / static_cast<double>(used));
  }
  return summarize(std::to_string(k) + "-fold x" + std::to_string(repeats), std::move(values));
}

RidgeFit ridge_regression(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double l2) {
  require(x.rows() == y.rows() && x.rows() > 0, ErrorKind::kStructural, "ridge: row mismatch");
  require(l2 >= 0.0, ErrorKind::kInvalidArgument, "ridge: l2 must be non-negative");
  Eigen::MatrixXd a(x.rows(), x.cols() + 1);
  a << x, Eigen::VectorXd::Ones(x.rows());
  Eigen::MatrixXd gram = a.transpose() * a;
  gram.diagonal().head(x.cols()).array() += l2;
  RidgeFit fit;
  fit.weights = gram.ldlt().solve(a.transpose() * y);
  const double ss_res = (a * fit.weights - y).squaredNorm();
  const double ss_tot = (y.rowwise() - y.colwise().mean()).squaredNorm();
  fit.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : 0.0);
  return fit;
}

std::size_t attack_budget(const Graph& g, double sigma) {
  require(sigma >= 0.0 && sigma <= 1.0, ErrorKind::kInvalidArgument, "sigma must lie in [0, 1]");
  return static_cast<std::size_t>(std::llround(sigma * static_cast<double>(g.num_edges())));
}

Graph flip_pairs(const Graph& g, const std::vector<Edge>& pairs) {
  std::set<std::pair<NodeId, NodeId>> edges;
  for (const auto& e : g.edges()) edges.emplace(e.lo, e.hi);
  for (const auto& p : pairs) {
    const auto key = std::minmax(p.lo, p.hi);
    require(key.first != key.second, ErrorKind::kStructural, "cannot flip a self-loop");
    if (!edges.erase(key)) edges.insert(key);
  }
  std::vector<Edge> out;
  out.reserve(edges.size());
  for (const auto& [a, b] : edges) out.push_back({a, b});
  return Graph(g.num_nodes(), out, g.features(), g.labels());
}

namespace {

std::uint64_t pair_key(NodeId a, NodeId b) {
  const auto [lo, hi] = std::minmax(a, b);
  return (static_cast<std::uint64_t>(lo) << 32) | static_cast<std::uint32_t>(hi);
}

Edge random_pair(Rng& rng, std::size_t n) {
  while (true) {
    const auto a = static_cast<NodeId>(rng.below(n));
    const auto b = static_cast<NodeId>(rng.below(n));
    if (a != b) return {std::min(a, b), std::max(a, b)};
  }
}

// Picks `count` distinct pairs accepted by `ok`, out of `available` such pairs.
template <typename Accept>
std::vector<Edge> sample_pairs(Rng& rng, std::size_t n, std::size_t count, std::size_t available,
                               Accept ok) {
  std::vector<Edge> out;
  if (count == 0) return out;
  if (2 * count > available) {
    std::vector<Edge> all;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const Edge e{static_cast<NodeId>(i), static_cast<NodeId>(j)};
        if (ok(e)) all.push_back(e);
      }
    }
    for (std::size_t i = 0; i < count; ++i) std::swap(all[i], all[i + rng.below(all.size() - i)]);
    all.resize(count);
    return all;
  }
  std::unordered_set<std::uint64_t> seen;
  while (out.size() < count) {
    const Edge e = random_pair(rng, n);
    if (ok(e) && seen.insert(pair_key(e.lo, e.hi)).second) out.push_back(e);
  }
  return out;
}

AttackResult apply(const Graph& g, std::vector<Edge> flips) {
  AttackResult r{flip_pairs(g, flips), {}, {}};
  for (const auto& e : flips) (g.has_edge(e.lo, e.hi) ? r.removed : r.added).push_back(e);
  return r;
}

}  // namespace

AttackResult random_attack(const Graph& g, double sigma, std::uint64_t seed) {
  const std::size_t n = g.num_nodes();
  const std::size_t total = n < 2 ? 0 : n * (n - 1) / 2;
  const std::size_t budget = std::min(attack_budget(g, sigma), total);
  Rng rng(seed);
  return apply(g, sample_pairs(rng, n, budget, total, [](const Edge&) { return true; }));
}

AttackResult dice_attack(const Graph& g, const std::vector<int>& labels, double sigma,
                         std::uint64_t seed) {
  const std::size_t n = g.num_nodes();
  require(labels.size() == n, ErrorKind::kStructural, "DICE needs one label per node");
  const std::size_t budget = attack_budget(g, sigma);

  std::vector<Edge> inside;
  std::size_t cross_edges = 0;
  for (const auto& e : g.edges()) {
    if (labels[e.lo] == labels[e.hi]) {
      inside.push_back(e);
    } else {
      ++cross_edges;
    }
  }
  std::vector<int> sorted = labels;
  std::sort(sorted.begin(), sorted.end());
  std::size_t same_pairs = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && sorted[j] == sorted[i]) ++j;
    same_pairs += (j - i) * (j - i - 1) / 2;
    i = j;
  }
  const std::size_t total = n < 2 ? 0 : n * (n - 1) / 2;
  const std::size_t cross_free = total - same_pairs - cross_edges;

  std::size_t n_del = budget / 2;
  std::size_t n_add = budget - n_del;
  if (n_del > inside.size()) {
    n_add += n_del - inside.size();
    n_del = inside.size();
  }
  if (n_add > cross_free) {
    n_del = std::min(inside.size(), n_del + (n_add - cross_free));
    n_add = cross_free;
  }

  Rng rng(seed);
  std::vector<Edge> flips;
  for (std::size_t i = 0; i < n_del; ++i) {
    std::swap(inside[i], inside[i + rng.below(inside.size() - i)]);
    flips.push_back(inside[i]);
  }
  const auto added = sample_pairs(rng, n, n_add, cross_free, [&](const Edge& e) {
    return labels[e.lo] != labels[e.hi] && !g.has_edge(e.lo, e.hi);
  });
  flips.insert(flips.end(), added.begin(), added.end());
  return apply(g, std::move(flips));
}

}  // namespace lapboot
