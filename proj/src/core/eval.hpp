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

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "graph.hpp"

namespace lapboot {

struct ProbeConfig {
  double l2 = 1e-4;            // on weights, not biases
  double tol = 1e-6;           // absolute change in loss
  std::size_t max_iter = 5000;
};

struct ProbeResult {
  std::string protocol;
  double mean = 0.0;
  double std = 0.0;            // sample std; 0 for a single value
  std::vector<double> values;
};

ProbeResult summarize(std::string protocol, std::vector<double> values);

struct LogisticModel {
  Eigen::VectorXd mean;        // standardization fitted on the training rows
  Eigen::VectorXd scale;
  Eigen::MatrixXd weights;     // d x C
  Eigen::RowVectorXd bias;
  std::vector<int> classes;    // column c predicts classes[c]
  std::size_t iterations = 0;
  double loss = 0.0;
};

// Multinomial logistic regression by gradient descent with backtracking.
LogisticModel fit_logistic(const Eigen::MatrixXd& x, const std::vector<int>& y,
                           const ProbeConfig& cfg = {});
std::vector<int> predict(const LogisticModel& model, const Eigen::MatrixXd& x);

double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth);

// Fits on `train` rows and scores `test` rows. Fewer than two training classes
// is a protocol error.
double probe_accuracy(const Eigen::MatrixXd& embeddings, const std::vector<int>& labels,
                      const std::vector<std::size_t>& train, const std::vector<std::size_t>& test,
                      const ProbeConfig& cfg = {});

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

Split random_split(std::size_t n, double train_ratio, double val_ratio, std::uint64_t seed);

ProbeResult linear_probe(const Eigen::MatrixXd& embeddings, const std::vector<int>& labels,
                         const Split& split, const ProbeConfig& cfg = {});

// One random split per seed, derived from `seed`.
ProbeResult linear_probe_repeated(const Eigen::MatrixXd& embeddings, const std::vector<int>& labels,
                                  double train_ratio, double val_ratio, std::size_t seeds,
                                  std::uint64_t seed, const ProbeConfig& cfg = {});

// Stratified k-fold: each class is cut into k contiguous chunks (after an
// optional seeded shuffle). Values are per-repeat mean fold accuracies.
std::vector<std::vector<std::size_t>> stratified_folds(const std::vector<int>& labels,
                                                       std::size_t k, bool shuffle,
                                                       std::uint64_t seed);
ProbeResult kfold_eval(const Eigen::MatrixXd& embeddings, const std::vector<int>& labels,
                       std::size_t k, std::size_t repeats, std::uint64_t seed,
                       const ProbeConfig& cfg = {});

struct RidgeFit {
  Eigen::MatrixXd weights;  // (d + 1) x outputs, last row is the intercept
  double r2 = 0.0;
};

RidgeFit ridge_regression(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double l2);

struct AttackResult {
  Graph graph;
  std::vector<Edge> added;
  std::vector<Edge> removed;
};

// round(sigma * |E|).
std::size_t attack_budget(const Graph& g, double sigma);

// Flips that many distinct node pairs chosen uniformly.
AttackResult random_attack(const Graph& g, double sigma, std::uint64_t seed);
// Half the budget removes within-class edges, the rest adds cross-class
// non-edges; a category that runs out passes its remainder to the other.
AttackResult dice_attack(const Graph& g, const std::vector<int>& labels, double sigma,
                         std::uint64_t seed);
Graph flip_pairs(const Graph& g, const std::vector<Edge>& pairs);

}  // namespace lapboot
