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
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "json.hpp"

namespace lapboot {

// "sbm" generates from cfg.sbm; anything else is a manifest path.
DatasetBundle load_dataset(const PipelineConfig& cfg);

ModelShape resolved_shape(const PipelineConfig& cfg, const DatasetBundle& bundle);

// One plan per graph; graphs are optimized in parallel.
std::vector<AugmentationPlan> augment_dataset(const DatasetBundle& bundle, const PipelineConfig& cfg);

std::string plan_path(const std::string& dir, std::size_t index);
void write_plans(const std::string& dir, const std::vector<AugmentationPlan>& plans);
std::vector<AugmentationPlan> read_plans(const std::string& dir, std::size_t count);

std::vector<TrainGraph> training_set(const DatasetBundle& bundle,
                                     const std::vector<AugmentationPlan>& plans);

using EpochCallback = std::function<void(const EpochMetrics&, const TrainState&)>;

// Trains up to cfg.epochs total epochs, continuing from `resume` when given
// (its config must match). The last epoch flushes the gradient buffer. On a
// numerical failure the last good state is written to `abort_snapshot` (when
// non-empty) before the error propagates.
TrainState train_model(const std::vector<TrainGraph>& data, const PipelineConfig& cfg,
                       std::optional<TrainState> resume = std::nullopt,
                       const EpochCallback& on_epoch = {}, const PgdObserver& on_pgd = {},
                       const std::string& abort_snapshot = {});

// Split protocol for node tasks (repeated random splits, or the dataset's own
// train/test split), k-fold for graph tasks.
ProbeResult probe_embeddings(const Eigen::MatrixXd& embeddings, const DatasetBundle& bundle,
                             const PipelineConfig& cfg);

struct AttackedBundle {
  DatasetBundle bundle;
  std::size_t flips = 0;
};

AttackedBundle attack_bundle(const DatasetBundle& bundle, AttackKind kind, double sigma,
                             std::uint64_t seed);

struct AttackRow {
  double sigma = 0.0;
  std::size_t flips = 0;
  ProbeResult result;
};

struct EvalReport {
  std::uint64_t epoch = 0;
  ProbeResult clean;
  std::string attack = "none";
  std::string mode = "poison";
  std::vector<AttackRow> rows;
};

// Probes the student encoder on the clean graphs. With an attack configured,
// each sigma > 0 either retrains on the attacked data (poison) or embeds the
// attacked graphs with the given model (evasion); sigma = 0 reuses the clean
// result.
EvalReport evaluate(const TrainState& state, const DatasetBundle& bundle, const PipelineConfig& cfg);

nlohmann::json to_json(const ProbeResult& r);
ProbeResult probe_from_json(const nlohmann::json& j);
nlohmann::json to_json(const EvalReport& r);
EvalReport report_from_json(const nlohmann::json& j);
std::string to_text(const EvalReport& r);

struct EigBenchRow {
  std::size_t n = 0;
  std::size_t k = 0;
  std::size_t nnz = 0;
  double seconds = 0.0;  // median over repeats
  std::size_t matvecs = 0;
  bool dense = false;
};

struct UpdateBenchRow {
  std::size_t support = 0;
  std::size_t delta_nnz = 0;
  std::size_t delta_bytes = 0;
  std::size_t modified_nnz = 0;
  std::size_t modified_bytes = 0;
};

struct BenchReport {
  std::vector<EigBenchRow> eig;
  std::vector<UpdateBenchRow> updates;
};

// G(n, degree/(n-1)) graphs for every n in bench_n and K in bench_k, plus
// sparse-update counters on the largest graph. Sizes of 0 are skipped.
BenchReport run_bench(const PipelineConfig& cfg);
nlohmann::json to_json(const BenchReport& r);
std::string to_text(const BenchReport& r);

}  // namespace lapboot
