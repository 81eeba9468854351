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
#include <map>
#include <string>
#include <vector>

#include "graph.hpp"

namespace lapboot {

enum class TaskKind { kNodeClassification, kGraphClassification };

std::string_view to_string(TaskKind kind);
TaskKind parse_task_kind(std::string_view name);

struct DatasetBundle {
  TaskKind task = TaskKind::kNodeClassification;
  std::vector<Graph> graphs;
  std::vector<int> graph_labels;  // graph task only
  std::map<std::string, std::vector<std::size_t>> splits;
  std::vector<std::string> warnings;

  friend bool operator==(const DatasetBundle& a, const DatasetBundle& b) {
    return a.task == b.task && a.graphs == b.graphs && a.graph_labels == b.graph_labels &&
           a.splits == b.splits;
  }
};

// Per-sample labels: node labels of the single graph, or graph labels.
std::vector<int> sample_labels(const DatasetBundle& bundle);
std::size_t sample_count(const DatasetBundle& bundle);

// Split indices must be in range and pairwise disjoint.
void validate(const DatasetBundle& bundle);

struct EdgeList {
  std::vector<Edge> edges;
  NodeId max_node = -1;
};

EdgeList read_edges(const std::string& path);
Eigen::MatrixXd read_features(const std::string& path);
std::vector<int> read_labels(const std::string& path);
std::map<std::string, std::vector<std::size_t>> read_splits(const std::string& path);

// Node count comes from the features, else the labels, else the largest edge
// endpoint. Empty paths are skipped; node classification requires labels.
DatasetBundle load_edgelist(const std::string& edges_path, const std::string& features_path,
                            const std::string& labels_path, const std::string& splits_path = {},
                            TaskKind task = TaskKind::kNodeClassification);

// Manifest: "lapboot-dataset 1", "task node|graph", then one
// "graph <edges> <features|-> <labels|-> [graph_label]" line per graph and an
// optional "splits <path>" line. Paths are relative to the manifest.
DatasetBundle load_manifest(const std::string& path);
// Writes the text files next to `manifest_path` and the manifest itself.
void save_bundle(const std::string& manifest_path, const DatasetBundle& bundle);

struct SbmOptions {
  std::size_t n = 200;
  std::size_t blocks = 2;
  double p_in = 0.1;
  double p_out = 0.01;
  std::size_t feature_dim = 16;
  double margin = 1.0;       // block means are margin * e_(b mod d)
  double noise = 1.0;        // per-coordinate Gaussian std
  double train_ratio = 0.1;
  double val_ratio = 0.1;
  std::uint64_t seed = 0;
};

// Contiguous balanced blocks; labels are block ids; splits are random.
DatasetBundle generate_sbm(const SbmOptions& opts);

}  // namespace lapboot
