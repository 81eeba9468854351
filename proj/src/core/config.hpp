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
#include <string_view>
#include <vector>

#include "augment.hpp"
#include "centrality.hpp"
#include "data_io.hpp"
#include "encoders.hpp"
#include "eval.hpp"
#include "trainer.hpp"

namespace lapboot {

enum class AttackKind { kNone, kRandom, kDice };
enum class AttackMode { kPoison, kEvasion };

struct PipelineConfig {
  std::string dataset;         // manifest path, or "sbm" for a generated graph
  SbmOptions sbm;
  CentralityOptions centrality;
  AugmentConfig augment;
  ModelShape shape;            // input_dim 0: taken from the data
  TrainConfig train;
  std::size_t epochs = 5000;
  std::uint64_t seed = 0;
  std::size_t checkpoint_every = 0;  // 0: final checkpoint only
  ProbeConfig probe;
  double train_ratio = 0.1;
  double val_ratio = 0.1;
  std::size_t probe_seeds = 10;
  bool use_dataset_split = false;
  std::size_t kfold = 10;      // graph classification
  std::size_t kfold_repeats = 5;
  AttackKind attack = AttackKind::kNone;
  AttackMode attack_mode = AttackMode::kPoison;
  std::vector<double> attack_sigmas{0.0, 0.05, 0.2};
  std::vector<std::size_t> bench_n{250, 500, 1000};
  std::vector<std::size_t> bench_k{4, 8, 16};
  double bench_degree = 20.0;  // expected degree of the benchmark graphs
  std::size_t bench_repeats = 3;
  std::string plan_dir = "plans";
  std::string checkpoint = "model.ckpt";
  std::string metrics = "metrics.jsonl";
  std::string report = "report.json";
};

// Throws an invalid-argument error naming the key for unknown keys or bad
// values.
void apply_setting(PipelineConfig& cfg, std::string_view key, std::string_view value);
// key=value lines; '#' starts a comment.
PipelineConfig parse_config(std::string_view text, const std::string& source = "config");
PipelineConfig load_config_file(const std::string& path);
// "key=value" override strings, applied in order.
void apply_overrides(PipelineConfig& cfg, const std::vector<std::string>& overrides);
// Range checks; errors name the offending key.
void validate(const PipelineConfig& cfg);
// Every key with its current value, in a stable order.
std::string to_text(const PipelineConfig& cfg);

}  // namespace lapboot
