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
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "augment.hpp"
#include "encoders.hpp"
#include "graph.hpp"

namespace lapboot {

enum class OptimizerKind { kAdam, kSgd };

std::string_view to_string(OptimizerKind kind);
OptimizerKind parse_optimizer_kind(std::string_view name);

struct TrainConfig {
  double eps = 0.008;          // l-inf bound on delta
  double pgd_step = 0.008;     // alpha
  std::size_t pgd_steps = 3;   // T
  std::size_t accum_steps = 2; // epochs per teacher update
  double lr = 1e-5;
  double weight_decay = 8e-4;
  double ema_decay = 0.998;    // beta
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  PerturbSite site = PerturbSite::kFirstHidden;
  bool symmetric_loss = false;
  double sample_rho = 1.0;     // entry subsampling for large graphs
};

// key=value lines covering every field; hashed into checkpoints.
std::string describe(const TrainConfig& cfg, const ModelShape& shape);
// Sets one key from describe(); false when the key is not a training key.
bool apply_train_setting(TrainConfig& cfg, ModelShape& shape, std::string_view key,
                         std::string_view value);

// -(2/N) sum_i cos(T_i, Z_i); zero rows contribute similarity 0.
double boot_loss(const Eigen::MatrixXd& t_hat, const Eigen::MatrixXd& z_hat);
ad::Var boot_loss(ad::Tape& tape, ad::Var t_hat, ad::Var z_hat);

// U(-eps, eps) entries; exactly zero when eps == 0.
Eigen::MatrixXd init_perturbation(Eigen::Index rows, Eigen::Index cols, double eps,
                                  std::uint64_t seed);

// delta <- clip(delta + alpha * g / ||g||_F, -eps, eps), with the Frobenius
// norm taken over all blocks jointly. A zero gradient leaves delta alone.
void pgd_update(std::vector<Eigen::MatrixXd>& delta, const std::vector<Eigen::MatrixXd>& grad,
                double alpha, double eps);

struct GradBuffer {
  std::vector<Eigen::MatrixXd> sum;  // teacher-parameter shaped
  std::size_t epochs = 0;            // epochs folded in since the last step

  static GradBuffer zeros_like(const EncoderParams& params);
  void reset();
};

// sum += grad / pgd_steps.
void accumulate_teacher_grad(GradBuffer& buffer, const std::vector<Eigen::MatrixXd>& grad,
                             std::size_t pgd_steps);

struct OptimizerState {
  std::vector<Eigen::MatrixXd> m;
  std::vector<Eigen::MatrixXd> v;
  std::uint64_t steps = 0;

  static OptimizerState zeros_like(const EncoderParams& params);
};

// Applies the averaged buffer (sum / max(1, epochs)) with L2 weight decay, then
// resets the buffer.
void teacher_step(EncoderParams& teacher, GradBuffer& buffer, OptimizerState& opt,
                  const TrainConfig& cfg);

// theta <- beta * theta + (1 - beta) * xi over the shared blocks.
void ema_step(EncoderParams& student, const EncoderParams& teacher, double beta);

struct TrainGraph {
  Graph graph;
  NormalizedLaplacian lap;
  AugmentationPlan plan;
};

TrainGraph make_train_graph(Graph graph, AugmentationPlan plan);

struct TrainState {
  TrainConfig cfg;
  EncoderParams teacher;
  EncoderParams student;
  std::vector<Eigen::MatrixXd> delta;  // last perturbation, one block per graph
  GradBuffer accum;
  OptimizerState opt;
  std::uint64_t epoch = 0;             // completed epochs
  std::uint64_t seed = 0;
};

TrainState init_train_state(const ModelShape& shape, const TrainConfig& cfg, std::uint64_t seed);

struct EpochMetrics {
  std::uint64_t epoch = 0;             // 1-based
  double loss = 0.0;                   // mean over the inner steps
  std::vector<double> inner_losses;
  double delta_max_abs = 0.0;
  double delta_norm = 0.0;
  double grad_norm = 0.0;              // this epoch's contribution to the buffer
  bool teacher_updated = false;
};

std::string to_json_line(const EpochMetrics& m);

// Called after every PGD update with the 1-based epoch and step.
using PgdObserver = std::function<void(std::uint64_t epoch, std::size_t step,
                                       const std::vector<Eigen::MatrixXd>& delta, double loss)>;

// One epoch: sample views, inner PGD loop with teacher-grad accumulation,
// teacher step every accum_steps epochs (or when `flush`), then EMA.
// A non-finite loss throws a numerical error and leaves `state` untouched.
EpochMetrics train_epoch(const std::vector<TrainGraph>& data, TrainState& state,
                         bool flush = false, const PgdObserver& observer = {});

// Student encoder on the clean graph, one row per node (GCN) or per graph (GIN).
Eigen::MatrixXd student_embeddings(const TrainState& state, const std::vector<TrainGraph>& data);
Eigen::MatrixXd encoder_embeddings(const EncoderParams& params,
                                   const std::vector<TrainGraph>& data);

// Versioned little-endian binary checkpoint: header (magic, version, config
// hash, epoch, seed), the config text, then named tensors.
void save_checkpoint(const std::string& path, const TrainState& state);
TrainState load_checkpoint(const std::string& path);
std::uint64_t checkpoint_config_hash(const TrainState& state);

}  // namespace lapboot
