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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "autodiff.hpp"
#include "graph.hpp"

namespace lapboot {

enum class EncoderKind { kGcn, kGin };

std::string_view to_string(EncoderKind kind);
EncoderKind parse_encoder_kind(std::string_view name);

struct ModelShape {
  EncoderKind kind = EncoderKind::kGcn;
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden{512, 256};  // GIN default is {512, 512, 512}
  std::size_t projector_hidden = 512;
  std::size_t projection_dim = 256;
  std::size_t predictor_hidden = 512;

  std::size_t embedding_dim() const { return hidden.empty() ? 0 : hidden.back(); }
  friend bool operator==(const ModelShape&, const ModelShape&) = default;
};

struct Param {
  std::string name;
  Eigen::MatrixXd value;
};

// Teacher (xi) carries encoder, projector q and the extra head; the student
// (theta) has the same encoder and projector blocks (p) and no head.
struct EncoderParams {
  ModelShape shape;
  std::vector<Param> encoder;
  std::vector<Param> projector;
  std::vector<Param> head;

  std::size_t count() const { return encoder.size() + projector.size() + head.size(); }
  // Flat views in encoder, projector, head order.
  std::vector<Param*> all();
  std::vector<const Param*> all() const;
  // Encoder and projector only: the blocks shared with the student.
  std::vector<Param*> shared();
  std::vector<const Param*> shared() const;
};

// Glorot-uniform weights, zero biases, PReLU slopes 0.25.
EncoderParams init_params(const ModelShape& shape, std::uint64_t seed, bool with_head);
// Copy of the shared blocks (the EMA target starts equal to the teacher).
EncoderParams student_from(const EncoderParams& teacher);
// Identity projector/head (requires embedding, projection and hidden dims to
// agree); PReLU slopes become 1.
void set_identity_heads(EncoderParams& params);

double squared_norm(const EncoderParams& params);

struct BoundParams {
  std::vector<ad::Var> encoder;
  std::vector<ad::Var> projector;
  std::vector<ad::Var> head;
};

BoundParams bind(ad::Tape& tape, const EncoderParams& params, bool requires_grad);

enum class PerturbSite { kFirstHidden, kLastHidden };

struct Injection {
  ad::Var delta;  // same shape as the perturbed hidden layer
  PerturbSite site = PerturbSite::kFirstHidden;
};

struct EncoderOutput {
  ad::Var first_hidden;  // node-level output of the first layer (pre-injection)
  ad::Var output;        // node embeddings (GCN) or pooled graph embedding (GIN)
};

// A_mod = I - L_view.
SparseSym propagation_operator(const NormalizedLaplacian& view);
// I + binary adjacency read from the nonzero off-diagonal pattern of
// I - L_view (GIN sum aggregation with epsilon = 0).
SparseSym gin_operator(const NormalizedLaplacian& view);

// Two-layer (or deeper) GCN: H_{l+1} = PReLU(A_mod H_l W_l + b_l).
EncoderOutput gcn_forward(ad::Tape& tape, const SparseSym& propagation, ad::Var x,
                          const BoundParams& params, const ModelShape& shape,
                          const std::optional<Injection>& inject = std::nullopt);

// GIN layers h' = ReLU(W2 ReLU(W1 (I + A) h + b1) + b2); readout is the mean
// over layers of per-layer sum pooling (1 x hidden).
EncoderOutput gin_forward(ad::Tape& tape, const SparseSym& aggregation, ad::Var x,
                          const BoundParams& params, const ModelShape& shape,
                          const std::optional<Injection>& inject = std::nullopt);

// Dispatches on shape.kind; `op` must come from propagation_operator (GCN) or
// gin_operator (GIN).
EncoderOutput encode(ad::Tape& tape, const SparseSym& op, ad::Var x, const BoundParams& params,
                     const ModelShape& shape,
                     const std::optional<Injection>& inject = std::nullopt);

SparseSym encoder_operator(const NormalizedLaplacian& view, EncoderKind kind);

// MLP_xi(q_xi(H)).
ad::Var teacher_project(ad::Tape& tape, ad::Var h, const BoundParams& params);
// p_theta(H).
ad::Var student_project(ad::Tape& tape, ad::Var h, const BoundParams& params);

// Frozen forward pass, no gradients: node embeddings (GCN) or one row per
// graph (GIN, when called per graph).
Eigen::MatrixXd embed(const EncoderParams& params, const NormalizedLaplacian& view,
                      const Eigen::MatrixXd& features);

}  // namespace lapboot
