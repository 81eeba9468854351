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

#include "encoders.hpp"

#include <cmath>
#include <string>

#include "error.hpp"
#include "rng.hpp"

namespace lapboot {

std::string_view to_string(EncoderKind kind) {
  return kind == EncoderKind::kGcn ? "gcn" : "gin";
}

EncoderKind parse_encoder_kind(std::string_view name) {
  if (name == "gcn") return EncoderKind::kGcn;
  if (name == "gin") return EncoderKind::kGin;
  fail(ErrorKind::kInvalidArgument, "unknown encoder '" + std::string(name) + "'");
}

std::vector<Param*> EncoderParams::all() {
  std::vector<Param*> out;
  for (auto* block : {&encoder, &projector, &head}) {
    for (auto& p : *block) out.push_back(&p);
  }
  return out;
}

std::vector<const Param*> EncoderParams::all() const {
  std::vector<const Param*> out;
  for (const auto* block : {&encoder, &projector, &head}) {
    for (const auto& p : *block) out.push_back(&p);
  }
  return out;
}

std::vector<Param*> EncoderParams::shared() {
  std::vector<Param*> out;
  for (auto* block : {&encoder, &projector}) {
    for (auto& p : *block) out.push_back(&p);
  }
  return out;
}

std::vector<const Param*> EncoderParams::shared() const {
  std::vector<const Param*> out;
  for (const auto* block : {&encoder, &projector}) {
    for (const auto& p : *block) out.push_back(&p);
  }
  return out;
}

namespace {

Eigen::MatrixXd glorot(std::size_t in, std::size_t out, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(in + out));
  Eigen::MatrixXd w(static_cast<Eigen::Index>(in), static_cast<Eigen::Index>(out));
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-a, a);
  return w;
}

Eigen::MatrixXd zeros_row(std::size_t cols) {
  return Eigen::MatrixXd::Zero(1, static_cast<Eigen::Index>(cols));
}

Eigen::MatrixXd slope(double v) { return Eigen::MatrixXd::Constant(1, 1, v); }

void add_mlp(std::vector<Param>& block, const std::string& prefix, std::size_t in,
             std::size_t hidden, std::size_t out, Rng& rng) {
  block.push_back({prefix + ".w1", glorot(in, hidden, rng)});
  block.push_back({prefix + ".b1", zeros_row(hidden)});
  block.push_back({prefix + ".a1", slope(0.25)});
  block.push_back({prefix + ".w2", glorot(hidden, out, rng)});
  block.push_back({prefix + ".b2", zeros_row(out)});
}

ad::Var mlp(ad::Tape& tape, ad::Var x, const std::vector<ad::Var>& p) {
  ad::Var h = tape.prelu(tape.add_row(tape.matmul(x, p[0]), p[1]), p[2]);
  return tape.add_row(tape.matmul(h, p[3]), p[4]);
}

}  // namespace

EncoderParams init_params(const ModelShape& shape, std::uint64_t seed, bool with_head) {
  require(shape.input_dim > 0 && !shape.hidden.empty(), ErrorKind::kInvalidArgument,
          "model shape needs an input dimension and at least one hidden layer");
  EncoderParams params;
  params.shape = shape;
  Rng rng(seed);
  std::size_t in = shape.input_dim;
  for (std::size_t l = 0; l < shape.hidden.size(); ++l) {
    const std::size_t out = shape.hidden[l];
    const std::string prefix = "encoder." + std::to_string(l);
    if (shape.kind == EncoderKind::kGcn) {
      params.encoder.push_back({prefix + ".w", glorot(in, out, rng)});
      params.encoder.push_back({prefix + ".b", zeros_row(out)});
      params.encoder.push_back({prefix + ".a", slope(0.25)});
    } else {
      params.encoder.push_back({prefix + ".w1", glorot(in, out, rng)});
      params.encoder.push_back({prefix + ".b1", zeros_row(out)});
      params.encoder.push_back({prefix + ".w2", glorot(out, out, rng)});
      params.encoder.push_back({prefix + ".b2", zeros_row(out)});
    }
    in = out;
  }
  add_mlp(params.projector, "projector", shape.embedding_dim(), shape.projector_hidden,
          shape.projection_dim, rng);
  if (with_head) {
    add_mlp(params.head, "head", shape.projection_dim, shape.predictor_hidden,
            shape.projection_dim, rng);
  }
  return params;
}

EncoderParams student_from(const EncoderParams& teacher) {
  EncoderParams student;
  student.shape = teacher.shape;
  student.encoder = teacher.encoder;
  student.projector = teacher.projector;
  return student;
}

void set_identity_heads(EncoderParams& params) {
  const auto& s = params.shape;
  require(s.embedding_dim() == s.projector_hidden && s.projector_hidden == s.projection_dim &&
              (params.head.empty() || s.predictor_hidden == s.projection_dim),
          ErrorKind::kInvalidArgument, "identity heads need equal embedding and head widths");
  for (auto* block : {&params.projector, &params.head}) {
    for (auto& p : *block) {
      if (p.value.rows() == p.value.cols() && p.value.rows() > 1) {
        p.value.setIdentity();
      } else if (p.value.size() == 1 && p.name.ends_with(".a1")) {
        p.value(0, 0) = 1.0;
      } else {
        p.value.setZero();
      }
    }
  }
}

double squared_norm(const EncoderParams& params) {
  double total = 0.0;
  for (const auto* p : params.all()) total += p->value.squaredNorm();
  return total;
}

BoundParams bind(ad::Tape& tape, const EncoderParams& params, bool requires_grad) {
  BoundParams out;
  for (const auto& p : params.encoder) out.encoder.push_back(tape.leaf(p.value, requires_grad));
  for (const auto& p : params.projector) out.projector.push_back(tape.leaf(p.value, requires_grad));
  for (const auto& p : params.head) out.head.push_back(tape.leaf(p.value, requires_grad));
  return out;
}

SparseSym propagation_operator(const NormalizedLaplacian& view) {
  return view.matrix.identity_minus();
}

SparseSym gin_operator(const NormalizedLaplacian& view) {
  const SparseSym prop = propagation_operator(view);
  std::vector<SymEntry> entries;
  for (std::size_t i = 0; i < prop.n(); ++i) {
    entries.push_back({static_cast<NodeId>(i), static_cast<NodeId>(i), 1.0});
  }
  for (const auto& e : prop.entries()) {
    if (e.row != e.col && std::abs(e.value) > 1e-12) entries.push_back({e.row, e.col, 1.0});
  }
  return SparseSym::from_lower(prop.n(), std::move(entries));
}

SparseSym encoder_operator(const NormalizedLaplacian& view, EncoderKind kind) {
  return kind == EncoderKind::kGcn ? propagation_operator(view) : gin_operator(view);
}

namespace {

void check_input(const ad::Tape& tape, ad::Var x, const ModelShape& shape, const SparseSym& op) {
  const auto& xv = tape.value(x);
  require(static_cast<std::size_t>(xv.cols()) == shape.input_dim, ErrorKind::kStructural,
          "encoder: feature dimension " + std::to_string(xv.cols()) + " does not match " +
              std::to_string(shape.input_dim));
  require(static_cast<std::size_t>(xv.rows()) == op.n(), ErrorKind::kStructural,
          "encoder: feature rows do not match the graph size");
}

ad::Var maybe_inject(ad::Tape& tape, ad::Var h, bool first, bool last,
                     const std::optional<Injection>& inject) {
  if (!inject) return h;
  const bool here = inject->site == PerturbSite::kFirstHidden ? first : last;
  return here ? tape.add(h, inject->delta) : h;
}

}  // namespace

EncoderOutput gcn_forward(ad::Tape& tape, const SparseSym& propagation, ad::Var x,
                          const BoundParams& params, const ModelShape& shape,
                          const std::optional<Injection>& inject) {
  check_input(tape, x, shape, propagation);
  EncoderOutput out;
  ad::Var h = x;
  const std::size_t layers = shape.hidden.size();
  for (std::size_t l = 0; l < layers; ++l) {
    const auto& w = params.encoder[3 * l];
    const auto& b = params.encoder[3 * l + 1];
    const auto& a = params.encoder[3 * l + 2];
    h = tape.prelu(tape.add_row(tape.sparse_matmul(propagation, tape.matmul(h, w)), b), a);
    if (l == 0) out.first_hidden = h;
    h = maybe_inject(tape, h, l == 0, l + 1 == layers, inject);
  }
  out.output = h;
  return out;
}

EncoderOutput gin_forward(ad::Tape& tape, const SparseSym& aggregation, ad::Var x,
                          const BoundParams& params, const ModelShape& shape,
                          const std::optional<Injection>& inject) {
  check_input(tape, x, shape, aggregation);
  EncoderOutput out;
  ad::Var h = x;
  const std::size_t layers = shape.hidden.size();
  std::optional<ad::Var> pooled;
  for (std::size_t l = 0; l < layers; ++l) {
    const auto* p = &params.encoder[4 * l];
    ad::Var agg = tape.sparse_matmul(aggregation, h);
    ad::Var z = tape.relu(tape.add_row(tape.matmul(agg, p[0]), p[1]));
    h = tape.relu(tape.add_row(tape.matmul(z, p[2]), p[3]));
    if (l == 0) out.first_hidden = h;
    h = maybe_inject(tape, h, l == 0, l + 1 == layers, inject);
    ad::Var s = tape.sum_rows(h);
    pooled = pooled ? tape.add(*pooled, s) : s;
  }
  out.output = tape.scale(*pooled, 1.0 / static_cast<double>(layers));
  return out;
}

EncoderOutput encode(ad::Tape& tape, const SparseSym& op, ad::Var x, const BoundParams& params,
                     const ModelShape& shape, const std::optional<Injection>& inject) {
  return shape.kind == EncoderKind::kGcn ? gcn_forward(tape, op, x, params, shape, inject)
                                         : gin_forward(tape, op, x, params, shape, inject);
}

ad::Var teacher_project(ad::Tape& tape, ad::Var h, const BoundParams& params) {
  require(params.head.size() == 5, ErrorKind::kStructural, "teacher parameters have no head");
  return mlp(tape, mlp(tape, h, params.projector), params.head);
}

ad::Var student_project(ad::Tape& tape, ad::Var h, const BoundParams& params) {
  return mlp(tape, h, params.projector);
}

Eigen::MatrixXd embed(const EncoderParams& params, const NormalizedLaplacian& view,
                      const Eigen::MatrixXd& features) {
  ad::Tape tape;
  const BoundParams bound = bind(tape, params, false);
  const SparseSym op = encoder_operator(view, params.shape.kind);
  const ad::Var x = tape.leaf(features);
  return tape.value(encode(tape, op, x, bound, params.shape).output);
}

}  // namespace lapboot
