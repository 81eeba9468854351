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

#include "trainer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

#include "error.hpp"
#include "rng.hpp"
#include "textio.hpp"

namespace lapboot {

std::string_view to_string(OptimizerKind kind) {
  return kind == OptimizerKind::kAdam ? "adam" : "sgd";
}

OptimizerKind parse_optimizer_kind(std::string_view name) {
  if (name == "adam") return OptimizerKind::kAdam;
  if (name == "sgd") return OptimizerKind::kSgd;
  fail(ErrorKind::kInvalidArgument, "unknown optimizer '" + std::string(name) + "'");
}

namespace {

std::string join_sizes(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v[i]);
  }
  return out;
}

std::size_t parse_size(std::string_view v, std::string_view key) {
  const auto x = text::parse_int(v, std::string(key));
  require(x >= 0, ErrorKind::kInvalidArgument, std::string(key) + " must be non-negative");
  return static_cast<std::size_t>(x);
}

bool parse_bool(std::string_view v, std::string_view key) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  fail(ErrorKind::kParse, std::string(key) + ": expected true or false, got '" + std::string(v) + "'");
}

}  // namespace

std::string describe(const TrainConfig& cfg, const ModelShape& shape) {
  std::ostringstream out;
  out << "encoder=" << to_string(shape.kind) << '\n'
      << "input_dim=" << shape.input_dim << '\n'
      << "hidden=" << join_sizes(shape.hidden) << '\n'
      << "projector_hidden=" << shape.projector_hidden << '\n'
      << "projection_dim=" << shape.projection_dim << '\n'
      << "predictor_hidden=" << shape.predictor_hidden << '\n'
      << "eps=" << text::format_double(cfg.eps) << '\n'
      << "pgd_step=" << text::format_double(cfg.pgd_step) << '\n'
      << "pgd_steps=" << cfg.pgd_steps << '\n'
      << "accum_steps=" << cfg.accum_steps << '\n'
      << "lr=" << text::format_double(cfg.lr) << '\n'
      << "weight_decay=" << text::format_double(cfg.weight_decay) << '\n'
      << "ema_decay=" << text::format_double(cfg.ema_decay) << '\n'
      << "optimizer=" << to_string(cfg.optimizer) << '\n'
      << "adam_beta1=" << text::format_double(cfg.adam_beta1) << '\n'
      << "adam_beta2=" << text::format_double(cfg.adam_beta2) << '\n'
      << "adam_eps=" << text::format_double(cfg.adam_eps) << '\n'
      << "perturb_site=" << (cfg.site == PerturbSite::kFirstHidden ? "first" : "last") << '\n'
      << "symmetric_loss=" << (cfg.symmetric_loss ? "true" : "false") << '\n'
      << "sample_rho=" << text::format_double(cfg.sample_rho) << '\n';
  return out.str();
}

bool apply_train_setting(TrainConfig& cfg, ModelShape& shape, std::string_view key,
                         std::string_view value) {
  const std::string k(key);
  auto real = [&] { return text::parse_double(value, k); };
  if (key == "encoder") {
    const std::vector<std::size_t> gcn_default{512, 256};
    const std::vector<std::size_t> gin_default{512, 512, 512};
    shape.kind = parse_encoder_kind(value);
    // Swap default widths only; explicit hidden settings are kept.
    if (shape.kind == EncoderKind::kGin && shape.hidden == gcn_default) shape.hidden = gin_default;
    if (shape.kind == EncoderKind::kGcn && shape.hidden == gin_default) shape.hidden = gcn_default;
  } else if (key == "input_dim") {
    shape.input_dim = parse_size(value, key);
  } else if (key == "hidden") {
    shape.hidden.clear();
    for (auto part : text::split(value, ",")) shape.hidden.push_back(parse_size(text::trim(part), key));
  } else if (key == "projector_hidden") {
    shape.projector_hidden = parse_size(value, key);
  } else if (key == "projection_dim") {
    shape.projection_dim = parse_size(value, key);
  } else if (key == "predictor_hidden") {
    shape.predictor_hidden = parse_size(value, key);
  } else if (key == "eps") {
    cfg.eps = real();
  } else if (key == "pgd_step") {
    cfg.pgd_step = real();
  } else if (key == "pgd_steps") {
    cfg.pgd_steps = parse_size(value, key);
  } else if (key == "accum_steps") {
    cfg.accum_steps = parse_size(value, key);
  } else if (key == "lr") {
    cfg.lr = real();
  } else if (key == "weight_decay") {
    cfg.weight_decay = real();
  } else if (key == "ema_decay") {
    cfg.ema_decay = real();
  } else if (key == "optimizer") {
    cfg.optimizer = parse_optimizer_kind(value);
  } else if (key == "adam_beta1") {
    cfg.adam_beta1 = real();
  } else if (key == "adam_beta2") {
    cfg.adam_beta2 = real();
  } else if (key == "adam_eps") {
    cfg.adam_eps = real();
  } else if (key == "perturb_site") {
    if (value == "first") {
      cfg.site = PerturbSite::kFirstHidden;
    } else if (value == "last") {
      cfg.site = PerturbSite::kLastHidden;
    } else {
      fail(ErrorKind::kInvalidArgument, "perturb_site must be first or last");
    }
  } else if (key == "symmetric_loss") {
    cfg.symmetric_loss = parse_bool(value, key);
  } else if (key == "sample_rho") {
    cfg.sample_rho = real();
  } else {
    return false;
  }
  return true;
}

double boot_loss(const Eigen::MatrixXd& t_hat, const Eigen::MatrixXd& z_hat) {
  require(t_hat.rows() == z_hat.rows() && t_hat.cols() == z_hat.cols() && t_hat.rows() > 0,
          ErrorKind::kStructural, "boot_loss: shape mismatch");
  double total = 0.0;
  for (Eigen::Index i = 0; i < t_hat.rows(); ++i) {
    const double nt = std::max(t_hat.row(i).norm(), ad::kNormGuard);
    const double nz = std::max(z_hat.row(i).norm(), ad::kNormGuard);
    total += t_hat.row(i).dot(z_hat.row(i)) / (nt * nz);
  }
  return -2.0 * total / static_cast<double>(t_hat.rows());
}

ad::Var boot_loss(ad::Tape& tape, ad::Var t_hat, ad::Var z_hat) {
  return tape.scale(tape.mean_reduce(tape.cosine_rows(t_hat, z_hat)), -2.0);
}

Eigen::MatrixXd init_perturbation(Eigen::Index rows, Eigen::Index cols, double eps,
                                  std::uint64_t seed) {
  require(eps >= 0.0, ErrorKind::kInvalidArgument, "eps must be non-negative");
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(rows, cols);
  if (eps == 0.0) return d;
  Rng rng(seed);
  for (Eigen::Index i = 0; i < d.size(); ++i) d.data()[i] = rng.uniform(-eps, eps);
  return d;
}

void pgd_update(std::vector<Eigen::MatrixXd>& delta, const std::vector<Eigen::MatrixXd>& grad,
                double alpha, double eps) {
  require(delta.size() == grad.size(), ErrorKind::kStructural, "pgd_update: block count mismatch");
  double sq = 0.0;
  for (std::size_t b = 0; b < grad.size(); ++b) {
    require(grad[b].rows() == delta[b].rows() && grad[b].cols() == delta[b].cols(),
            ErrorKind::kStructural, "pgd_update: gradient shape does not match delta");
    sq += grad[b].squaredNorm();
  }
  if (sq == 0.0) return;
  const double step = alpha / std::sqrt(sq);
  for (std::size_t b = 0; b < delta.size(); ++b) {
    if (eps == 0.0) {
      delta[b].setZero();
      continue;
    }
    delta[b] = (delta[b] + step * grad[b]).cwiseMax(-eps).cwiseMin(eps);
  }
}

GradBuffer GradBuffer::zeros_like(const EncoderParams& params) {
  GradBuffer b;
  for (const auto* p : params.all()) b.sum.push_back(Eigen::MatrixXd::Zero(p->value.rows(), p->value.cols()));
  return b;
}

void GradBuffer::reset() {
  for (auto& m : sum) m.setZero();
  epochs = 0;
}

void accumulate_teacher_grad(GradBuffer& buffer, const std::vector<Eigen::MatrixXd>& grad,
                             std::size_t pgd_steps) {
  require(pgd_steps > 0, ErrorKind::kInvalidArgument, "pgd_steps must be positive");
  require(grad.size() == buffer.sum.size(), ErrorKind::kStructural,
          "accumulate_teacher_grad: parameter count mismatch");
  const double w = 1.0 / static_cast<double>(pgd_steps);
  for (std::size_t i = 0; i < grad.size(); ++i) {
    require(grad[i].rows() == buffer.sum[i].rows() && grad[i].cols() == buffer.sum[i].cols(),
            ErrorKind::kStructural, "accumulate_teacher_grad: shape mismatch");
    buffer.sum[i] += w * grad[i];
  }
}

OptimizerState OptimizerState::zeros_like(const EncoderParams& params) {
  OptimizerState s;
  for (const auto* p : params.all()) {
    s.m.push_back(Eigen::MatrixXd::Zero(p->value.rows(), p->value.cols()));
    s.v.push_back(Eigen::MatrixXd::Zero(p->value.rows(), p->value.cols()));
  }
  return s;
}

void teacher_step(EncoderParams& teacher, GradBuffer& buffer, OptimizerState& opt,
                  const TrainConfig& cfg) {
  auto params = teacher.all();
  require(params.size() == buffer.sum.size(), ErrorKind::kStructural,
          "teacher_step: buffer does not match the teacher");
  const double scale = 1.0 / static_cast<double>(std::max<std::size_t>(1, buffer.epochs));
  if (cfg.optimizer == OptimizerKind::kSgd) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      Eigen::MatrixXd& w = params[i]->value;
      w -= cfg.lr * (scale * buffer.sum[i] + cfg.weight_decay * w);
    }
  } else {
    require(opt.m.size() == params.size(), ErrorKind::kStructural,
            "teacher_step: optimizer state does not match the teacher");
    ++opt.steps;
    const double t = static_cast<double>(opt.steps);
    const double c1 = 1.0 - std::pow(cfg.adam_beta1, t);
    const double c2 = 1.0 - std::pow(cfg.adam_beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
      Eigen::MatrixXd& w = params[i]->value;
      const Eigen::MatrixXd g = scale * buffer.sum[i] + cfg.weight_decay * w;
      opt.m[i] = cfg.adam_beta1 * opt.m[i] + (1.0 - cfg.adam_beta1) * g;
      opt.v[i] = cfg.adam_beta2 * opt.v[i] + (1.0 - cfg.adam_beta2) * g.cwiseAbs2();
      w.array() -= cfg.lr * (opt.m[i].array() / c1) /
                   ((opt.v[i].array() / c2).sqrt() + cfg.adam_eps);
    }
  }
  buffer.reset();
}

void ema_step(EncoderParams& student, const EncoderParams& teacher, double beta) {
  auto s = student.shared();
  const auto t = teacher.shared();
  require(s.size() == t.size(), ErrorKind::kStructural, "ema_step: parameter count mismatch");
  for (std::size_t i = 0; i < s.size(); ++i) {
    require(s[i]->value.rows() == t[i]->value.rows() && s[i]->value.cols() == t[i]->value.cols(),
            ErrorKind::kStructural, "ema_step: shape mismatch for " + s[i]->name);
    s[i]->value = beta * s[i]->value + (1.0 - beta) * t[i]->value;
  }
}

TrainGraph make_train_graph(Graph graph, AugmentationPlan plan) {
  require(plan.n == graph.num_nodes(), ErrorKind::kStructural,
          "plan size does not match the graph");
  require(graph.features().rows() == static_cast<Eigen::Index>(graph.num_nodes()),
          ErrorKind::kStructural, "training graph needs node features");
  NormalizedLaplacian lap = normalized_laplacian(graph);
  return TrainGraph{std::move(graph), std::move(lap), std::move(plan)};
}

TrainState init_train_state(const ModelShape& shape, const TrainConfig& cfg, std::uint64_t seed) {
  require(cfg.eps >= 0.0 && cfg.pgd_step >= 0.0, ErrorKind::kInvalidArgument,
          "eps and pgd_step must be non-negative");
  require(cfg.pgd_steps > 0 && cfg.accum_steps > 0, ErrorKind::kInvalidArgument,
          "pgd_steps and accum_steps must be positive");
  require(cfg.ema_decay >= 0.0 && cfg.ema_decay <= 1.0, ErrorKind::kInvalidArgument,
          "ema_decay must lie in [0, 1]");
  TrainState s;
  s.cfg = cfg;
  s.seed = seed;
  s.teacher = init_params(shape, derive_seed(seed, 0x7eac), true);
  s.student = student_from(s.teacher);
  s.accum = GradBuffer::zeros_like(s.teacher);
  s.opt = OptimizerState::zeros_like(s.teacher);
  return s;
}

std::string to_json_line(const EpochMetrics& m) {
  nlohmann::json j;
  j["epoch"] = m.epoch;
  j["loss"] = m.loss;
  j["inner_losses"] = m.inner_losses;
  j["delta_max_abs"] = m.delta_max_abs;
  j["delta_norm"] = m.delta_norm;
  j["grad_norm"] = m.grad_norm;
  j["teacher_updated"] = m.teacher_updated;
  return j.dump();
}

namespace {

std::size_t site_width(const ModelShape& shape, PerturbSite site) {
  return site == PerturbSite::kFirstHidden ? shape.hidden.front() : shape.hidden.back();
}

struct TeacherPass {
  ad::Var loss;
  std::vector<ad::Var> delta;
};

ad::Var stacked_output(ad::Tape& tape, const std::vector<TrainGraph>& data,
                       const std::vector<SparseSym>& ops, const BoundParams& bound,
                       const ModelShape& shape, const std::vector<ad::Var>& delta,
                       PerturbSite site) {
  std::vector<ad::Var> outs;
  for (std::size_t g = 0; g < data.size(); ++g) {
    const ad::Var x = tape.leaf(data[g].graph.features());
    std::optional<Injection> inject;
    if (!delta.empty()) inject = Injection{delta[g], site};
    outs.push_back(encode(tape, ops[g], x, bound, shape, inject).output);
  }
  return outs.size() == 1 ? outs.front() : tape.vstack(outs);
}

Eigen::MatrixXd student_targets(const EncoderParams& student, const std::vector<TrainGraph>& data,
                                const std::vector<SparseSym>& ops) {
  ad::Tape tape;
  const BoundParams bound = bind(tape, student, false);
  const ad::Var h = stacked_output(tape, data, ops, bound, student.shape, {}, PerturbSite::kFirstHidden);
  return tape.value(student_project(tape, h, bound));
}

}  // namespace

EpochMetrics train_epoch(const std::vector<TrainGraph>& data, TrainState& state, bool flush,
                         const PgdObserver& observer) {
  require(!data.empty(), ErrorKind::kInvalidArgument, "train_epoch: no training graphs");
  const TrainConfig& cfg = state.cfg;
  const ModelShape& shape = state.teacher.shape;
  const std::uint64_t epoch = state.epoch + 1;
  const std::uint64_t epoch_seed = derive_seed(state.seed, epoch);

  std::vector<SparseSym> ops1;
  std::vector<SparseSym> ops2;
  std::vector<Eigen::MatrixXd> delta;
  const auto width = static_cast<Eigen::Index>(site_width(shape, cfg.site));
  for (std::size_t g = 0; g < data.size(); ++g) {
    const auto views = sample_views(data[g].lap, data[g].plan, derive_seed(epoch_seed, 2 * g),
                                    cfg.sample_rho);
    ops1.push_back(encoder_operator(views.view1, shape.kind));
    ops2.push_back(encoder_operator(views.view2, shape.kind));
    delta.push_back(init_perturbation(static_cast<Eigen::Index>(data[g].graph.num_nodes()), width,
                                      cfg.eps, derive_seed(epoch_seed, 2 * g + 1)));
  }

  const Eigen::MatrixXd z_hat = student_targets(state.student, data, ops2);
  Eigen::MatrixXd z_swap;
  if (cfg.symmetric_loss) z_swap = student_targets(state.student, data, ops1);

  GradBuffer contribution = GradBuffer::zeros_like(state.teacher);
  EpochMetrics metrics;
  metrics.epoch = epoch;
  for (std::size_t step = 1; step <= cfg.pgd_steps; ++step) {
    ad::Tape tape;
    const BoundParams bound = bind(tape, state.teacher, true);
    std::vector<ad::Var> dvars;
    for (const auto& d : delta) dvars.push_back(tape.leaf(d, true));

    const ad::Var h1 = stacked_output(tape, data, ops1, bound, shape, dvars, cfg.site);
    ad::Var loss = boot_loss(tape, teacher_project(tape, h1, bound), tape.leaf(z_hat));
    if (cfg.symmetric_loss) {
      const ad::Var h2 = stacked_output(tape, data, ops2, bound, shape, dvars, cfg.site);
      const ad::Var swapped = boot_loss(tape, teacher_project(tape, h2, bound), tape.leaf(z_swap));
      loss = tape.scale(tape.add(loss, swapped), 0.5);
    }
    const double value = tape.value(loss)(0, 0);
    if (!std::isfinite(value)) {
      fail(ErrorKind::kNumerical, "non-finite bootstrap loss at epoch " + std::to_string(epoch) +
                                      ", PGD step " + std::to_string(step));
    }
    tape.backward(loss);

    std::vector<Eigen::MatrixXd> grads;
    for (const auto* group : {&bound.encoder, &bound.projector, &bound.head}) {
      for (const auto& v : *group) grads.push_back(tape.grad(v));
    }
    accumulate_teacher_grad(contribution, grads, cfg.pgd_steps);

    std::vector<Eigen::MatrixXd> gdelta;
    for (const auto& v : dvars) gdelta.push_back(tape.grad(v));
    pgd_update(delta, gdelta, cfg.pgd_step, cfg.eps);
    double max_abs = 0.0;
    for (const auto& d : delta) max_abs = std::max(max_abs, d.cwiseAbs().maxCoeff());
    require(max_abs <= cfg.eps, ErrorKind::kNumerical, "PGD left the l-inf ball");

    metrics.inner_losses.push_back(value);
    if (observer) observer(epoch, step, delta, value);
  }

  double grad_sq = 0.0;
  for (std::size_t i = 0; i < contribution.sum.size(); ++i) {
    grad_sq += contribution.sum[i].squaredNorm();
    state.accum.sum[i] += contribution.sum[i];
  }
  ++state.accum.epochs;
  metrics.grad_norm = std::sqrt(grad_sq);
  if (flush || state.accum.epochs >= cfg.accum_steps) {
    teacher_step(state.teacher, state.accum, state.opt, cfg);
    metrics.teacher_updated = true;
  }
  ema_step(state.student, state.teacher, cfg.ema_decay);

  double dsq = 0.0;
  for (const auto& d : delta) {
    dsq += d.squaredNorm();
    metrics.delta_max_abs = std::max(metrics.delta_max_abs, d.cwiseAbs().maxCoeff());
  }
  metrics.delta_norm = std::sqrt(dsq);
  double sum = 0.0;
  for (double l : metrics.inner_losses) sum += l;
  metrics.loss = sum / static_cast<double>(metrics.inner_losses.size());
  state.delta = std::move(delta);
  state.epoch = epoch;
  return metrics;
}

Eigen::MatrixXd encoder_embeddings(const EncoderParams& params,
                                   const std::vector<TrainGraph>& data) {
  std::vector<Eigen::MatrixXd> parts;
  Eigen::Index rows = 0;
  for (const auto& tg : data) {
    parts.push_back(embed(params, tg.lap, tg.graph.features()));
    rows += parts.back().rows();
  }
  Eigen::MatrixXd out(rows, parts.empty() ? 0 : parts.front().cols());
  Eigen::Index r = 0;
  for (const auto& p : parts) {
    out.middleRows(r, p.rows()) = p;
    r += p.rows();
  }
  return out;
}

Eigen::MatrixXd student_embeddings(const TrainState& state, const std::vector<TrainGraph>& data) {
  return encoder_embeddings(state.student, data);
}

namespace {

constexpr char kMagic[8] = {'L', 'B', 'C', 'K', 'P', 'T', '\0', '\1'};
constexpr std::uint32_t kCheckpointVersion = 1;

class Writer {
 public:
  explicit Writer(const std::string& path) : out_(path, std::ios::binary) {
    require(out_.good(), ErrorKind::kIo, "cannot open " + path + " for writing");
  }
  void bytes(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }
  void u64(std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    bytes(b, 8);
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u64(s.size());
    bytes(s.data(), s.size());
  }
  void tensor(const std::string& name, const Eigen::MatrixXd& m) {
    str(name);
    u64(static_cast<std::uint64_t>(m.rows()));
    u64(static_cast<std::uint64_t>(m.cols()));
    // Row-major element order.
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) f64(m(i, j));
    }
  }
  void finish(const std::string& path) {
    out_.flush();
    require(out_.good(), ErrorKind::kIo, "write failed for " + path);
  }

 private:
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
    require(in_.good(), ErrorKind::kIo, "cannot open checkpoint " + path);
  }
  void bytes(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    require(in_.gcount() == static_cast<std::streamsize>(n), ErrorKind::kParse,
            path_ + ": truncated checkpoint");
  }
  std::uint64_t u64() {
    unsigned char b[8];
    bytes(b, 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint64_t n = u64();
    require(n < (1u << 24), ErrorKind::kParse, path_ + ": implausible string length");
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }
  std::pair<std::string, Eigen::MatrixXd> tensor() {
    std::string name = str();
    const std::uint64_t rows = u64();
    const std::uint64_t cols = u64();
    require(rows < (1u << 28) && cols < (1u << 28), ErrorKind::kParse,
            path_ + ": implausible tensor shape for " + name);
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = f64();
    }
    return {std::move(name), std::move(m)};
  }
  bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ifstream in_;
};

template <typename Fn>
void for_each_tensor(TrainState& s, Fn&& fn) {
  auto teacher = s.teacher.all();
  for (std::size_t i = 0; i < teacher.size(); ++i) {
    fn("teacher/" + teacher[i]->name, teacher[i]->value);
    fn("adam_m/" + teacher[i]->name, s.opt.m[i]);
    fn("adam_v/" + teacher[i]->name, s.opt.v[i]);
    fn("accum/" + teacher[i]->name, s.accum.sum[i]);
  }
  for (auto* p : s.student.all()) fn("student/" + p->name, p->value);
}

}  // namespace

std::uint64_t checkpoint_config_hash(const TrainState& state) {
  return text::fnv1a(describe(state.cfg, state.teacher.shape));
}

void save_checkpoint(const std::string& path, const TrainState& state) {
  Writer w(path);
  w.bytes(kMagic, sizeof kMagic);
  w.u64(kCheckpointVersion);
  w.u64(checkpoint_config_hash(state));
  w.u64(state.epoch);
  w.u64(state.seed);
  w.str(describe(state.cfg, state.teacher.shape));
  w.u64(state.accum.epochs);
  w.u64(state.opt.steps);
  auto& mutable_state = const_cast<TrainState&>(state);
  std::size_t count = 0;
  for_each_tensor(mutable_state, [&](const std::string&, Eigen::MatrixXd&) { ++count; });
  w.u64(count + state.delta.size());
  for_each_tensor(mutable_state, [&](const std::string& name, Eigen::MatrixXd& m) { w.tensor(name, m); });
  for (std::size_t g = 0; g < state.delta.size(); ++g) w.tensor("delta/" + std::to_string(g), state.delta[g]);
  w.finish(path);
}

TrainState load_checkpoint(const std::string& path) {
  Reader r(path);
  char magic[8];
  r.bytes(magic, sizeof magic);
  require(std::memcmp(magic, kMagic, sizeof kMagic) == 0, ErrorKind::kParse,
          path + ": not a checkpoint file");
  const std::uint64_t version = r.u64();
  require(version == kCheckpointVersion, ErrorKind::kParse,
          path + ": unsupported checkpoint version " + std::to_string(version));
  const std::uint64_t hash = r.u64();
  const std::uint64_t epoch = r.u64();
  const std::uint64_t seed = r.u64();
  const std::string config = r.str();
  require(text::fnv1a(config) == hash, ErrorKind::kParse, path + ": config hash mismatch");

  TrainConfig cfg;
  ModelShape shape;
  std::istringstream lines(config);
  std::string line;
  while (std::getline(lines, line)) {
    const auto eq = line.find('=');
    require(eq != std::string::npos, ErrorKind::kParse, path + ": bad config line '" + line + "'");
    require(apply_train_setting(cfg, shape, line.substr(0, eq), line.substr(eq + 1)),
            ErrorKind::kParse, path + ": unknown config key '" + line.substr(0, eq) + "'");
  }

  TrainState state = init_train_state(shape, cfg, seed);
  state.epoch = epoch;
  state.accum.epochs = r.u64();
  state.opt.steps = r.u64();
  const std::uint64_t count = r.u64();
  std::map<std::string, Eigen::MatrixXd> tensors;
  for (std::uint64_t i = 0; i < count; ++i) {
    auto [name, m] = r.tensor();
    require(tensors.emplace(name, std::move(m)).second, ErrorKind::kParse,
            path + ": duplicate tensor " + name);
  }
  require(r.at_end(), ErrorKind::kParse, path + ": trailing bytes");
  for_each_tensor(state, [&](const std::string& name, Eigen::MatrixXd& m) {
    auto it = tensors.find(name);
    require(it != tensors.end(), ErrorKind::kParse, path + ": missing tensor " + name);
    require(it->second.rows() == m.rows() && it->second.cols() == m.cols(), ErrorKind::kParse,
            path + ": shape mismatch for " + name);
    m = std::move(it->second);
    tensors.erase(it);
  });
  for (std::size_t g = 0;; ++g) {
    auto it = tensors.find("delta/" + std::to_string(g));
    if (it == tensors.end()) break;
    state.delta.push_back(std::move(it->second));
    tensors.erase(it);
  }
  require(tensors.empty(), ErrorKind::kParse, path + ": unexpected tensor " +
                                                  (tensors.empty() ? "" : tensors.begin()->first));
  return state;
}

}  // namespace lapboot
