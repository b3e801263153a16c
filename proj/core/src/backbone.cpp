#include "ilc/backbone.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>

#include "ilc/linalg.hpp"
#include "ilc/rng.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint and store formats assume a little-endian host");

namespace ilc {

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd p(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    Eigen::ArrayXd e = (logits.row(i).array() - m).exp();
    p.row(i) = (e / e.sum()).matrix();
  }
  return p;
}

std::vector<int> argmax_rows(const Eigen::MatrixXd& logits) {
  std::vector<int> out(static_cast<std::size_t>(logits.rows()));
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    int best = 0;
    for (Eigen::Index j = 1; j < logits.cols(); ++j) {
      if (logits(i, j) > logits(i, best)) best = static_cast<int>(j);
    }
    out[static_cast<std::size_t>(i)] = best;
  }
  return out;
}

Eigen::MatrixXd affine_rows(const Eigen::MatrixXd& a, const Eigen::MatrixXd& W,
                            const Eigen::VectorXd& b) {
  Eigen::MatrixXd z = b.transpose().replicate(a.rows(), 1);
  for (Eigen::Index k = 0; k < a.cols(); ++k) {
    z.noalias() += a.col(k) * W.col(k).transpose();
  }
  return z;
}

}  // namespace ilc

namespace ilc::nn {

using nlohmann::json;

const char* to_string(LayerKind k) {
  switch (k) {
    case LayerKind::AffineRelu: return "affine_relu";
    case LayerKind::AffineResidualRelu: return "affine_residual_relu";
    case LayerKind::LinearHead: return "linear_head";
  }
  return "?";
}

LayerKind layer_kind_from_string(const std::string& s) {
  if (s == "affine_relu") return LayerKind::AffineRelu;
  if (s == "affine_residual_relu") return LayerKind::AffineResidualRelu;
  if (s == "linear_head") return LayerKind::LinearHead;
  throw InvalidSpec("unknown layer kind: " + s);
}

Backbone Backbone::build(const std::vector<LayerSpec>& spec,
                         std::uint64_t init_seed) {
  if (spec.size() < 3) throw InvalidSpec("backbone needs at least 3 layers");
  for (std::size_t l = 0; l < spec.size(); ++l) {
    if (spec[l].in_dim <= 0 || spec[l].out_dim <= 0) {
      throw InvalidSpec("nonpositive layer dimension at layer " +
                        std::to_string(l + 1));
    }
    if (l > 0 && spec[l].in_dim != spec[l - 1].out_dim) {
      throw InvalidSpec("dimension mismatch between layers " +
                        std::to_string(l) + " and " + std::to_string(l + 1));
    }
    if (spec[l].kind == LayerKind::AffineResidualRelu &&
        spec[l].in_dim != spec[l].out_dim) {
      throw InvalidSpec("residual layer requires in_dim == out_dim");
    }
    const bool is_last = l + 1 == spec.size();
    if ((spec[l].kind == LayerKind::LinearHead) != is_last) {
      throw InvalidSpec("exactly one linear head, at the last position");
    }
  }

  Backbone b;
  b.specs_ = spec;
  b.init_seed_ = init_seed;
  Rng root(init_seed);
  for (std::size_t l = 0; l < spec.size(); ++l) {
    Rng rng = root.substream("init", l);
    const double bound = 1.0 / std::sqrt(static_cast<double>(spec[l].in_dim));
    Eigen::MatrixXd W(spec[l].out_dim, spec[l].in_dim);
    for (int r = 0; r < spec[l].out_dim; ++r) {
      for (int c = 0; c < spec[l].in_dim; ++c) W(r, c) = rng.uniform(-bound, bound);
    }
    b.W_.push_back(std::move(W));
    b.b_.push_back(Eigen::VectorXd::Zero(spec[l].out_dim));
  }
  return b;
}

int Backbone::layer_dim(int layer) const {
  if (layer < 1 || layer > depth()) throw ShapeError("layer index out of range");
  return specs_[static_cast<std::size_t>(layer - 1)].out_dim;
}

Backbone Backbone::thawed_copy() const {
  Backbone b = *this;
  b.frozen_ = false;
  return b;
}

void Backbone::check_mutable() const {
  if (frozen_) throw FrozenModel("backbone is frozen; parameters are immutable");
}

namespace {

Eigen::MatrixXd apply_layer(const LayerSpec& spec, const Eigen::MatrixXd& W,
                            const Eigen::VectorXd& b, const Eigen::MatrixXd& a) {
  Eigen::MatrixXd z = affine_rows(a, W, b);
  switch (spec.kind) {
    case LayerKind::LinearHead:
      return z;
    case LayerKind::AffineResidualRelu:
      z += a;
      [[fallthrough]];
    case LayerKind::AffineRelu:
      return z.cwiseMax(0.0);
  }
  return z;
}

}  // namespace

ForwardResult Backbone::forward_collect(const Eigen::MatrixXd& x) const {
  if (x.cols() != input_dim()) {
    throw ShapeError("input width " + std::to_string(x.cols()) +
                     " does not match backbone input dim " +
                     std::to_string(input_dim()));
  }
  ForwardResult out;
  Eigen::MatrixXd a = x;
  for (int l = 1; l < depth(); ++l) {
    const auto idx = static_cast<std::size_t>(l - 1);
    a = apply_layer(specs_[idx], W_[idx], b_[idx], a);
    out.reps.push_back(a);
  }
  out.logits = apply_layer(specs_.back(), W_.back(), b_.back(), a);
  return out;
}

Eigen::MatrixXd Backbone::representation(int layer, const Eigen::MatrixXd& x,
                                         int* layer_evals) const {
  if (layer < 1 || layer >= depth()) {
    throw ShapeError("representation layer must lie in [1, L-1]");
  }
  if (x.cols() != input_dim()) throw ShapeError("input width mismatch");
  int evals = 0;
  Eigen::MatrixXd a = x;
  for (int l = 1; l <= layer; ++l) {
    const auto idx = static_cast<std::size_t>(l - 1);
    a = apply_layer(specs_[idx], W_[idx], b_[idx], a);
    ++evals;
  }
  if (layer_evals) *layer_evals = evals;
  return a;
}

Eigen::MatrixXd Backbone::logits(const Eigen::MatrixXd& x) const {
  return forward_collect(x).logits;
}

std::vector<int> Backbone::predict(const Eigen::MatrixXd& x) const {
  return argmax_rows(logits(x));
}

double mean_cross_entropy(const Eigen::MatrixXd& logits,
                          const std::vector<int>& labels) {
  if (static_cast<std::size_t>(logits.rows()) != labels.size()) {
    throw ShapeError("logit rows and labels disagree");
  }
  if (labels.empty()) throw EmptyInput("cross entropy of empty batch");
  double total = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    const double lse = m + std::log((logits.row(i).array() - m).exp().sum());
    total += lse - logits(i, labels[static_cast<std::size_t>(i)]);
  }
  return total / static_cast<double>(logits.rows());
}

namespace {

struct TapeEntry {
  Eigen::MatrixXd input;    // a_{l-1}
  Eigen::MatrixXd preact;   // value before the ReLU mask decision
};

struct Grads {
  std::vector<Eigen::MatrixXd> dW;
  std::vector<Eigen::VectorXd> db;
};

// Forward with tape + backward of mean CE. The gradients are exact for the
// relu'(0) = 0 convention.
Grads backprop(const std::vector<LayerSpec>& specs,
               const std::vector<Eigen::MatrixXd>& W,
               const std::vector<Eigen::VectorXd>& b, const Eigen::MatrixXd& x,
               const std::vector<int>& y, double* loss_out) {
  const auto L = specs.size();
  std::vector<TapeEntry> tape(L);
  Eigen::MatrixXd a = x;
  for (std::size_t l = 0; l < L; ++l) {
    tape[l].input = a;
    Eigen::MatrixXd z = affine_rows(a, W[l], b[l]);
    if (specs[l].kind == LayerKind::AffineResidualRelu) z += a;
    tape[l].preact = z;
    a = (specs[l].kind == LayerKind::LinearHead) ? z : z.cwiseMax(0.0).eval();
  }
  if (loss_out) *loss_out = mean_cross_entropy(a, y);

  const double inv_n = 1.0 / static_cast<double>(x.rows());
  Eigen::MatrixXd delta = softmax_rows(a);
  for (Eigen::Index i = 0; i < delta.rows(); ++i) {
    delta(i, y[static_cast<std::size_t>(i)]) -= 1.0;
  }
  delta *= inv_n;

  Grads g;
  g.dW.resize(L);
  g.db.resize(L);
  for (std::size_t l = L; l-- > 0;) {
    if (specs[l].kind != LayerKind::LinearHead) {
      delta = (tape[l].preact.array() > 0.0).select(delta, 0.0);
    }
    g.dW[l].noalias() = delta.transpose() * tape[l].input;
    g.db[l] = delta.colwise().sum();
    if (l > 0) {
      Eigen::MatrixXd prev = delta * W[l];
      if (specs[l].kind == LayerKind::AffineResidualRelu) prev += delta;
      delta = std::move(prev);
    }
  }
  return g;
}

struct AdamState {
  std::vector<Eigen::MatrixXd> mW, vW;
  std::vector<Eigen::VectorXd> mb, vb;
  long t = 0;

  explicit AdamState(const std::vector<Eigen::MatrixXd>& W,
                     const std::vector<Eigen::VectorXd>& b) {
    for (std::size_t l = 0; l < W.size(); ++l) {
      mW.push_back(Eigen::MatrixXd::Zero(W[l].rows(), W[l].cols()));
      vW.push_back(Eigen::MatrixXd::Zero(W[l].rows(), W[l].cols()));
      mb.push_back(Eigen::VectorXd::Zero(b[l].size()));
      vb.push_back(Eigen::VectorXd::Zero(b[l].size()));
    }
  }

  template <typename P>
  void update_one(P& p, const P& g, P& m, P& v, const TrainConfig& cfg) {
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseProduct(g);
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    p.array() -= cfg.lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg.adam_eps);
  }

  void step(std::vector<Eigen::MatrixXd>& W, std::vector<Eigen::VectorXd>& b,
            const Grads& g, const TrainConfig& cfg) {
    ++t;
    for (std::size_t l = 0; l < W.size(); ++l) {
      update_one(W[l], g.dW[l], mW[l], vW[l], cfg);
      update_one(b[l], g.db[l], mb[l], vb[l], cfg);
    }
  }
};

}  // namespace

TrainStats Backbone::train(const LabeledDataset& ds, const TrainConfig& cfg) {
  check_mutable();
  if (ds.num_classes != num_classes()) {
    throw InvalidParam("dataset class count does not match backbone head");
  }
  if (ds.dim() != input_dim()) throw ShapeError("dataset width mismatch");
  if (cfg.batch_size <= 0 || cfg.lr <= 0.0) throw InvalidParam("bad train config");
  train_seed_ = cfg.seed;

  TrainStats stats;
  AdamState adam(W_, b_);
  Rng root(cfg.seed);
  const auto n = static_cast<std::size_t>(ds.n());

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    auto perm = root.substream("epoch", static_cast<std::uint64_t>(epoch))
                    .permutation(n);
    double epoch_loss = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop = std::min(n, start + static_cast<std::size_t>(cfg.batch_size));
      std::vector<std::size_t> rows(perm.begin() + static_cast<std::ptrdiff_t>(start),
                                    perm.begin() + static_cast<std::ptrdiff_t>(stop));
      Eigen::MatrixXd xb(rows.size(), ds.dim());
      std::vector<int> yb(rows.size());
      for (std::size_t i = 0; i < rows.size(); ++i) {
        xb.row(static_cast<Eigen::Index>(i)) = ds.xs.row(static_cast<Eigen::Index>(rows[i]));
        yb[i] = ds.ys[rows[i]];
      }
      double loss = 0.0;
      Grads g = backprop(specs_, W_, b_, xb, yb, &loss);
      if (!std::isfinite(loss)) {
        throw DivergenceError("training loss became non-finite at epoch " +
                              std::to_string(epoch));
      }
      adam.step(W_, b_, g, cfg);
      epoch_loss += loss;
      ++batches;
    }
    stats.epoch_loss.push_back(epoch_loss / std::max(batches, 1));
  }

  auto preds = predict(ds.xs);
  int correct = 0;
  for (int i = 0; i < ds.n(); ++i) {
    if (preds[static_cast<std::size_t>(i)] == ds.ys[static_cast<std::size_t>(i)]) ++correct;
  }
  stats.train_accuracy = static_cast<double>(correct) / std::max(ds.n(), 1);
  freeze();
  return stats;
}

const Eigen::MatrixXd& Backbone::weight(int layer) const {
  if (layer < 1 || layer > depth()) throw ShapeError("layer index out of range");
  return W_[static_cast<std::size_t>(layer - 1)];
}

const Eigen::VectorXd& Backbone::bias(int layer) const {
  if (layer < 1 || layer > depth()) throw ShapeError("layer index out of range");
  return b_[static_cast<std::size_t>(layer - 1)];
}

void Backbone::set_layer_params(int layer, const Eigen::MatrixXd& W,
                                const Eigen::VectorXd& b) {
  check_mutable();
  if (layer < 1 || layer > depth()) throw ShapeError("layer index out of range");
  const auto idx = static_cast<std::size_t>(layer - 1);
  if (W.rows() != W_[idx].rows() || W.cols() != W_[idx].cols() ||
      b.size() != b_[idx].size()) {
    throw ShapeError("parameter shapes do not match layer spec");
  }
  W_[idx] = W;
  b_[idx] = b;
}

std::size_t Backbone::num_params() const {
  std::size_t total = 0;
  for (std::size_t l = 0; l < W_.size(); ++l) {
    total += static_cast<std::size_t>(W_[l].size() + b_[l].size());
  }
  return total;
}

namespace {

// flat layout: layer 1..L, W row-major then b
struct ParamRef {
  std::size_t layer;
  bool is_bias;
  Eigen::Index row, col;
};

ParamRef locate(const std::vector<Eigen::MatrixXd>& W,
                const std::vector<Eigen::VectorXd>& b, std::size_t flat) {
  for (std::size_t l = 0; l < W.size(); ++l) {
    const auto wn = static_cast<std::size_t>(W[l].size());
    if (flat < wn) {
      const auto cols = static_cast<std::size_t>(W[l].cols());
      return {l, false, static_cast<Eigen::Index>(flat / cols),
              static_cast<Eigen::Index>(flat % cols)};
    }
    flat -= wn;
    const auto bn = static_cast<std::size_t>(b[l].size());
    if (flat < bn) return {l, true, static_cast<Eigen::Index>(flat), 0};
    flat -= bn;
  }
  throw ShapeError("flat parameter index out of range");
}

}  // namespace

double Backbone::get_param(std::size_t flat) const {
  const auto r = locate(W_, b_, flat);
  return r.is_bias ? b_[r.layer](r.row) : W_[r.layer](r.row, r.col);
}

void Backbone::set_param(std::size_t flat, double value) {
  check_mutable();
  const auto r = locate(W_, b_, flat);
  if (r.is_bias) {
    b_[r.layer](r.row) = value;
  } else {
    W_[r.layer](r.row, r.col) = value;
  }
}

void Backbone::save(const std::filesystem::path& path) const {
  json header;
  header["format_version"] = 1;
  json layers = json::array();
  for (const auto& s : specs_) {
    layers.push_back({{"kind", to_string(s.kind)},
                      {"in_dim", s.in_dim},
                      {"out_dim", s.out_dim}});
  }
  header["layers"] = std::move(layers);
  header["init_seed"] = init_seed_;
  header["train_seed"] = train_seed_;
  header["frozen"] = frozen_;

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IOError("cannot open checkpoint for writing: " + path.string());
  const std::string h = header.dump();
  const std::uint64_t len = h.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(h.data(), static_cast<std::streamsize>(h.size()));
  for (std::size_t l = 0; l < W_.size(); ++l) {
    for (Eigen::Index r = 0; r < W_[l].rows(); ++r) {
      for (Eigen::Index c = 0; c < W_[l].cols(); ++c) {
        const float v = static_cast<float>(W_[l](r, c));
        out.write(reinterpret_cast<const char*>(&v), sizeof(v));
      }
    }
    for (Eigen::Index r = 0; r < b_[l].size(); ++r) {
      const float v = static_cast<float>(b_[l](r));
      out.write(reinterpret_cast<const char*>(&v), sizeof(v));
    }
  }
  if (!out) throw IOError("short write to checkpoint: " + path.string());
}

Backbone Backbone::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifact("checkpoint not found: " + path.string());
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  if (!in || len == 0 || len > (1ull << 24)) {
    throw FormatError("bad checkpoint header length");
  }
  std::string h(len, '\0');
  in.read(h.data(), static_cast<std::streamsize>(len));
  if (!in) throw FormatError("truncated checkpoint header");
  json header;
  try {
    header = json::parse(h);
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint header is not JSON: ") + e.what());
  }
  if (header.value("format_version", 0) != 1) {
    throw FormatError("unsupported checkpoint version");
  }

  Backbone b;
  for (const auto& ls : header.at("layers")) {
    b.specs_.push_back({layer_kind_from_string(ls.at("kind").get<std::string>()),
                        ls.at("in_dim").get<int>(), ls.at("out_dim").get<int>()});
  }
  b.init_seed_ = header.value("init_seed", 0ull);
  b.train_seed_ = header.value("train_seed", 0ull);
  for (const auto& s : b.specs_) {
    Eigen::MatrixXd W(s.out_dim, s.in_dim);
    for (int r = 0; r < s.out_dim; ++r) {
      for (int c = 0; c < s.in_dim; ++c) {
        float v = 0.0f;
        in.read(reinterpret_cast<char*>(&v), sizeof(v));
        W(r, c) = static_cast<double>(v);
      }
    }
    Eigen::VectorXd bias(s.out_dim);
    for (int r = 0; r < s.out_dim; ++r) {
      float v = 0.0f;
      in.read(reinterpret_cast<char*>(&v), sizeof(v));
      bias(r) = static_cast<double>(v);
    }
    if (!in) throw FormatError("truncated checkpoint parameter block");
    b.W_.push_back(std::move(W));
    b.b_.push_back(std::move(bias));
  }
  b.frozen_ = header.value("frozen", false);
  return b;
}

double gradient_check(const Backbone& b, const Eigen::MatrixXd& x,
                      const std::vector<int>& y, double epsilon,
                      int samples_per_layer, std::uint64_t seed) {
  if (epsilon < 1e-7 || epsilon > 1e-3) {
    throw InvalidParam("gradient-check epsilon must lie in [1e-7, 1e-3]");
  }
  Backbone m = b.thawed_copy();
  std::vector<Eigen::MatrixXd> W;
  std::vector<Eigen::VectorXd> bias;
  for (int l = 1; l <= m.depth(); ++l) {
    W.push_back(m.weight(l));
    bias.push_back(m.bias(l));
  }
  double loss = 0.0;
  Grads analytic = backprop(m.spec(), W, bias, x, y, &loss);

  Rng rng = Rng(seed).substream("gradcheck");
  double max_err = 0.0;
  std::size_t layer_base = 0;
  for (int l = 0; l < m.depth(); ++l) {
    const auto lw = static_cast<std::size_t>(analytic.dW[static_cast<std::size_t>(l)].size());
    const auto lb = static_cast<std::size_t>(analytic.db[static_cast<std::size_t>(l)].size());
    const std::size_t span = lw + lb;
    auto perm = rng.permutation(span);
    const auto take = std::min<std::size_t>(perm.size(),
                                            static_cast<std::size_t>(samples_per_layer));
    for (std::size_t k = 0; k < take; ++k) {
      const std::size_t flat = layer_base + perm[k];
      const double orig = m.get_param(flat);
      m.set_param(flat, orig + epsilon);
      const double lp = mean_cross_entropy(m.logits(x), y);
      m.set_param(flat, orig - epsilon);
      const double lm = mean_cross_entropy(m.logits(x), y);
      m.set_param(flat, orig);
      const double numeric = (lp - lm) / (2.0 * epsilon);

      double analytic_v;
      if (perm[k] < lw) {
        const auto cols = static_cast<std::size_t>(
            analytic.dW[static_cast<std::size_t>(l)].cols());
        analytic_v = analytic.dW[static_cast<std::size_t>(l)](
            static_cast<Eigen::Index>(perm[k] / cols),
            static_cast<Eigen::Index>(perm[k] % cols));
      } else {
        analytic_v = analytic.db[static_cast<std::size_t>(l)](
            static_cast<Eigen::Index>(perm[k] - lw));
      }
      const double denom = std::max({std::abs(analytic_v), std::abs(numeric), 1e-12});
      max_err = std::max(max_err, std::abs(analytic_v - numeric) / denom);
    }
    layer_base += span;
  }
  return max_err;
}

std::vector<LayerSpec> mlp_spec(int input_dim, int hidden_dim, int depth,
                                int num_classes, bool residual_blocks) {
  if (depth < 3) throw InvalidSpec("mlp depth must be >= 3");
  std::vector<LayerSpec> spec;
  spec.push_back({LayerKind::AffineRelu, input_dim, hidden_dim});
  for (int l = 2; l < depth; ++l) {
    const bool residual = residual_blocks && (l % 2 == 0);
    spec.push_back({residual ? LayerKind::AffineResidualRelu : LayerKind::AffineRelu,
                    hidden_dim, hidden_dim});
  }
  spec.push_back({LayerKind::LinearHead, hidden_dim, num_classes});
  return spec;
}

}  // namespace ilc::nn
