#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ilc/dataset.hpp"

namespace ilc::nn {

enum class LayerKind { AffineRelu, AffineResidualRelu, LinearHead };

const char* to_string(LayerKind k);
LayerKind layer_kind_from_string(const std::string& s);

struct LayerSpec {
  LayerKind kind = LayerKind::AffineRelu;
  int in_dim = 0;
  int out_dim = 0;
};

struct TrainConfig {
  int epochs = 50;
  double lr = 1e-3;
  int batch_size = 128;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
};

struct TrainStats {
  std::vector<double> epoch_loss;  // mean mini-batch CE per epoch
  double train_accuracy = 0.0;     // on the training set, after the last epoch
};

struct ForwardResult {
  std::vector<Eigen::MatrixXd> reps;  // reps[l-1] holds r_l for l = 1..L-1
  Eigen::MatrixXd logits;             // n x K
};

// f = f_L ∘ ... ∘ f_1 with a linear classifier head at position L and ReLU
// layers (optionally with identity skip) below it. Representations r_l are
// the post-activation outputs, already flat; no pooling anywhere.
//
// The forward path computes each output coefficient with a fixed-order dot
// product, so a row's value is independent of how the batch around it is
// shaped. Truncated inference therefore reproduces full-pass representations
// bit for bit.
class Backbone {
 public:
  static Backbone build(const std::vector<LayerSpec>& spec,
                        std::uint64_t init_seed);

  int depth() const { return static_cast<int>(specs_.size()); }  // L
  int input_dim() const { return specs_.front().in_dim; }
  int num_classes() const { return specs_.back().out_dim; }
  int layer_dim(int layer) const;  // output width of layer (1-based)
  const std::vector<LayerSpec>& spec() const { return specs_; }

  bool frozen() const { return frozen_; }
  void freeze() { frozen_ = true; }
  Backbone thawed_copy() const;

  std::uint64_t init_seed() const { return init_seed_; }
  std::uint64_t train_seed() const { return train_seed_; }

  ForwardResult forward_collect(const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd representation(int layer, const Eigen::MatrixXd& x,
                                 int* layer_evals = nullptr) const;
  Eigen::MatrixXd logits(const Eigen::MatrixXd& x) const;
  std::vector<int> predict(const Eigen::MatrixXd& x) const;

  // Trains with Adam on mean cross-entropy and freezes the model. Throws
  // DivergenceError if the loss leaves the finite range, FrozenModel if the
  // model was already frozen.
  TrainStats train(const LabeledDataset& ds, const TrainConfig& cfg);

  const Eigen::MatrixXd& weight(int layer) const;  // out x in
  const Eigen::VectorXd& bias(int layer) const;
  void set_layer_params(int layer, const Eigen::MatrixXd& W,
                        const Eigen::VectorXd& b);

  std::size_t num_params() const;
  double get_param(std::size_t flat) const;
  void set_param(std::size_t flat, double value);

  // Checkpoint: JSON header + float32 little-endian parameter blocks in
  // layer order (W row-major, then b). Save/load round-trips bit-exactly.
  void save(const std::filesystem::path& path) const;
  static Backbone load(const std::filesystem::path& path);

 private:
  Backbone() = default;
  std::vector<LayerSpec> specs_;
  std::vector<Eigen::MatrixXd> W_;  // out x in
  std::vector<Eigen::VectorXd> b_;
  bool frozen_ = false;
  std::uint64_t init_seed_ = 0;
  std::uint64_t train_seed_ = 0;

  void check_mutable() const;
};

double mean_cross_entropy(const Eigen::MatrixXd& logits,
                          const std::vector<int>& labels);

// Max relative error between backprop gradients and central differences over
// randomly sampled parameter coordinates.
double gradient_check(const Backbone& b, const Eigen::MatrixXd& x,
                      const std::vector<int>& y, double epsilon,
                      int samples_per_layer = 20, std::uint64_t seed = 0);

std::vector<LayerSpec> mlp_spec(int input_dim, int hidden_dim, int depth,
                                int num_classes, bool residual_blocks = true);

}  // namespace ilc::nn
