#pragma once

#include <Eigen/Dense>
#include <vector>

#include "ilc/backbone.hpp"
#include "ilc/dataset.hpp"
#include "ilc/errors.hpp"

namespace ilc {

// In-memory per-layer features for one split, the common currency between
// extraction, the feature store, and probe training. Layer id 0 denotes raw
// inputs.
struct FeatureSet {
  std::vector<int> layer_ids;
  std::vector<Eigen::MatrixXd> layers;
  std::vector<int> labels;
  std::vector<int> groups;
  int num_classes = 0;
  int num_groups = 0;

  int n() const { return static_cast<int>(labels.size()); }
  bool has_layer(int id) const;
  const Eigen::MatrixXd& layer(int id) const;  // throws LayerNotFound

  FeatureSet rows(const std::vector<std::size_t>& idx) const;
  std::vector<std::size_t> group_rows(int group) const;
};

// r_l for l = 1..L-1 through a frozen backbone.
FeatureSet extract_features(const nn::Backbone& b, const LabeledDataset& ds);

// The dataset itself as a single layer-0 block.
FeatureSet raw_features(const LabeledDataset& ds);

}  // namespace ilc
