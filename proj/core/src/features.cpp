#include "ilc/features.hpp"

#include <algorithm>

namespace ilc {

bool FeatureSet::has_layer(int id) const {
  return std::find(layer_ids.begin(), layer_ids.end(), id) != layer_ids.end();
}

const Eigen::MatrixXd& FeatureSet::layer(int id) const {
  for (std::size_t i = 0; i < layer_ids.size(); ++i) {
    if (layer_ids[i] == id) return layers[i];
  }
  throw LayerNotFound("feature set has no layer " + std::to_string(id));
}

FeatureSet FeatureSet::rows(const std::vector<std::size_t>& idx) const {
  FeatureSet out;
  out.layer_ids = layer_ids;
  out.num_classes = num_classes;
  out.num_groups = num_groups;
  for (const auto& m : layers) {
    Eigen::MatrixXd sub(static_cast<Eigen::Index>(idx.size()), m.cols());
    for (std::size_t k = 0; k < idx.size(); ++k) {
      sub.row(static_cast<Eigen::Index>(k)) = m.row(static_cast<Eigen::Index>(idx[k]));
    }
    out.layers.push_back(std::move(sub));
  }
  out.labels.reserve(idx.size());
  out.groups.reserve(idx.size());
  for (auto i : idx) {
    out.labels.push_back(labels[i]);
    out.groups.push_back(groups[i]);
  }
  return out;
}

std::vector<std::size_t> FeatureSet::group_rows(int group) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (groups[i] == group) out.push_back(i);
  }
  return out;
}

FeatureSet extract_features(const nn::Backbone& b, const LabeledDataset& ds) {
  auto fwd = b.forward_collect(ds.xs);
  FeatureSet fs;
  for (int l = 1; l < b.depth(); ++l) {
    fs.layer_ids.push_back(l);
    fs.layers.push_back(std::move(fwd.reps[static_cast<std::size_t>(l - 1)]));
  }
  fs.labels = ds.ys;
  fs.groups = ds.gs;
  fs.num_classes = ds.num_classes;
  fs.num_groups = ds.num_groups;
  return fs;
}

FeatureSet raw_features(const LabeledDataset& ds) {
  FeatureSet fs;
  fs.layer_ids.push_back(0);
  fs.layers.push_back(ds.xs);
  fs.labels = ds.ys;
  fs.groups = ds.gs;
  fs.num_classes = ds.num_classes;
  fs.num_groups = ds.num_groups;
  return fs;
}

}  // namespace ilc
