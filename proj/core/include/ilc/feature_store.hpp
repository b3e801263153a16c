#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "ilc/errors.hpp"
#include "ilc/features.hpp"

namespace ilc::store {

// On-disk layout of an "ILCF" container:
//   magic "ILCF"
//   u64 LE manifest length, manifest JSON
//   labels  (num_samples x i32 LE)
//   groups  (num_samples x i32 LE)
//   one block per layer, ascending layer id: num_samples x d_l f32 LE,
//   row-major
//   u32 LE CRC32 over every prior byte
// A human-readable mirror of the manifest (plus the checksum) is written
// next to the store as "<file>.manifest.json".
struct StoreManifest {
  int format_version = 1;
  std::string split_name;
  std::vector<int> layer_ids;   // ascending; 0 means raw inputs
  std::vector<int> layer_dims;  // parallel to layer_ids
  int num_samples = 0;
  int num_classes = 0;
  int num_groups = 0;
  nlohmann::json provenance = nlohmann::json::object();
  std::uint32_t checksum = 0;  // filled in by write/read

  nlohmann::json to_json() const;
  static StoreManifest from_json(const nlohmann::json& j);
};

struct LayerBlock {
  int layer = 0;
  Eigen::MatrixXf data;  // num_samples x d_l
};

std::uint32_t write_store(const std::filesystem::path& path,
                          const StoreManifest& manifest,
                          const std::vector<LayerBlock>& blocks,
                          const std::vector<int>& labels,
                          const std::vector<int>& groups);

// Verifies the trailing CRC32 on open (streaming pass), then serves layer
// blocks lazily: load_layer seeks to the block and reads exactly its byte
// range. bytes_read() counts only those lazy reads, not the open pass.
class StoreReader {
 public:
  explicit StoreReader(const std::filesystem::path& path,
                       bool verify_checksum = true);

  const StoreManifest& manifest() const { return manifest_; }
  const std::vector<int>& labels() const { return labels_; }
  const std::vector<int>& groups() const { return groups_; }

  bool has_layer(int layer_id) const;
  Eigen::MatrixXf load_layer(int layer_id);
  Eigen::MatrixXd load_layer_d(int layer_id);

  std::uint64_t bytes_read() const { return bytes_read_; }

  FeatureSet read_all();

 private:
  std::filesystem::path path_;
  std::ifstream file_;
  StoreManifest manifest_;
  std::vector<int> labels_;
  std::vector<int> groups_;
  std::vector<std::uint64_t> layer_offsets_;  // absolute, parallel to layer_ids
  std::uint64_t bytes_read_ = 0;
};

FeatureSet read_store(const std::filesystem::path& path);

}  // namespace ilc::store
