#include "ilc/feature_store.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cstring>

static_assert(std::endian::native == std::endian::little,
              "ILCF layout assumes a little-endian host");

namespace ilc::store {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'I', 'L', 'C', 'F'};

class CrcWriter {
 public:
  explicit CrcWriter(const std::filesystem::path& path)
      : out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw IOError("cannot open store for writing: " + path.string());
  }

  void write(const void* data, std::size_t size) {
    out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
    crc_ = crc32(crc_, static_cast<const Bytef*>(data),
                 static_cast<uInt>(size));
  }

  template <typename T>
  void write_pod(const T& v) {
    write(&v, sizeof(v));
  }

  std::uint32_t crc() const { return static_cast<std::uint32_t>(crc_); }

  void finish() {
    const std::uint32_t c = crc();
    out_.write(reinterpret_cast<const char*>(&c), sizeof(c));
    out_.flush();
    if (!out_) throw IOError("short write while closing store");
  }

 private:
  std::ofstream out_;
  uLong crc_ = crc32(0L, Z_NULL, 0);
};

}  // namespace

json StoreManifest::to_json() const {
  return json{{"format_version", format_version},
              {"split_name", split_name},
              {"layer_ids", layer_ids},
              {"layer_dims", layer_dims},
              {"num_samples", num_samples},
              {"num_classes", num_classes},
              {"num_groups", num_groups},
              {"provenance", provenance}};
}

StoreManifest StoreManifest::from_json(const json& j) {
  StoreManifest m;
  m.format_version = j.at("format_version").get<int>();
  m.split_name = j.at("split_name").get<std::string>();
  m.layer_ids = j.at("layer_ids").get<std::vector<int>>();
  m.layer_dims = j.at("layer_dims").get<std::vector<int>>();
  m.num_samples = j.at("num_samples").get<int>();
  m.num_classes = j.at("num_classes").get<int>();
  m.num_groups = j.at("num_groups").get<int>();
  m.provenance = j.value("provenance", json::object());
  return m;
}

std::uint32_t write_store(const std::filesystem::path& path,
                          const StoreManifest& manifest,
                          const std::vector<LayerBlock>& blocks,
                          const std::vector<int>& labels,
                          const std::vector<int>& groups) {
  if (manifest.layer_ids.empty() ||
      manifest.layer_ids.size() != manifest.layer_dims.size()) {
    throw ShapeError("manifest layer lists empty or mismatched");
  }
  if (manifest.num_samples <= 0) throw ShapeError("num_samples must be positive");
  if (!std::is_sorted(manifest.layer_ids.begin(), manifest.layer_ids.end())) {
    throw ShapeError("manifest layer ids must ascend");
  }
  if (blocks.size() != manifest.layer_ids.size()) {
    throw ShapeError("block count does not match manifest");
  }
  const auto n = static_cast<std::size_t>(manifest.num_samples);
  if (labels.size() != n || groups.size() != n) {
    throw ShapeError("labels/groups length must equal num_samples");
  }
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    if (blocks[k].layer != manifest.layer_ids[k]) {
      throw ShapeError("block layer order disagrees with manifest");
    }
    if (blocks[k].data.rows() != manifest.num_samples ||
        blocks[k].data.cols() != manifest.layer_dims[k]) {
      throw ShapeError("block shape disagrees with manifest for layer " +
                       std::to_string(blocks[k].layer));
    }
    if (!blocks[k].data.allFinite()) {
      throw NumericalError("non-finite feature in layer " +
                           std::to_string(blocks[k].layer));
    }
  }

  CrcWriter w(path);
  w.write(kMagic, sizeof(kMagic));
  const std::string mjson = manifest.to_json().dump();
  const std::uint64_t len = mjson.size();
  w.write_pod(len);
  w.write(mjson.data(), mjson.size());
  for (int v : labels) {
    const std::int32_t i = v;
    w.write_pod(i);
  }
  for (int v : groups) {
    const std::int32_t i = v;
    w.write_pod(i);
  }
  for (const auto& blk : blocks) {
    for (Eigen::Index r = 0; r < blk.data.rows(); ++r) {
      for (Eigen::Index c = 0; c < blk.data.cols(); ++c) {
        w.write_pod(blk.data(r, c));
      }
    }
  }
  const std::uint32_t crc = w.crc();
  w.finish();

  json mirror = manifest.to_json();
  mirror["checksum"] = crc;
  std::ofstream mout(path.string() + ".manifest.json", std::ios::trunc);
  mout << mirror.dump(2) << "\n";

  return crc;
}

StoreReader::StoreReader(const std::filesystem::path& path, bool verify_checksum)
    : path_(path), file_(path, std::ios::binary) {
  if (!file_) throw MissingArtifact("store not found: " + path.string());

  char magic[4];
  file_.read(magic, sizeof(magic));
  if (!file_ || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw FormatError("bad magic: not an ILCF store: " + path.string());
  }
  std::uint64_t len = 0;
  file_.read(reinterpret_cast<char*>(&len), sizeof(len));
  if (!file_ || len == 0 || len > (1ull << 28)) {
    throw FormatError("bad manifest length");
  }
  std::string mjson(len, '\0');
  file_.read(mjson.data(), static_cast<std::streamsize>(len));
  if (!file_) throw FormatError("truncated manifest");
  try {
    manifest_ = StoreManifest::from_json(json::parse(mjson));
  } catch (const json::exception& e) {
    throw FormatError(std::string("manifest is not valid JSON: ") + e.what());
  }
  if (manifest_.format_version != 1) throw FormatError("unsupported store version");

  const auto n = static_cast<std::size_t>(manifest_.num_samples);
  const std::uint64_t header_end = 4 + 8 + len;
  const std::uint64_t labels_off = header_end;
  const std::uint64_t groups_off = labels_off + 4ull * n;
  std::uint64_t off = groups_off + 4ull * n;
  layer_offsets_.clear();
  for (std::size_t k = 0; k < manifest_.layer_ids.size(); ++k) {
    layer_offsets_.push_back(off);
    off += 4ull * n * static_cast<std::uint64_t>(manifest_.layer_dims[k]);
  }
  const std::uint64_t payload_end = off;

  if (verify_checksum) {
    std::ifstream scan(path, std::ios::binary);
    uLong crc = crc32(0L, Z_NULL, 0);
    std::vector<char> buf(1 << 16);
    std::uint64_t remaining = payload_end;
    while (remaining > 0 && scan) {
      const auto chunk = static_cast<std::streamsize>(
          std::min<std::uint64_t>(remaining, buf.size()));
      scan.read(buf.data(), chunk);
      if (scan.gcount() != chunk) throw FormatError("store truncated mid-payload");
      crc = crc32(crc, reinterpret_cast<const Bytef*>(buf.data()),
                  static_cast<uInt>(chunk));
      remaining -= static_cast<std::uint64_t>(chunk);
    }
    std::uint32_t stored = 0;
    scan.read(reinterpret_cast<char*>(&stored), sizeof(stored));
    if (!scan) throw FormatError("store missing trailing checksum");
    if (stored != static_cast<std::uint32_t>(crc)) {
      throw ChecksumError("store checksum mismatch: " + path.string());
    }
    manifest_.checksum = stored;
  }

  labels_.resize(n);
  groups_.resize(n);
  file_.seekg(static_cast<std::streamoff>(labels_off));
  file_.read(reinterpret_cast<char*>(labels_.data()),
             static_cast<std::streamsize>(4 * n));
  file_.read(reinterpret_cast<char*>(groups_.data()),
             static_cast<std::streamsize>(4 * n));
  if (!file_) throw FormatError("store truncated in label/group blocks");
}

bool StoreReader::has_layer(int layer_id) const {
  return std::find(manifest_.layer_ids.begin(), manifest_.layer_ids.end(),
                   layer_id) != manifest_.layer_ids.end();
}

Eigen::MatrixXf StoreReader::load_layer(int layer_id) {
  auto it = std::find(manifest_.layer_ids.begin(), manifest_.layer_ids.end(),
                      layer_id);
  if (it == manifest_.layer_ids.end()) {
    throw LayerNotFound("store " + path_.string() + " has no layer " +
                        std::to_string(layer_id));
  }
  const auto k = static_cast<std::size_t>(it - manifest_.layer_ids.begin());
  const auto n = static_cast<Eigen::Index>(manifest_.num_samples);
  const auto d = static_cast<Eigen::Index>(manifest_.layer_dims[k]);

  // Stored row-major; Eigen is column-major, so read into a row-major map.
  Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> buf(n, d);
  file_.seekg(static_cast<std::streamoff>(layer_offsets_[k]));
  const std::uint64_t bytes = 4ull * static_cast<std::uint64_t>(n) *
                              static_cast<std::uint64_t>(d);
  file_.read(reinterpret_cast<char*>(buf.data()),
             static_cast<std::streamsize>(bytes));
  if (!file_) throw FormatError("store truncated in layer block");
  bytes_read_ += bytes;
  return buf;
}

Eigen::MatrixXd StoreReader::load_layer_d(int layer_id) {
  return load_layer(layer_id).cast<double>();
}

FeatureSet StoreReader::read_all() {
  FeatureSet fs;
  fs.layer_ids = manifest_.layer_ids;
  for (int id : manifest_.layer_ids) fs.layers.push_back(load_layer_d(id));
  fs.labels = labels_;
  fs.groups = groups_;
  fs.num_classes = manifest_.num_classes;
  fs.num_groups = manifest_.num_groups;
  return fs;
}

FeatureSet read_store(const std::filesystem::path& path) {
  StoreReader reader(path);
  return reader.read_all();
}

}  // namespace ilc::store
