#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ilc/errors.hpp"

namespace ilc {

enum class DistTag { ID, OOD };
enum class ShiftKind { Conditional, Subpopulation, InputNoise };
enum class Scenario { ZeroShot, FewShot };

const char* to_string(DistTag t);
const char* to_string(ShiftKind k);
const char* to_string(Scenario s);

// Row i of `xs` is sample i; labels/groups/tags/ids are parallel arrays.
// Sample ids are unique within a generation run and let split logic reason
// about identity (probe/test disjointness) without comparing floats.
struct LabeledDataset {
  Eigen::MatrixXd xs;
  std::vector<int> ys;
  std::vector<int> gs;
  std::vector<DistTag> tags;
  std::vector<std::uint64_t> ids;
  int num_classes = 0;
  int num_groups = 0;
  std::uint64_t seed = 0;
  ShiftKind shift = ShiftKind::Conditional;

  int n() const { return static_cast<int>(xs.rows()); }
  int dim() const { return static_cast<int>(xs.cols()); }

  LabeledDataset subset(const std::vector<std::size_t>& rows) const;
  std::vector<int> group_counts() const;

  // Throws on any invariant breach: label/group ranges, finiteness,
  // class coverage, parallel-array lengths.
  void validate() const;
};

struct SplitBundle {
  LabeledDataset train;
  LabeledDataset probe;
  LabeledDataset valid;
  LabeledDataset test;
  Scenario scenario = Scenario::ZeroShot;
  std::optional<double> pi;  // FewShot only

  // Oracle mode (pi == 1) intentionally aliases valid and test; every other
  // configuration keeps probe/valid/test pairwise disjoint by sample id.
  bool oracle_mode() const {
    return scenario == Scenario::FewShot && pi.has_value() && *pi >= 1.0;
  }
  void validate() const;
};

}  // namespace ilc
