#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "ilc/dataset.hpp"

namespace ilc::synth {

// Conditional shift: the label-color correlation present in-distribution is
// broken at test time while P(X) stays put. Inputs are [core | color] blocks:
// the core block is a class-conditional Gaussian cluster on the true label,
// the color block is a (jittered) one-hot cue that agrees with the *noisy*
// label with probability `corr` in ID and 0.5 in OOD.
struct ConditionalShiftParams {
  int n_train = 2000;
  int n_test = 2000;
  double corr = 0.9;
  double label_noise = 0.25;
  std::uint64_t seed = 0;
  int core_dim = 24;
  int spur_dim = 8;
  double core_sep = 1.0;     // distance of each class mean from the origin
  double spur_scale = 1.0;   // magnitude of the active color half-block
  double spur_jitter = 0.1;  // noise std on the color block
};

std::pair<LabeledDataset, LabeledDataset> gen_conditional_shift(
    const ConditionalShiftParams& p);

std::pair<LabeledDataset, LabeledDataset> gen_conditional_shift(
    int n_train, int n_test, double corr, double label_noise,
    std::uint64_t seed);

// Subpopulation shift: group ratios change between ID and OOD. Each group is
// a Gaussian cluster whose mean combines a class direction (core block) and a
// nuisance direction (spurious block).
struct GroupSpec {
  int cls = 0;
  int nuisance = 0;
};

struct SubpopulationShiftParams {
  std::vector<int> n_per_group;
  std::vector<GroupSpec> group_map;
  int n_test_per_group = 200;
  std::uint64_t seed = 0;
  int core_dim = 24;
  int spur_dim = 8;
  double core_sep = 1.0;
  double spur_sep = 1.0;
};

std::pair<LabeledDataset, LabeledDataset> gen_subpopulation_shift(
    const SubpopulationShiftParams& p);

enum class NoiseKind { Gaussian, Uniform, Mask };

LabeledDataset gen_input_noise_shift(const LabeledDataset& base,
                                     NoiseKind kind, double severity,
                                     std::uint64_t seed);

// Builds D_train/D_probe/D_valid/D_test from an ID set and an OOD pool.
// ZeroShot: probe <- train, OOD pool halved into valid/test.
// FewShot:  pool halved into candidate/test; probe <- floor(pi*|candidate|)
//           uniform samples, valid <- the rest; pi=1 is oracle selection
//           (probe <- candidate, valid <- test).
SplitBundle make_splits(const LabeledDataset& id_set,
                        const LabeledDataset& ood_set, Scenario scenario,
                        std::optional<double> pi, std::uint64_t seed);

// Uniform per-group subsample down to the smallest group count. Output rows
// keep the input order (a stable subsequence).
LabeledDataset balance_groups(const LabeledDataset& ds, std::uint64_t seed);

}  // namespace ilc::synth
