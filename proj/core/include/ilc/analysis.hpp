#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <vector>

#include "ilc/errors.hpp"
#include "ilc/features.hpp"

namespace ilc::analysis {

// Mean of squared Euclidean distances over all |A|x|B| pairs, self-pairs
// included when the sets coincide. Evaluated through the centered second-
// moment identity, which keeps it O((n+m)d) and bitwise symmetric in A и B.
double mean_pairwise_dist(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

// |1 - dist(probe,test)/dist(probe,probe)|; throws DegenerateReference when
// every probe point is identical.
double sensitivity_score(const Eigen::MatrixXd& probe_feats,
                         const Eigen::MatrixXd& test_feats);

// Mean over features of the total variation distance between per-feature
// histograms, binned over the union of both ranges. A zero-range feature
// contributes 0 when both sides are constant-equal.
double feature_tvd(const Eigen::MatrixXd& id_feats,
                   const Eigen::MatrixXd& ood_feats, int bins = 40);

// Class-distance normalized variance, averaged over unordered class pairs.
double cdnv(const Eigen::MatrixXd& feats, const std::vector<int>& labels);

// (1/K) trace(Sigma_W Sigma_B^+) with the between-class pseudoinverse.
double nc1(const Eigen::MatrixXd& feats, const std::vector<int>& labels);

struct PcaProjector {
  int layer = 0;
  Eigen::VectorXd mean;      // d
  Eigen::MatrixXd basis;     // d x k, orthonormal columns
  int k = 0;
  int rank = 0;              // nonzero singular values found
  bool rank_deficient = false;
  Eigen::VectorXd singular_values;  // first k, descending

  Eigen::VectorXd explained_variance(int n_samples) const;
};

// Top-k PCA directions of the centered data via SVD. Columns are ordered by
// descending singular value; the largest-magnitude entry of each direction
// is made positive. Rank deficiency pads with an orthonormal completion and
// sets the flag instead of failing.
PcaProjector fit_pca(const Eigen::MatrixXd& train_feats, int k);

Eigen::MatrixXd project(const PcaProjector& p, const Eigen::MatrixXd& feats);

// ---- layer-wise profiles -------------------------------------------------

struct SensitivityProfile {
  // layer -> group -> value; groups whose probe spread is zero are omitted.
  std::map<int, std::map<int, double>> sens;
  std::map<int, std::map<int, double>> dist_probe_test;
  std::map<int, std::map<int, double>> dist_probe_probe;
};

SensitivityProfile sensitivity_profile(const FeatureSet& probe,
                                       const FeatureSet& test);

struct TvdProfile {
  int bins = 40;
  std::map<int, double> per_layer;                  // pooled over groups
  std::map<int, std::map<int, double>> per_group;   // layer -> group -> tvd
  int subsample = 0;  // per-group sample count used for the grouped variant
};

TvdProfile tvd_profile(const FeatureSet& id_fs, const FeatureSet& ood_fs,
                       int bins = 40, std::uint64_t seed = 0);

struct CollapseProfile {
  std::map<int, double> cdnv_per_layer;
  std::map<int, double> nc1_per_layer;
};

CollapseProfile collapse_profile(const FeatureSet& fs, bool with_nc1 = true);

}  // namespace ilc::analysis
