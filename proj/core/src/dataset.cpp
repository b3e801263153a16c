#include "ilc/dataset.hpp"

#include <algorithm>
#include <unordered_set>

namespace ilc {

const char* to_string(DistTag t) { return t == DistTag::ID ? "ID" : "OOD"; }

const char* to_string(ShiftKind k) {
  switch (k) {
    case ShiftKind::Conditional: return "conditional";
    case ShiftKind::Subpopulation: return "subpopulation";
    case ShiftKind::InputNoise: return "input_noise";
  }
  return "?";
}

const char* to_string(Scenario s) {
  return s == Scenario::ZeroShot ? "zero-shot" : "few-shot";
}

LabeledDataset LabeledDataset::subset(const std::vector<std::size_t>& rows) const {
  LabeledDataset out;
  out.xs.resize(static_cast<Eigen::Index>(rows.size()), xs.cols());
  out.ys.reserve(rows.size());
  out.gs.reserve(rows.size());
  out.tags.reserve(rows.size());
  out.ids.reserve(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(rows[k]);
    out.xs.row(static_cast<Eigen::Index>(k)) = xs.row(i);
    out.ys.push_back(ys[rows[k]]);
    out.gs.push_back(gs[rows[k]]);
    out.tags.push_back(tags[rows[k]]);
    out.ids.push_back(ids[rows[k]]);
  }
  out.num_classes = num_classes;
  out.num_groups = num_groups;
  out.seed = seed;
  out.shift = shift;
  return out;
}

std::vector<int> LabeledDataset::group_counts() const {
  std::vector<int> counts(static_cast<std::size_t>(num_groups), 0);
  for (int g : gs) counts[static_cast<std::size_t>(g)]++;
  return counts;
}

void LabeledDataset::validate() const {
  const auto count = static_cast<std::size_t>(n());
  if (ys.size() != count || gs.size() != count || tags.size() != count ||
      ids.size() != count) {
    throw ShapeError("dataset parallel arrays disagree with row count");
  }
  if (num_classes <= 0 || num_groups <= 0) {
    throw InvalidParam("dataset needs positive class and group counts");
  }
  std::vector<bool> seen_class(static_cast<std::size_t>(num_classes), false);
  for (std::size_t i = 0; i < count; ++i) {
    if (ys[i] < 0 || ys[i] >= num_classes) throw InvalidParam("label out of range");
    if (gs[i] < 0 || gs[i] >= num_groups) throw InvalidParam("group out of range");
    seen_class[static_cast<std::size_t>(ys[i])] = true;
  }
  if (count > 0) {
    for (int c = 0; c < num_classes; ++c) {
      if (!seen_class[static_cast<std::size_t>(c)]) {
        throw InvalidParam("class " + std::to_string(c) + " absent from dataset");
      }
    }
  }
  if (!xs.allFinite()) throw NumericalError("dataset contains non-finite inputs");
}

namespace {

bool all_tagged(const LabeledDataset& ds, DistTag tag) {
  return std::all_of(ds.tags.begin(), ds.tags.end(),
                     [tag](DistTag t) { return t == tag; });
}

bool ids_disjoint(const LabeledDataset& a, const LabeledDataset& b) {
  std::unordered_set<std::uint64_t> seen(a.ids.begin(), a.ids.end());
  return std::none_of(b.ids.begin(), b.ids.end(),
                      [&](std::uint64_t id) { return seen.count(id) > 0; });
}

}  // namespace

void SplitBundle::validate() const {
  train.validate();
  probe.validate();
  valid.validate();
  test.validate();
  if (!all_tagged(train, DistTag::ID)) throw InvalidParam("train split must be ID");
  if (!all_tagged(valid, DistTag::OOD) || !all_tagged(test, DistTag::OOD)) {
    throw InvalidParam("valid/test splits must be OOD");
  }
  if (scenario == Scenario::ZeroShot && !all_tagged(probe, DistTag::ID)) {
    throw InvalidParam("zero-shot probe split must be ID");
  }
  if (scenario == Scenario::FewShot && !all_tagged(probe, DistTag::OOD)) {
    throw InvalidParam("few-shot probe split must be OOD");
  }
  if (!ids_disjoint(probe, test)) throw InvalidParam("probe and test overlap");
  if (!oracle_mode() && !ids_disjoint(valid, test)) {
    throw InvalidParam("valid and test overlap");
  }
}

}  // namespace ilc
