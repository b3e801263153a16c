#include "ilc/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ilc/rng.hpp"

namespace ilc::synth {

namespace {

// Sample ids carry a set tag in the high bits so identity comparisons across
// the ID/OOD pair of one generation run are collision-free.
std::uint64_t make_id(std::uint64_t set_tag, std::uint64_t index) {
  return (set_tag << 40) | index;
}

Eigen::VectorXd block_direction(int dim, int blocks, int which, double scale) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
  const int len = dim / blocks;
  const int start = which * len;
  const int stop = (which == blocks - 1) ? dim : start + len;
  const double value = scale / std::sqrt(static_cast<double>(stop - start));
  for (int i = start; i < stop; ++i) v[i] = value;
  return v;
}

}  // namespace

std::pair<LabeledDataset, LabeledDataset> gen_conditional_shift(
    const ConditionalShiftParams& p) {
  if (!(p.corr > 0.5) || p.corr > 1.0) {
    throw InvalidParam("corr must lie in (0.5, 1]; a cue at or below 0.5 is not "
                       "spurious-dominant");
  }
  if (p.label_noise < 0.0 || p.label_noise >= 0.5) {
    throw InvalidParam("label_noise must lie in [0, 0.5)");
  }
  if (p.n_train <= 0 || p.n_test <= 0) throw InvalidParam("set sizes must be positive");
  if (p.core_dim < 1 || p.spur_dim < 2) throw InvalidParam("bad block dims");

  const int dim = p.core_dim + p.spur_dim;
  const int half = p.spur_dim / 2;
  const Eigen::VectorXd mu1 =
      Eigen::VectorXd::Constant(p.core_dim, p.core_sep / std::sqrt(p.core_dim));

  auto generate = [&](int count, double agree_prob, DistTag tag,
                      std::uint64_t set_tag, Rng rng) {
    LabeledDataset ds;
    ds.xs.resize(count, dim);
    ds.ys.reserve(count);
    ds.gs.reserve(count);
    for (int i = 0; i < count; ++i) {
      const int y_true = rng.bernoulli(0.5) ? 1 : 0;
      const bool flip = rng.bernoulli(p.label_noise);
      const int label = flip ? 1 - y_true : y_true;
      const bool agree = rng.bernoulli(agree_prob);
      const int color = agree ? label : 1 - label;

      for (int j = 0; j < p.core_dim; ++j) {
        const double mean = (y_true == 1 ? mu1[j] : -mu1[j]);
        ds.xs(i, j) = mean + rng.normal();
      }
      for (int j = 0; j < p.spur_dim; ++j) {
        const bool active = (j / half) == color && j < 2 * half;
        ds.xs(i, p.core_dim + j) =
            (active ? p.spur_scale : 0.0) + p.spur_jitter * rng.normal();
      }
      ds.ys.push_back(label);
      ds.gs.push_back(2 * label + (agree ? 1 : 0));
      ds.tags.push_back(tag);
      ds.ids.push_back(make_id(set_tag, static_cast<std::uint64_t>(i)));
    }
    ds.num_classes = 2;
    ds.num_groups = 4;
    ds.seed = p.seed;
    ds.shift = ShiftKind::Conditional;
    ds.validate();
    return ds;
  };

  Rng root(p.seed);
  LabeledDataset id_set =
      generate(p.n_train, p.corr, DistTag::ID, 0, root.substream("cond-id"));
  LabeledDataset ood_set =
      generate(p.n_test, 0.5, DistTag::OOD, 1, root.substream("cond-ood"));
  return {std::move(id_set), std::move(ood_set)};
}

std::pair<LabeledDataset, LabeledDataset> gen_conditional_shift(
    int n_train, int n_test, double corr, double label_noise,
    std::uint64_t seed) {
  ConditionalShiftParams p;
  p.n_train = n_train;
  p.n_test = n_test;
  p.corr = corr;
  p.label_noise = label_noise;
  p.seed = seed;
  return gen_conditional_shift(p);
}

std::pair<LabeledDataset, LabeledDataset> gen_subpopulation_shift(
    const SubpopulationShiftParams& p) {
  const std::size_t G = p.n_per_group.size();
  if (G < 2) throw InvalidParam("need at least two groups");
  if (p.group_map.size() != G) {
    throw InvalidParam("group map size must equal group count");
  }
  for (int c : p.n_per_group) {
    if (c < 1) throw InvalidParam("every ID group count must be >= 1");
  }
  if (p.n_test_per_group < 1) throw InvalidParam("n_test_per_group must be >= 1");

  int num_classes = 0;
  int num_nuisance = 0;
  for (const auto& gs : p.group_map) {
    if (gs.cls < 0 || gs.nuisance < 0) throw InvalidParam("negative group mapping");
    num_classes = std::max(num_classes, gs.cls + 1);
    num_nuisance = std::max(num_nuisance, gs.nuisance + 1);
  }
  if (num_classes < 2) throw InvalidParam("need at least two classes in group map");
  std::vector<bool> class_seen(static_cast<std::size_t>(num_classes), false);
  for (const auto& gs : p.group_map) class_seen[static_cast<std::size_t>(gs.cls)] = true;
  if (!std::all_of(class_seen.begin(), class_seen.end(), [](bool b) { return b; })) {
    throw InvalidParam("group map skips a class index");
  }
  if (p.core_dim < num_classes || p.spur_dim < num_nuisance) {
    throw InvalidParam("feature blocks narrower than class/nuisance counts");
  }

  const int dim = p.core_dim + p.spur_dim;
  std::vector<Eigen::VectorXd> group_mean(G);
  for (std::size_t g = 0; g < G; ++g) {
    Eigen::VectorXd m(dim);
    m.head(p.core_dim) =
        block_direction(p.core_dim, num_classes, p.group_map[g].cls, p.core_sep);
    m.tail(p.spur_dim) =
        block_direction(p.spur_dim, num_nuisance, p.group_map[g].nuisance, p.spur_sep);
    group_mean[g] = std::move(m);
  }

  auto generate = [&](const std::vector<int>& counts, DistTag tag,
                      std::uint64_t set_tag, Rng rng) {
    const int total = std::accumulate(counts.begin(), counts.end(), 0);
    LabeledDataset ds;
    ds.xs.resize(total, dim);
    int row = 0;
    for (std::size_t g = 0; g < G; ++g) {
      for (int i = 0; i < counts[g]; ++i, ++row) {
        for (int j = 0; j < dim; ++j) ds.xs(row, j) = group_mean[g][j] + rng.normal();
        ds.ys.push_back(p.group_map[g].cls);
        ds.gs.push_back(static_cast<int>(g));
        ds.tags.push_back(tag);
        ds.ids.push_back(make_id(set_tag, static_cast<std::uint64_t>(row)));
      }
    }
    // Interleave groups so downstream mini-batching never sees block order.
    auto perm = rng.permutation(static_cast<std::size_t>(total));
    ds.num_classes = num_classes;
    ds.num_groups = static_cast<int>(G);
    ds.seed = p.seed;
    ds.shift = ShiftKind::Subpopulation;
    std::vector<std::size_t> rows(perm.begin(), perm.end());
    LabeledDataset shuffled = ds.subset(rows);
    shuffled.validate();
    return shuffled;
  };

  Rng root(p.seed);
  LabeledDataset id_set =
      generate(p.n_per_group, DistTag::ID, 2, root.substream("subpop-id"));
  std::vector<int> test_counts(G, p.n_test_per_group);
  LabeledDataset ood_set =
      generate(test_counts, DistTag::OOD, 3, root.substream("subpop-ood"));
  return {std::move(id_set), std::move(ood_set)};
}

LabeledDataset gen_input_noise_shift(const LabeledDataset& base, NoiseKind kind,
                                     double severity, std::uint64_t seed) {
  if (base.n() == 0) throw EmptyInput("input-noise shift needs a nonempty base");
  if (severity < 0.0) throw InvalidParam("severity must be >= 0");
  if (kind == NoiseKind::Mask && severity > 1.0) {
    throw InvalidParam("mask severity is a drop probability, must be <= 1");
  }

  LabeledDataset out = base;
  out.shift = ShiftKind::InputNoise;
  out.seed = seed;
  std::fill(out.tags.begin(), out.tags.end(), DistTag::OOD);
  for (std::size_t i = 0; i < out.ids.size(); ++i) {
    out.ids[i] = make_id(4, static_cast<std::uint64_t>(i));
  }
  if (severity == 0.0) return out;

  Rng rng = Rng(seed).substream("input-noise");
  for (int i = 0; i < out.n(); ++i) {
    for (int j = 0; j < out.dim(); ++j) {
      switch (kind) {
        case NoiseKind::Gaussian:
          out.xs(i, j) += severity * rng.normal();
          break;
        case NoiseKind::Uniform:
          out.xs(i, j) += rng.uniform(-severity, severity);
          break;
        case NoiseKind::Mask:
          if (rng.bernoulli(severity)) out.xs(i, j) = 0.0;
          break;
      }
    }
  }
  return out;
}

SplitBundle make_splits(const LabeledDataset& id_set,
                        const LabeledDataset& ood_set, Scenario scenario,
                        std::optional<double> pi, std::uint64_t seed) {
  id_set.validate();
  ood_set.validate();
  if (scenario == Scenario::ZeroShot && pi.has_value()) {
    throw InvalidParam("pi is a few-shot parameter");
  }
  if (scenario == Scenario::FewShot) {
    if (!pi.has_value() || !(*pi > 0.0) || *pi > 1.0) {
      throw InvalidParam("few-shot needs pi in (0, 1]");
    }
  }

  Rng rng = Rng(seed).substream("splits");
  auto perm = rng.permutation(static_cast<std::size_t>(ood_set.n()));
  const std::size_t half = perm.size() / 2;
  std::vector<std::size_t> first(perm.begin(), perm.begin() + half);
  std::vector<std::size_t> second(perm.begin() + half, perm.end());
  std::sort(first.begin(), first.end());
  std::sort(second.begin(), second.end());

  SplitBundle bundle;
  bundle.scenario = scenario;
  bundle.pi = pi;
  bundle.train = id_set;

  if (scenario == Scenario::ZeroShot) {
    bundle.probe = id_set;
    bundle.valid = ood_set.subset(first);
    bundle.test = ood_set.subset(second);
  } else {
    LabeledDataset candidate = ood_set.subset(first);
    bundle.test = ood_set.subset(second);
    if (*pi >= 1.0) {
      bundle.probe = std::move(candidate);
      bundle.valid = bundle.test;  // oracle model selection
    } else {
      const auto m = static_cast<std::size_t>(
          std::floor(*pi * static_cast<double>(candidate.n())));
      if (m < static_cast<std::size_t>(id_set.num_classes)) {
        throw InvalidParam("pi too small: probe cannot cover all classes");
      }
      auto inner = rng.substream("pi-probe").permutation(
          static_cast<std::size_t>(candidate.n()));
      std::vector<std::size_t> probe_rows(inner.begin(), inner.begin() + m);
      std::vector<std::size_t> valid_rows(inner.begin() + m, inner.end());
      std::sort(probe_rows.begin(), probe_rows.end());
      std::sort(valid_rows.begin(), valid_rows.end());
      bundle.probe = candidate.subset(probe_rows);
      bundle.valid = candidate.subset(valid_rows);
    }
  }
  bundle.validate();
  return bundle;
}

LabeledDataset balance_groups(const LabeledDataset& ds, std::uint64_t seed) {
  ds.validate();
  auto counts = ds.group_counts();
  int min_count = ds.n();
  for (int g = 0; g < ds.num_groups; ++g) {
    if (counts[static_cast<std::size_t>(g)] == 0) {
      throw EmptyGroup("group " + std::to_string(g) + " is empty");
    }
    min_count = std::min(min_count, counts[static_cast<std::size_t>(g)]);
  }

  std::vector<std::vector<std::size_t>> by_group(
      static_cast<std::size_t>(ds.num_groups));
  for (int i = 0; i < ds.n(); ++i) {
    by_group[static_cast<std::size_t>(ds.gs[static_cast<std::size_t>(i)])]
        .push_back(static_cast<std::size_t>(i));
  }

  Rng root(seed);
  std::vector<std::size_t> keep;
  for (std::size_t g = 0; g < by_group.size(); ++g) {
    auto rows = by_group[g];
    root.substream("balance", g).shuffle(rows);
    keep.insert(keep.end(), rows.begin(), rows.begin() + min_count);
  }
  std::sort(keep.begin(), keep.end());
  return ds.subset(keep);
}

}  // namespace ilc::synth
