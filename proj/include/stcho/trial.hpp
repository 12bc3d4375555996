#ifndef STCHO_TRIAL_HPP
#define STCHO_TRIAL_HPP

// Virtual reader study: split the dataset into n + 1 disjoint subsets, train
// reader i on subset i, let every reader score the shared test subset n, and
// aggregate the readers' AUCs with the one-shot MRMC variance.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stcho/csf.hpp"
#include "stcho/display.hpp"
#include "stcho/error.hpp"
#include "stcho/observer.hpp"
#include "stcho/parallel.hpp"
#include "stcho/percept.hpp"
#include "stcho/rng.hpp"
#include "stcho/roc.hpp"
#include "stcho/stacks.hpp"

namespace stcho {

struct TrialPlan {
  std::size_t n_readers = 0;
  std::uint64_t seed = 0;
  /// stack_id -> subset; subsets 0..n-1 train reader i, subset n is the test set.
  std::map<std::string, std::size_t> subset_assignment;
  /// healthy stack_id -> lesion stack_id
  std::map<std::string, std::string> pairing;

  std::size_t test_subset() const noexcept { return n_readers; }

  /// Checks that subsets cover `ids`, pairs are split across subsets, and
  /// every subset holds both classes. Throws PlanningError otherwise.
  void validate(const Dataset& ds) const {
    if (n_readers < 1) throw PlanningError("plan: need at least one reader");
    if (subset_assignment.size() != ds.stacks.size()) throw PlanningError("plan: does not cover the dataset");
    std::vector<std::array<std::size_t, 2>> counts(n_readers + 1, {0, 0});
    for (const ImageStack& s : ds.stacks) {
      const auto it = subset_assignment.find(s.stack_id);
      if (it == subset_assignment.end()) throw PlanningError("plan: stack '" + s.stack_id + "' unassigned");
      if (it->second > n_readers) throw PlanningError("plan: subset index out of range");
      ++counts[it->second][s.label == Label::healthy ? 0 : 1];
    }
    for (const auto& [h, l] : pairing) {
      if (subset_assignment.at(h) == subset_assignment.at(l)) {
        throw PlanningError("plan: pair (" + h + ", " + l + ") shares a subset");
      }
    }
    for (std::size_t k = 0; k <= n_readers; ++k) {
      if (counts[k][0] == 0 || counts[k][1] == 0) {
        throw PlanningError("plan: subset " + std::to_string(k) + " lacks a class");
      }
    }
  }
};

/// Seeded shuffle of the pairs, then round-robin: the healthy member of the
/// i-th pair goes to subset i mod (n+1), its lesion partner to (i+1) mod (n+1).
inline TrialPlan split_dataset(const Dataset& ds, std::size_t n_readers, std::uint64_t seed,
                               std::size_t min_per_class = 1) {
  if (n_readers < 1) throw PlanningError("split_dataset: need at least one reader");
  auto pairs = ds.pairs();
  if (2 * pairs.size() != ds.stacks.size()) {
    throw PlanningError("split_dataset: every stack must belong to exactly one healthy/lesion pair");
  }
  const std::size_t subsets = n_readers + 1;
  if (pairs.size() / subsets < min_per_class) {
    throw PlanningError("split_dataset: " + std::to_string(pairs.size()) + " pairs cannot give " +
                        std::to_string(subsets) + " subsets with " + std::to_string(min_per_class) +
                        " stacks per class");
  }
  Random rng(derive_seed(seed, 0x5b117));
  rng.shuffle(std::span(pairs));
  TrialPlan plan;
  plan.n_readers = n_readers;
  plan.seed = seed;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const ImageStack& h = ds.stacks[pairs[i].first];
    const ImageStack& l = ds.stacks[pairs[i].second];
    plan.subset_assignment[h.stack_id] = i % subsets;
    plan.subset_assignment[l.stack_id] = (i + 1) % subsets;
    plan.pairing[h.stack_id] = l.stack_id;
  }
  plan.validate(ds);
  return plan;
}

struct ObserverConfig {
  std::size_t n_channels = 15;
  double spread = 10.0;
  Combiner combiner = Combiner::hotelling;
  /// Explicit slices to read; empty means the lesion-affected slices.
  std::vector<int> slice_range;
  RidgePolicy ridge{};
};

struct PipelineConfig {
  DisplayModel display{};
  double ssr = 7.0;          // pixel/deg
  double slice_rate = 25.0;  // slice/s
  CsfConstants csf{};
  PerceptOptions percept{};
  ObserverConfig observer{};
  unsigned threads = 0;  // 0 = hardware concurrency
};

struct TrialResult {
  std::vector<double> per_reader_auc;
  double mean_auc = 0.0;
  double variance = 0.0;
  Eigen::MatrixXd scores;  // readers x test cases
  std::vector<std::string> test_ids;
  std::vector<Label> test_labels;
  std::vector<int> slice_range;
  std::uint64_t plan_seed = 0;
};

/// Slices read by the observer: the configured range, else the union of the
/// lesion-affected slices of all lesion stacks.
inline std::vector<int> resolve_slice_range(const Dataset& ds, const ObserverConfig& oc) {
  std::set<int> s(oc.slice_range.begin(), oc.slice_range.end());
  if (s.empty()) {
    for (const ImageStack& st : ds.stacks) s.insert(st.lesion_slices.begin(), st.lesion_slices.end());
  }
  if (s.empty()) throw InputError("slice range: no lesion-affected slices recorded and none configured");
  return {s.begin(), s.end()};
}

/// Luminance stack seen on the display.
inline Volume<double> displayed_luminance(const ImageStack& s, const std::vector<double>& lut) {
  Volume<double> lum(s.codes.width(), s.codes.height(), s.codes.depth());
  for (std::size_t i = 0; i < lum.size(); ++i) {
    const std::uint16_t c = s.codes.values()[i];
    if (c >= lut.size()) throw InputError("stack '" + s.stack_id + "': code exceeds display bit depth");
    lum.values()[i] = lut[c];
  }
  return lum;
}

/// Perceived stack for one image stack under the pipeline configuration.
inline PerceivedStack perceive(const ImageStack& s, const PipelineConfig& cfg, const std::vector<double>& lut) {
  const Volume<double> lum = displayed_luminance(s, lut);
  ViewingConditions vc;
  vc.ssr = cfg.ssr;
  vc.slice_rate = cfg.slice_rate;
  vc.x0 = viewing_geometry(static_cast<double>(s.codes.width()), cfg.ssr);
  vc.luminance_l = 1.0;  // replaced by the stack mean
  return apply_stcsf(lum, vc, cfg.csf, cfg.percept);
}

/// Display, stCSF and channelization of every stack, in dataset order.
inline std::vector<ChannelizedStack> channelize_dataset(const Dataset& ds, const PipelineConfig& cfg,
                                                        const ChannelBank& bank, std::span<const int> range) {
  cfg.display.validate();
  const std::vector<double> lut = cfg.display.lookup_table();
  std::vector<ChannelizedStack> out(ds.stacks.size());
  parallel_for(ds.stacks.size(), cfg.threads, [&](std::size_t i) {
    out[i] = channelize_stack(perceive(ds.stacks[i], cfg, lut).data, bank, range);
  });
  return out;
}

inline TrialResult run_trial(const Dataset& ds, const TrialPlan& plan, const PipelineConfig& cfg) {
  plan.validate(ds);
  if (plan.n_readers < 2) throw InputError("run_trial: MRMC aggregation needs at least two readers");
  const StackGeometry& g = ds.stacks.front().geometry;
  for (const ImageStack& s : ds.stacks) {
    if (!(s.geometry == g)) throw InputError("run_trial: stacks differ in geometry");
  }
  const std::vector<int> range = resolve_slice_range(ds, cfg.observer);
  if (range.front() < 0 || static_cast<std::size_t>(range.back()) >= g.n_slices) {
    throw InputError("run_trial: slice range outside stack depth");
  }
  auto bank = std::make_shared<const ChannelBank>(
      lg_channel_bank(g.width, g.height, cfg.observer.n_channels, cfg.observer.spread));
  const std::vector<ChannelizedStack> ch = channelize_dataset(ds, cfg, *bank, range);

  std::vector<std::vector<ChannelizedStack>> train_h(plan.n_readers);
  std::vector<std::vector<ChannelizedStack>> train_l(plan.n_readers);
  std::vector<std::size_t> test;
  for (std::size_t i = 0; i < ds.stacks.size(); ++i) {
    const std::size_t k = plan.subset_assignment.at(ds.stacks[i].stack_id);
    if (k == plan.test_subset()) {
      test.push_back(i);
    } else {
      (ds.stacks[i].label == Label::healthy ? train_h : train_l)[k].push_back(ch[i]);
    }
  }

  TrialResult res;
  res.slice_range = range;
  res.plan_seed = plan.seed;
  for (std::size_t i : test) {
    res.test_ids.push_back(ds.stacks[i].stack_id);
    res.test_labels.push_back(ds.stacks[i].label);
  }
  res.scores = Eigen::MatrixXd(static_cast<Eigen::Index>(plan.n_readers), static_cast<Eigen::Index>(test.size()));
  const int central = static_cast<int>(g.center_slice());
  parallel_for(plan.n_readers, cfg.threads, [&](std::size_t r) {
    const MsChoModel model = train_mscho_b(std::span<const ChannelizedStack>(train_h[r]),
                                           std::span<const ChannelizedStack>(train_l[r]), bank, range, central,
                                           cfg.observer.combiner, cfg.observer.ridge);
    for (std::size_t c = 0; c < test.size(); ++c) {
      res.scores(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = score_stack(ch[test[c]], model);
    }
  });

  const MrmcResult m = one_shot_mrmc(res.scores, res.test_labels);
  if (!m.variance) throw InputError("run_trial: test set needs at least two stacks per class");
  if (*m.variance < -1e-12) throw NumericalError("run_trial: negative MRMC variance estimate");
  res.per_reader_auc = m.per_reader_auc;
  res.mean_auc = m.mean_auc;
  res.variance = *m.variance;
  return res;
}

}  // namespace stcho

#endif  // STCHO_TRIAL_HPP
