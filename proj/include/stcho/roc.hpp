#ifndef STCHO_ROC_HPP
#define STCHO_ROC_HPP

// Empirical AUC and the one-shot multi-reader multi-case variance of the
// reader-averaged AUC.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <optional>
#include <span>
#include <vector>

#include "stcho/error.hpp"
#include "stcho/label.hpp"

namespace stcho {

/// Mann-Whitney estimate: the fraction of (healthy, lesion) pairs in which
/// the lesion score is higher, ties counting one half. O(n log n).
inline double auc_wilcoxon(std::span<const double> healthy, std::span<const double> lesion) {
  if (healthy.empty() || lesion.empty()) throw InputError("auc_wilcoxon: empty score list");
  std::vector<double> h(healthy.begin(), healthy.end());
  std::sort(h.begin(), h.end());
  // Twice the U statistic stays an exact integer in double precision.
  double twice_u = 0.0;
  for (double l : lesion) {
    const auto lo = std::lower_bound(h.begin(), h.end(), l);
    const auto hi = std::upper_bound(lo, h.end(), l);
    twice_u += 2.0 * static_cast<double>(lo - h.begin()) + static_cast<double>(hi - lo);
  }
  return twice_u / (2.0 * static_cast<double>(h.size()) * static_cast<double>(lesion.size()));
}

inline double success(double healthy_score, double lesion_score) {
  if (lesion_score > healthy_score) return 1.0;
  if (lesion_score == healthy_score) return 0.5;
  return 0.0;
}

struct MrmcResult {
  std::vector<double> per_reader_auc;
  double mean_auc = 0.0;
  /// Unbiased estimate of Var(mean_auc) over readers and cases; empty when a
  /// class has fewer than two cases.
  std::optional<double> variance;
  /// Second moments of the success function, indexed as
  /// [same reader: same pair, same healthy, same lesion, disjoint,
  ///  other reader: same pair, same healthy, same lesion, disjoint].
  std::array<double, 8> moments{};
  /// Sample variance of the per-reader AUCs; zero when readers agree.
  double reader_spread = 0.0;
};

namespace detail {

struct SuccessSums {
  double total = 0.0;
  double sq = 0.0;       // sum of s^2
  double row_sq = 0.0;   // sum over healthy cases of (row sum)^2
  double col_sq = 0.0;   // sum over lesion cases of (column sum)^2
};

inline SuccessSums success_sums(const Eigen::MatrixXd& s) {
  return {s.sum(), s.squaredNorm(), s.rowwise().sum().squaredNorm(), s.colwise().sum().squaredNorm()};
}

}  // namespace detail

/// `scores` is readers x cases; `labels[c]` classifies case c. Every reader
/// scores the same cases.
inline MrmcResult one_shot_mrmc(const Eigen::MatrixXd& scores, std::span<const Label> labels) {
  const Eigen::Index readers = scores.rows();
  if (readers < 2) throw InputError("one_shot_mrmc: need at least two readers");
  if (static_cast<std::size_t>(scores.cols()) != labels.size()) {
    throw InputError("one_shot_mrmc: label count does not match case count");
  }
  std::vector<Eigen::Index> h_idx;
  std::vector<Eigen::Index> l_idx;
  for (std::size_t c = 0; c < labels.size(); ++c) {
    (labels[c] == Label::healthy ? h_idx : l_idx).push_back(static_cast<Eigen::Index>(c));
  }
  if (h_idx.empty() || l_idx.empty()) throw InputError("one_shot_mrmc: both classes must be present");
  const auto n0 = static_cast<double>(h_idx.size());
  const auto n1 = static_cast<double>(l_idx.size());
  const auto nr = static_cast<double>(readers);

  MrmcResult out;
  Eigen::MatrixXd pooled = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(h_idx.size()),
                                                 static_cast<Eigen::Index>(l_idx.size()));
  std::array<double, 4> same{};  // Q1..Q4 summed over readers
  for (Eigen::Index r = 0; r < readers; ++r) {
    Eigen::MatrixXd s(pooled.rows(), pooled.cols());
    for (std::size_t i = 0; i < h_idx.size(); ++i) {
      for (std::size_t j = 0; j < l_idx.size(); ++j) {
        s(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            success(scores(r, h_idx[i]), scores(r, l_idx[j]));
      }
    }
    const detail::SuccessSums t = detail::success_sums(s);
    out.per_reader_auc.push_back(t.total / (n0 * n1));
    same[0] += t.sq;
    same[1] += t.row_sq - t.sq;
    same[2] += t.col_sq - t.sq;
    same[3] += t.total * t.total - t.row_sq - t.col_sq + t.sq;
    pooled += s;
  }
  const detail::SuccessSums p = detail::success_sums(pooled);
  const std::array<double, 4> all = {p.sq, p.row_sq - p.sq, p.col_sq - p.sq,
                                     p.total * p.total - p.row_sq - p.col_sq + p.sq};
  const std::array<double, 4> pair_counts = {n0 * n1, n0 * n1 * (n1 - 1), n0 * (n0 - 1) * n1,
                                             n0 * (n0 - 1) * n1 * (n1 - 1)};
  for (std::size_t k = 0; k < 4; ++k) {
    out.moments[k] = pair_counts[k] > 0 ? same[k] / (nr * pair_counts[k]) : 0.0;
    out.moments[k + 4] = pair_counts[k] > 0 ? (all[k] - same[k]) / (nr * (nr - 1) * pair_counts[k]) : 0.0;
  }

  double sum = 0.0;
  for (double a : out.per_reader_auc) sum += a;
  out.mean_auc = sum / nr;
  double ss = 0.0;
  for (double a : out.per_reader_auc) ss += (a - out.mean_auc) * (a - out.mean_auc);
  out.reader_spread = ss / (nr - 1);

  // E[A^2] is estimated without bias by A^2 itself; subtracting the unbiased
  // estimate of mu^2 (fully disjoint moment) leaves Var(A).
  if (h_idx.size() >= 2 && l_idx.size() >= 2) {
    out.variance = out.mean_auc * out.mean_auc - out.moments[7];
  }
  return out;
}

/// Case-sampling variance of a single reader's AUC (readers held fixed).
inline std::optional<double> single_reader_variance(std::span<const double> healthy, std::span<const double> lesion) {
  if (healthy.size() < 2 || lesion.size() < 2) return std::nullopt;
  Eigen::MatrixXd s(static_cast<Eigen::Index>(healthy.size()), static_cast<Eigen::Index>(lesion.size()));
  for (std::size_t i = 0; i < healthy.size(); ++i) {
    for (std::size_t j = 0; j < lesion.size(); ++j) {
      s(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = success(healthy[i], lesion[j]);
    }
  }
  const detail::SuccessSums t = detail::success_sums(s);
  const auto n0 = static_cast<double>(healthy.size());
  const auto n1 = static_cast<double>(lesion.size());
  const double a = t.total / (n0 * n1);
  const double disjoint = (t.total * t.total - t.row_sq - t.col_sq + t.sq) / (n0 * (n0 - 1) * n1 * (n1 - 1));
  return a * a - disjoint;
}

}  // namespace stcho

#endif  // STCHO_ROC_HPP
