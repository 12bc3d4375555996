#ifndef STCHO_OBSERVER_HPP
#define STCHO_OBSERVER_HPP

// Multi-slice channelized Hotelling observer, type 'b': a 2D CHO trained on
// the central slice of each training stack, applied to every slice of a
// slice range, with a second stage that merges the per-slice scores.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stcho/error.hpp"
#include "stcho/percept.hpp"
#include "stcho/volume.hpp"

namespace stcho {

struct ChannelBank {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t n_channels = 0;
  double spread = 0.0;
  Eigen::MatrixXd matrix;  // (width * height) x n_channels, row index y * width + x
};

/// Laguerre-Gauss channels centered at (W/2, H/2):
/// c_j(r) = exp(-pi r^2 / a^2) L_j(2 pi r^2 / a^2), a = spread in pixels.
inline ChannelBank lg_channel_bank(std::size_t width, std::size_t height, std::size_t n_channels = 15,
                                   double spread = 10.0) {
  if (n_channels < 1) throw InputError("lg_channel_bank: need at least one channel");
  if (!(spread > 0)) throw InputError("lg_channel_bank: spread must be > 0");
  if (width == 0 || height == 0) throw InputError("lg_channel_bank: empty image");
  ChannelBank bank{width, height, n_channels, spread, Eigen::MatrixXd(width * height, n_channels)};
  const double cx = static_cast<double>(width / 2);
  const double cy = static_cast<double>(height / 2);
  const double a2 = spread * spread;
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      const double dx = static_cast<double>(x) - cx;
      const double dy = static_cast<double>(y) - cy;
      const double r2 = dx * dx + dy * dy;
      const double gauss = std::exp(-std::numbers::pi * r2 / a2);
      const double arg = 2.0 * std::numbers::pi * r2 / a2;
      for (std::size_t j = 0; j < n_channels; ++j) {
        bank.matrix(static_cast<Eigen::Index>(y * width + x), static_cast<Eigen::Index>(j)) =
            gauss * std::laguerre(static_cast<unsigned>(j), arg);
      }
    }
  }
  return bank;
}

/// Channel response vector bank^T * slice for one W x H slice.
inline Eigen::VectorXd channelize(std::span<const double> slice, const ChannelBank& bank) {
  if (slice.size() != bank.width * bank.height) {
    throw InputError("channelize: slice has " + std::to_string(slice.size()) + " pixels, bank expects " +
                     std::to_string(bank.width * bank.height));
  }
  const Eigen::Map<const Eigen::VectorXd> v(slice.data(), static_cast<Eigen::Index>(slice.size()));
  return bank.matrix.transpose() * v;
}

struct RidgePolicy {
  std::vector<double> ladder = {1e-12, 1e-9, 1e-6};  // multiples of trace(cov) / n
  double max_condition = 1e12;
};

/// Result of a Hotelling fit in some feature space.
struct HotellingFit {
  Eigen::VectorXd weights;    // (cov + ridge I)^-1 mean_diff
  Eigen::VectorXd mean_diff;  // mean(lesion) - mean(healthy)
  Eigen::MatrixXd cov;        // average of the two class sample covariances
  double ridge = 0.0;
};

namespace detail {

inline Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& rows, const Eigen::VectorXd& mean) {
  const Eigen::MatrixXd centered = rows.rowwise() - mean.transpose();
  return centered.transpose() * centered / static_cast<double>(rows.rows() - 1);
}

inline double condition_number(const Eigen::MatrixXd& m) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0)) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

}  // namespace detail

/// Hotelling template from per-class feature rows (one sample per row).
inline HotellingFit fit_hotelling(const Eigen::MatrixXd& healthy, const Eigen::MatrixXd& lesion,
                                  const RidgePolicy& policy = {}) {
  const Eigen::Index p = healthy.cols();
  if (lesion.cols() != p || p == 0) throw InputError("fit_hotelling: feature dimensions differ");
  if (healthy.rows() < p + 1 || lesion.rows() < p + 1) {
    throw TrainingError("fit_hotelling: need at least " + std::to_string(p + 1) +
                        " samples per class, got " + std::to_string(healthy.rows()) + " and " +
                        std::to_string(lesion.rows()));
  }
  const Eigen::VectorXd mh = healthy.colwise().mean();
  const Eigen::VectorXd ml = lesion.colwise().mean();
  HotellingFit fit;
  fit.mean_diff = ml - mh;
  fit.cov = 0.5 * (detail::sample_covariance(healthy, mh) + detail::sample_covariance(lesion, ml));
  const double trace = fit.cov.trace();
  if (!(trace > 0)) throw TrainingError("fit_hotelling: zero covariance (all samples identical)");

  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(p, p);
  if (detail::condition_number(fit.cov) > policy.max_condition) {
    fit.ridge = -1.0;
    for (double rung : policy.ladder) {
      const double r = rung * trace / static_cast<double>(p);
      if (detail::condition_number(fit.cov + r * identity) <= policy.max_condition) {
        fit.ridge = r;
        break;
      }
    }
    if (fit.ridge < 0) throw TrainingError("fit_hotelling: covariance cannot be conditioned by the ridge ladder");
  }
  fit.weights = (fit.cov + fit.ridge * identity).ldlt().solve(fit.mean_diff);
  if (!fit.weights.allFinite()) throw TrainingError("fit_hotelling: template is not finite");
  return fit;
}

struct ChoModel {
  std::shared_ptr<const ChannelBank> bank;
  Eigen::VectorXd weights;  // Hotelling template in channel space
  Eigen::VectorXd mean_diff;
  Eigen::MatrixXd cov;
  double ridge = 0.0;
};

/// 2D CHO from channel responses (one response vector per row).
inline ChoModel train_cho_from_responses(const Eigen::MatrixXd& healthy, const Eigen::MatrixXd& lesion,
                                         std::shared_ptr<const ChannelBank> bank,
                                         const RidgePolicy& policy = {}) {
  HotellingFit fit = fit_hotelling(healthy, lesion, policy);
  return {std::move(bank), std::move(fit.weights), std::move(fit.mean_diff), std::move(fit.cov), fit.ridge};
}

inline Eigen::MatrixXd channel_rows(std::span<const std::vector<double>> slices, const ChannelBank& bank) {
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(slices.size()), static_cast<Eigen::Index>(bank.n_channels));
  for (std::size_t i = 0; i < slices.size(); ++i) {
    rows.row(static_cast<Eigen::Index>(i)) = channelize(slices[i], bank).transpose();
  }
  return rows;
}

inline ChoModel train_cho(std::span<const std::vector<double>> healthy_slices,
                          std::span<const std::vector<double>> lesion_slices,
                          std::shared_ptr<const ChannelBank> bank, const RidgePolicy& policy = {}) {
  if (!bank) throw InputError("train_cho: no channel bank");
  Eigen::MatrixXd h = channel_rows(healthy_slices, *bank);
  Eigen::MatrixXd l = channel_rows(lesion_slices, *bank);
  return train_cho_from_responses(h, l, std::move(bank), policy);
}

inline double score_responses(const Eigen::VectorXd& responses, const ChoModel& model) {
  return model.weights.dot(responses);
}

inline double score_slice(std::span<const double> slice, const ChoModel& model) {
  return score_responses(channelize(slice, *model.bank), model);
}

enum class Combiner { hotelling, max, mean };

inline Combiner parse_combiner(std::string_view s) {
  if (s == "hotelling") return Combiner::hotelling;
  if (s == "max") return Combiner::max;
  if (s == "mean") return Combiner::mean;
  throw InputError("unknown combiner '" + std::string(s) + "'");
}

inline std::string to_string(Combiner c) {
  switch (c) {
    case Combiner::hotelling: return "hotelling";
    case Combiner::max: return "max";
    case Combiner::mean: return "mean";
  }
  return "hotelling";
}

/// Channel responses of the slices of a stack that the observer reads:
/// row i holds the responses of slice slice_range[i].
struct ChannelizedStack {
  Eigen::MatrixXd responses;
};

inline ChannelizedStack channelize_stack(const Volume<double>& data, const ChannelBank& bank,
                                         std::span<const int> slice_range) {
  if (data.width() != bank.width || data.height() != bank.height) {
    throw InputError("channelize_stack: slice size does not match channel bank");
  }
  ChannelizedStack out{Eigen::MatrixXd(static_cast<Eigen::Index>(slice_range.size()),
                                       static_cast<Eigen::Index>(bank.n_channels))};
  for (std::size_t i = 0; i < slice_range.size(); ++i) {
    const int z = slice_range[i];
    if (z < 0 || static_cast<std::size_t>(z) >= data.depth()) {
      throw InputError("channelize_stack: slice " + std::to_string(z) + " outside stack depth " +
                       std::to_string(data.depth()));
    }
    out.responses.row(static_cast<Eigen::Index>(i)) =
        channelize(data.slice(static_cast<std::size_t>(z)), bank).transpose();
  }
  return out;
}

struct MsChoModel {
  ChoModel stage1;
  std::vector<int> slice_range;
  std::size_t central_row = 0;  // position of the central slice in slice_range
  Combiner combiner = Combiner::hotelling;
  Eigen::VectorXd stage2_weights;  // hotelling only
};

/// Per-slice stage-1 scores, each computed exactly as score_responses does.
inline Eigen::VectorXd slice_scores(const ChannelizedStack& s, const ChoModel& stage1) {
  Eigen::VectorXd out(s.responses.rows());
  for (Eigen::Index r = 0; r < s.responses.rows(); ++r) {
    const Eigen::VectorXd row = s.responses.row(r).transpose();
    out(r) = score_responses(row, stage1);
  }
  return out;
}

inline double combine_scores(const Eigen::VectorXd& scores, const MsChoModel& model) {
  if (scores.size() == 1) return scores(0);
  switch (model.combiner) {
    case Combiner::hotelling: return model.stage2_weights.dot(scores);
    case Combiner::max: return scores.maxCoeff();
    case Combiner::mean: return scores.mean();
  }
  return 0.0;
}

/// Trains from channelized stacks. Stage 1 sees only the responses of the
/// central slice; the hotelling stage 2 is fitted on the per-slice score
/// vectors of the same training stacks.
inline MsChoModel train_mscho_b(std::span<const ChannelizedStack> healthy,
                                std::span<const ChannelizedStack> lesion,
                                std::shared_ptr<const ChannelBank> bank, std::vector<int> slice_range,
                                int central_slice, Combiner combiner = Combiner::hotelling,
                                const RidgePolicy& policy = {}) {
  const auto it = std::find(slice_range.begin(), slice_range.end(), central_slice);
  if (it == slice_range.end()) throw InputError("train_mscho_b: slice range must include the central slice");
  if (healthy.empty() || lesion.empty()) throw TrainingError("train_mscho_b: empty training class");
  const auto rows = static_cast<Eigen::Index>(slice_range.size());
  const auto channels = static_cast<Eigen::Index>(bank->n_channels);
  auto check = [&](const ChannelizedStack& s) {
    if (s.responses.rows() != rows || s.responses.cols() != channels) {
      throw InputError("train_mscho_b: channelized stack does not match slice range / bank");
    }
  };
  MsChoModel model;
  model.central_row = static_cast<std::size_t>(it - slice_range.begin());
  model.slice_range = std::move(slice_range);
  model.combiner = combiner;

  const auto central = static_cast<Eigen::Index>(model.central_row);
  Eigen::MatrixXd h1(static_cast<Eigen::Index>(healthy.size()), channels);
  Eigen::MatrixXd l1(static_cast<Eigen::Index>(lesion.size()), channels);
  for (std::size_t i = 0; i < healthy.size(); ++i) {
    check(healthy[i]);
    h1.row(static_cast<Eigen::Index>(i)) = healthy[i].responses.row(central);
  }
  for (std::size_t i = 0; i < lesion.size(); ++i) {
    check(lesion[i]);
    l1.row(static_cast<Eigen::Index>(i)) = lesion[i].responses.row(central);
  }
  model.stage1 = train_cho_from_responses(h1, l1, std::move(bank), policy);

  if (combiner == Combiner::hotelling && rows > 1) {
    Eigen::MatrixXd h2(static_cast<Eigen::Index>(healthy.size()), rows);
    Eigen::MatrixXd l2(static_cast<Eigen::Index>(lesion.size()), rows);
    for (std::size_t i = 0; i < healthy.size(); ++i) {
      h2.row(static_cast<Eigen::Index>(i)) = slice_scores(healthy[i], model.stage1).transpose();
    }
    for (std::size_t i = 0; i < lesion.size(); ++i) {
      l2.row(static_cast<Eigen::Index>(i)) = slice_scores(lesion[i], model.stage1).transpose();
    }
    model.stage2_weights = fit_hotelling(h2, l2, policy).weights;
  }
  return model;
}

inline double score_stack(const ChannelizedStack& s, const MsChoModel& model) {
  if (s.responses.rows() != static_cast<Eigen::Index>(model.slice_range.size())) {
    throw InputError("score_stack: channelized stack does not match the model's slice range");
  }
  return combine_scores(slice_scores(s, model.stage1), model);
}

inline MsChoModel train_mscho_b(std::span<const PerceivedStack> healthy, std::span<const PerceivedStack> lesion,
                                std::shared_ptr<const ChannelBank> bank, std::vector<int> slice_range,
                                Combiner combiner = Combiner::hotelling, const RidgePolicy& policy = {}) {
  if (healthy.empty() || lesion.empty()) throw TrainingError("train_mscho_b: empty training class");
  const int central = static_cast<int>(healthy.front().data.depth() / 2);
  std::vector<ChannelizedStack> h;
  std::vector<ChannelizedStack> l;
  for (const auto& s : healthy) h.push_back(channelize_stack(s.data, *bank, slice_range));
  for (const auto& s : lesion) l.push_back(channelize_stack(s.data, *bank, slice_range));
  return train_mscho_b(std::span<const ChannelizedStack>(h), std::span<const ChannelizedStack>(l), std::move(bank),
                       std::move(slice_range), central, combiner, policy);
}

inline double score_stack(const PerceivedStack& s, const MsChoModel& model) {
  return score_stack(channelize_stack(s.data, *model.stage1.bank, model.slice_range), model);
}

}  // namespace stcho

#endif  // STCHO_OBSERVER_HPP
