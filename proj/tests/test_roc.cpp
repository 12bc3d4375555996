#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "stcho/rng.hpp"
#include "stcho/roc.hpp"

using namespace stcho;

namespace {

double brute_force_auc(const std::vector<double>& h, const std::vector<double>& l) {
  double s = 0.0;
  for (double a : h) {
    for (double b : l) s += success(a, b);
  }
  return s / static_cast<double>(h.size() * l.size());
}

std::vector<Label> labels_for(std::size_t n0, std::size_t n1) {
  std::vector<Label> out(n0, Label::healthy);
  out.insert(out.end(), n1, Label::lesion);
  return out;
}

}  // namespace

TEST(Auc, Examples) {
  EXPECT_EQ(auc_wilcoxon(std::vector<double>{0, 1}, std::vector<double>{2, 3}), 1.0);
  EXPECT_EQ(auc_wilcoxon(std::vector<double>{1, 3}, std::vector<double>{2, 4}), 0.75);
  EXPECT_EQ(auc_wilcoxon(std::vector<double>{1}, std::vector<double>{1}), 0.5);
  EXPECT_THROW(auc_wilcoxon(std::vector<double>{}, std::vector<double>{1}), InputError);
}

TEST(Auc, MatchesBruteForceWithTies) {
  Random rng(1);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n0 = 1 + rng.below(20), n1 = 1 + rng.below(20);
    std::vector<double> h(n0), l(n1);
    for (double& v : h) v = static_cast<double>(rng.below(8));
    for (double& v : l) v = static_cast<double>(rng.below(8)) + 1.0;
    EXPECT_EQ(auc_wilcoxon(h, l), brute_force_auc(h, l));
  }
}

TEST(Auc, ComplementAndMonotoneInvariance) {
  Random rng(2);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> h(1 + rng.below(15)), l(1 + rng.below(15));
    for (double& v : h) v = std::round(4 * rng.normal()) / 2;
    for (double& v : l) v = std::round(4 * rng.normal() + 2) / 2;
    EXPECT_EQ(auc_wilcoxon(h, l) + auc_wilcoxon(l, h), 1.0);
    std::vector<double> th = h, tl = l;
    for (double& v : th) v = 3.0 * v - 7.0;
    for (double& v : tl) v = 3.0 * v - 7.0;
    EXPECT_EQ(auc_wilcoxon(th, tl), auc_wilcoxon(h, l));
    for (double& v : th) v = std::exp(v / 10);
    for (double& v : tl) v = std::exp(v / 10);
    EXPECT_EQ(auc_wilcoxon(th, tl), auc_wilcoxon(h, l));
  }
}

TEST(Mrmc, PerfectSmallCase) {
  Eigen::MatrixXd s(2, 2);
  s << 0, 1, 0, 1;
  const auto labels = labels_for(1, 1);
  const auto r = one_shot_mrmc(s, labels);
  EXPECT_EQ(r.mean_auc, 1.0);
  EXPECT_FALSE(r.variance.has_value());
}

TEST(Mrmc, Errors) {
  Eigen::MatrixXd one(1, 4);
  one << 0, 1, 2, 3;
  EXPECT_THROW(one_shot_mrmc(one, labels_for(2, 2)), InputError);
  Eigen::MatrixXd two(2, 4);
  two.setZero();
  EXPECT_THROW(one_shot_mrmc(two, labels_for(4, 0)), InputError);
  EXPECT_THROW(one_shot_mrmc(two, labels_for(2, 1)), InputError);
}

TEST(Mrmc, IdenticalReadersReduceToSingleReaderVariance) {
  Random rng(3);
  const std::size_t n0 = 30, n1 = 25;
  std::vector<double> h(n0), l(n1);
  for (double& v : h) v = rng.normal();
  for (double& v : l) v = rng.normal() + 1.0;
  Eigen::MatrixXd s(3, static_cast<Eigen::Index>(n0 + n1));
  for (Eigen::Index r = 0; r < 3; ++r) {
    for (std::size_t c = 0; c < n0; ++c) s(r, static_cast<Eigen::Index>(c)) = h[c];
    for (std::size_t c = 0; c < n1; ++c) s(r, static_cast<Eigen::Index>(n0 + c)) = l[c];
  }
  const auto res = one_shot_mrmc(s, labels_for(n0, n1));
  EXPECT_EQ(res.reader_spread, 0.0);
  ASSERT_TRUE(res.variance.has_value());
  EXPECT_NEAR(*res.variance, *single_reader_variance(h, l), 1e-15);
  EXPECT_DOUBLE_EQ(res.mean_auc, auc_wilcoxon(h, l));
}

TEST(Mrmc, SingleReaderVarianceMatchesClosedForm) {
  // Unbiased U-statistic variance of the AUC, written out with pair sums.
  Random rng(4);
  std::vector<double> h(12), l(9);
  for (double& v : h) v = rng.normal();
  for (double& v : l) v = rng.normal() + 0.7;
  const double a = auc_wilcoxon(h, l);
  double all = 0.0;
  double n = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    for (std::size_t k = 0; k < h.size(); ++k) {
      if (i == k) continue;
      for (std::size_t j = 0; j < l.size(); ++j) {
        for (std::size_t m = 0; m < l.size(); ++m) {
          if (j == m) continue;
          all += success(h[i], l[j]) * success(h[k], l[m]);
          n += 1.0;
        }
      }
    }
  }
  EXPECT_NEAR(*single_reader_variance(h, l), a * a - all / n, 1e-14);
}

TEST(Mrmc, MonteCarloVarianceOracle) {
  // Readers share test cases; each resimulation draws new cases and new
  // reader skill. The one-shot estimate, averaged over resimulations, should
  // match the empirical variance of the reader-averaged AUC.
  const std::size_t readers = 5, n0 = 100, n1 = 100, sims = 200;
  const double d = 1.19, reader_sd = 0.15, case_share = 0.5;
  Random rng(5);
  std::vector<double> means, estimates;
  const auto labels = labels_for(n0, n1);
  for (std::size_t t = 0; t < sims; ++t) {
    std::vector<double> case_effect(n0 + n1);
    for (double& v : case_effect) v = rng.normal();
    Eigen::MatrixXd s(static_cast<Eigen::Index>(readers), static_cast<Eigen::Index>(n0 + n1));
    for (std::size_t r = 0; r < readers; ++r) {
      const double skill = d + reader_sd * rng.normal();
      for (std::size_t c = 0; c < n0 + n1; ++c) {
        const double mu = c < n0 ? 0.0 : skill;
        s(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
            mu + std::sqrt(case_share) * case_effect[c] + std::sqrt(1 - case_share) * rng.normal();
      }
    }
    const auto res = one_shot_mrmc(s, labels);
    means.push_back(res.mean_auc);
    estimates.push_back(*res.variance);
  }
  double m = 0.0, e = 0.0;
  for (std::size_t t = 0; t < sims; ++t) {
    m += means[t];
    e += estimates[t];
  }
  m /= sims;
  e /= sims;
  double emp = 0.0;
  for (double v : means) emp += (v - m) * (v - m);
  emp /= (sims - 1);
  EXPECT_NEAR(m, 0.8, 0.03);
  EXPECT_LE(std::abs(e - emp), 0.3 * emp) << "estimate " << e << " empirical " << emp;
}
