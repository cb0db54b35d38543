#include "bafrcnn/eval/probe.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "bafrcnn/common/error.hpp"
#include "bafrcnn/common/rng.hpp"

namespace bafrcnn::eval {

double roc_auc(std::span<const double> pos, std::span<const double> neg) {
  if (pos.empty() || neg.empty()) throw std::invalid_argument("roc_auc: both classes need at least one score");
  struct Item {
    double score;
    bool positive;
  };
  std::vector<Item> all;
  all.reserve(pos.size() + neg.size());
  for (double s : pos) all.push_back({s, true});
  for (double s : neg) all.push_back({s, false});
  std::sort(all.begin(), all.end(), [](const Item& a, const Item& b) { return a.score < b.score; });
  // Sum of positive ranks with ties given their average rank.
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    while (j < all.size() && all[j].score == all[i].score) ++j;
    const double avg = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) rank_sum += all[k].positive ? avg : 0.0;
    i = j;
  }
  const double np = static_cast<double>(pos.size()), nn = static_cast<double>(neg.size());
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

double LogisticProbe::logit(std::span<const double> x) const {
  double z = weights.back();
  for (std::size_t k = 0; k < x.size(); ++k) z += weights[k] * (x[k] - mean[k]) / scale[k];
  return z;
}

LogisticProbe fit_logistic(std::span<const std::vector<double>> features, std::span<const int> labels, double ridge,
                           int iterations) {
  if (features.empty() || features.size() != labels.size()) {
    throw std::invalid_argument("fit_logistic: need one label per feature row");
  }
  const std::size_t n = features.size(), d = features.front().size();
  const bool has_pos = std::find(labels.begin(), labels.end(), 1) != labels.end();
  const bool has_neg = std::find(labels.begin(), labels.end(), 0) != labels.end();
  if (!has_pos || !has_neg) throw ValidationError("fit_logistic: labels contain a single class");

  LogisticProbe p;
  p.mean.assign(d, 0.0);
  p.scale.assign(d, 0.0);
  for (const auto& row : features) {
    if (row.size() != d) throw std::invalid_argument("fit_logistic: ragged feature rows");
    for (std::size_t k = 0; k < d; ++k) p.mean[k] += row[k];
  }
  for (double& m : p.mean) m /= static_cast<double>(n);
  for (const auto& row : features) {
    for (std::size_t k = 0; k < d; ++k) p.scale[k] += (row[k] - p.mean[k]) * (row[k] - p.mean[k]);
  }
  for (double& s : p.scale) {
    s = std::sqrt(s / static_cast<double>(n));
    if (!(s > 1e-12)) s = 1.0;  // constant feature
  }

  Eigen::MatrixXd x(n, d + 1);
  Eigen::VectorXd y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < d; ++k) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = (features[i][k] - p.mean[k]) / p.scale[k];
    x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = 1.0;
    y(static_cast<Eigen::Index>(i)) = labels[i] == 1 ? 1.0 : 0.0;
  }
  Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d + 1));
  Eigen::VectorXd reg = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(d + 1), ridge * static_cast<double>(n));
  reg(static_cast<Eigen::Index>(d)) = 0.0;  // bias unpenalized
  for (int it = 0; it < iterations; ++it) {
    const Eigen::VectorXd z = x * w;
    Eigen::VectorXd prob(z.size()), wt(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      prob(i) = 1.0 / (1.0 + std::exp(-z(i)));
      wt(i) = std::max(prob(i) * (1.0 - prob(i)), 1e-10);
    }
    const Eigen::VectorXd grad = x.transpose() * (prob - y) + reg.cwiseProduct(w);
    Eigen::MatrixXd hess = x.transpose() * wt.asDiagonal() * x;
    hess.diagonal() += reg;
    const Eigen::VectorXd step = hess.ldlt().solve(grad);
    w -= step;
    if (step.norm() < 1e-10) break;
  }
  p.weights.assign(w.data(), w.data() + w.size());
  return p;
}

double domain_probe_auc(std::span<const FeatureGroup> a, std::span<const FeatureGroup> b, std::uint64_t seed) {
  if (a.size() < 4 || b.size() < 4) {
    throw ValidationError("domain_probe_auc: need at least 4 groups per domain, got " + std::to_string(a.size()) +
                          " and " + std::to_string(b.size()));
  }
  Rng rng = Rng(seed).fork("probe-split");
  auto shuffled = [&](std::size_t count) {
    std::vector<std::size_t> idx(count);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = count - 1; i > 0; --i) std::swap(idx[i], idx[rng.index(i + 1)]);
    return idx;
  };
  const auto ia = shuffled(a.size()), ib = shuffled(b.size());
  // Rows of groups [lo, hi) of the shuffled order, then shuffled again so truncation is unbiased.
  auto rows = [&](std::span<const FeatureGroup> groups, const std::vector<std::size_t>& order, std::size_t lo,
                  std::size_t hi) {
    std::vector<const std::vector<double>*> out;
    for (std::size_t k = lo; k < hi; ++k) {
      for (const auto& r : groups[order[k]]) out.push_back(&r);
    }
    for (std::size_t i = out.size(); i > 1; --i) std::swap(out[i - 1], out[rng.index(i)]);
    return out;
  };
  auto train_a = rows(a, ia, 0, a.size() / 2), train_b = rows(b, ib, 0, b.size() / 2);
  auto test_a = rows(a, ia, a.size() / 2, a.size()), test_b = rows(b, ib, b.size() / 2, b.size());
  const std::size_t n_train = std::min(train_a.size(), train_b.size());
  const std::size_t n_test = std::min(test_a.size(), test_b.size());
  if (n_train == 0 || n_test == 0) throw ValidationError("domain_probe_auc: a split half has no feature rows");

  std::vector<std::vector<double>> train;
  std::vector<int> labels;
  for (std::size_t k = 0; k < n_train; ++k) {
    train.push_back(*train_a[k]);
    labels.push_back(0);
    train.push_back(*train_b[k]);
    labels.push_back(1);
  }
  const LogisticProbe probe = fit_logistic(train, labels);
  std::vector<double> pos, neg;
  for (std::size_t k = 0; k < n_test; ++k) {
    neg.push_back(probe.logit(*test_a[k]));
    pos.push_back(probe.logit(*test_b[k]));
  }
  return roc_auc(pos, neg);
}

double domain_probe_auc(std::span<const std::vector<double>> a, std::span<const std::vector<double>> b,
                        std::uint64_t seed) {
  auto groups = [](std::span<const std::vector<double>> rows) {
    std::vector<FeatureGroup> g;
    g.reserve(rows.size());
    for (const auto& r : rows) g.push_back({r});
    return g;
  };
  const auto ga = groups(a), gb = groups(b);
  return domain_probe_auc(std::span<const FeatureGroup>(ga), std::span<const FeatureGroup>(gb), seed);
}

}  // namespace bafrcnn::eval
