#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace bafrcnn::eval {

/// ROC AUC via the Mann-Whitney statistic; tied scores count one half.
double roc_auc(std::span<const double> positive_scores, std::span<const double> negative_scores);

struct LogisticProbe {
  std::vector<double> mean, scale;  ///< feature standardization
  std::vector<double> weights;      ///< last entry is the bias
  [[nodiscard]] double logit(std::span<const double> x) const;
};

/// Ridge-regularized logistic regression fit by Newton's method on standardized features.
LogisticProbe fit_logistic(std::span<const std::vector<double>> features, std::span<const int> labels,
                           double ridge = 1e-2, int iterations = 50);

/// Feature rows that must stay on one side of the train/test split (e.g. the
/// cells of one image).
using FeatureGroup = std::vector<std::vector<double>>;

/// Balanced linear-probe diagnostic. Groups of each domain are shuffled with a
/// seeded stream and split in half; within each half both domains are cut to
/// the same row count. A logistic probe is fit on the first half and its ROC
/// AUC (domain b positive) is reported on the second. Throws when either
/// domain has fewer than 4 groups.
double domain_probe_auc(std::span<const FeatureGroup> domain_a, std::span<const FeatureGroup> domain_b,
                        std::uint64_t seed = 0);

/// Same probe with every row its own group.
double domain_probe_auc(std::span<const std::vector<double>> rows_a, std::span<const std::vector<double>> rows_b,
                        std::uint64_t seed = 0);

}  // namespace bafrcnn::eval
