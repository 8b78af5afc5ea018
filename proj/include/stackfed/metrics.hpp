#pragma once

#include <cstddef>
#include <set>
#include <span>
#include <string>

namespace stackfed {

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
};

// Class 1 is the positive class.
ConfusionCounts confusion(std::span<const int> y_true, std::span<const int> y_pred);

// Mean of the two per-class recalls. Throws kUndefinedMetric when y_true holds
// a single class.
double balanced_accuracy(std::span<const int> y_true, std::span<const int> y_pred);

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b);

// Pearson correlation of average-tie ranks.
double spearman(std::span<const double> x, std::span<const double> y);

}  // namespace stackfed
