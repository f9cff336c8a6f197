#pragma once

#include <cstdint>
#include <vector>

namespace ppt {

/// K x K counts, rows = ground truth, cols = prediction, domain-local
/// category indexing.
struct ConfusionMatrix {
  int k = 0;
  std::vector<int64_t> counts;

  ConfusionMatrix() = default;
  explicit ConfusionMatrix(int categories)
      : k(categories), counts(static_cast<size_t>(categories) * static_cast<size_t>(categories), 0) {}

  int64_t& at(int truth, int pred) { return counts[static_cast<size_t>(truth) * k + pred]; }
  int64_t at(int truth, int pred) const { return counts[static_cast<size_t>(truth) * k + pred]; }
  void merge(const ConfusionMatrix& other);
  int64_t total() const;
};

ConfusionMatrix confusion(const std::vector<int>& pred, const std::vector<int>& truth,
                          int categories);

struct IouResult {
  double miou = 0.0;
  std::vector<double> per_class;   // defined entries only
  std::vector<uint8_t> valid;      // 0 where the class is absent from truth and prediction
};

/// Per class IoU = diag / (rowsum + colsum - diag); classes absent from both
/// truth and prediction are excluded from the mean. Errors when every class
/// is absent.
IouResult miou(const ConfusionMatrix& cm);

}  // namespace ppt
