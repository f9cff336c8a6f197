#include "ppt/metrics.hpp"

#include <stdexcept>
#include <string>

namespace ppt {

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.k != k) throw std::invalid_argument("confusion matrix size mismatch");
  for (size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
}

int64_t ConfusionMatrix::total() const {
  int64_t t = 0;
  for (int64_t c : counts) t += c;
  return t;
}

ConfusionMatrix confusion(const std::vector<int>& pred, const std::vector<int>& truth,
                          int categories) {
  if (pred.size() != truth.size()) {
    throw std::invalid_argument("confusion: " + std::to_string(pred.size()) + " predictions vs " +
                                std::to_string(truth.size()) + " labels");
  }
  ConfusionMatrix cm(categories);
  for (size_t i = 0; i < pred.size(); ++i) {
    const int p = pred[i], t = truth[i];
    if (p < 0 || p >= categories || t < 0 || t >= categories) {
      throw std::out_of_range("confusion: label outside [0, " + std::to_string(categories) + ")");
    }
    ++cm.at(t, p);
  }
  return cm;
}

IouResult miou(const ConfusionMatrix& cm) {
  if (cm.k <= 0) throw std::invalid_argument("miou of an empty confusion matrix");
  IouResult out;
  out.per_class.assign(static_cast<size_t>(cm.k), 0.0);
  out.valid.assign(static_cast<size_t>(cm.k), 0);
  double sum = 0.0;
  int defined = 0;
  for (int c = 0; c < cm.k; ++c) {
    int64_t row = 0, col = 0;
    for (int j = 0; j < cm.k; ++j) {
      row += cm.at(c, j);
      col += cm.at(j, c);
    }
    const int64_t diag = cm.at(c, c);
    const int64_t denom = row + col - diag;
    if (denom == 0) continue;  // absent from truth and prediction
    out.per_class[static_cast<size_t>(c)] = static_cast<double>(diag) / static_cast<double>(denom);
    out.valid[static_cast<size_t>(c)] = 1;
    sum += out.per_class[static_cast<size_t>(c)];
    ++defined;
  }
  if (defined == 0) throw std::invalid_argument("miou: every class is absent");
  out.miou = sum / defined;
  return out;
}

}  // namespace ppt
