#pragma once

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "ecgnet/errors.hpp"

namespace ecgnet::metrics {

// rows = ground truth, columns = prediction
struct ConfusionMatrix {
  int num_classes = 0;
  std::vector<std::int64_t> counts;  // row-major C x C
  std::vector<std::string> class_names;

  std::int64_t& at(int truth, int pred) {
    return counts[static_cast<std::size_t>(truth) * num_classes + pred];
  }
  std::int64_t at(int truth, int pred) const {
    return counts[static_cast<std::size_t>(truth) * num_classes + pred];
  }
  std::int64_t row_sum(int i) const {
    std::int64_t s = 0;
    for (int j = 0; j < num_classes; ++j) s += at(i, j);
    return s;
  }
  std::int64_t col_sum(int j) const {
    std::int64_t s = 0;
    for (int i = 0; i < num_classes; ++i) s += at(i, j);
    return s;
  }
  std::int64_t total() const {
    return std::accumulate(counts.begin(), counts.end(), std::int64_t(0));
  }
};

inline ConfusionMatrix confusion(const std::vector<int>& preds, const std::vector<int>& labels,
                                 int num_classes, std::vector<std::string> class_names = {}) {
  if (preds.size() != labels.size()) throw LengthMismatch("preds/labels size");
  ConfusionMatrix cm;
  cm.num_classes = num_classes;
  cm.counts.assign(static_cast<std::size_t>(num_classes) * num_classes, 0);
  cm.class_names = std::move(class_names);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes) throw LabelOutOfRange("label " + std::to_string(labels[i]));
    if (preds[i] < 0 || preds[i] >= num_classes) throw LabelOutOfRange("pred " + std::to_string(preds[i]));
    ++cm.at(labels[i], preds[i]);
  }
  return cm;
}

// A zero denominator yields value 0 with the degenerate flag set.
struct Score {
  double value = 0.0;
  bool degenerate = false;
};

inline Score accuracy(const ConfusionMatrix& cm) {
  const std::int64_t total = cm.total();
  if (total == 0) return {0.0, true};
  std::int64_t diag = 0;
  for (int i = 0; i < cm.num_classes; ++i) diag += cm.at(i, i);
  return {static_cast<double>(diag) / static_cast<double>(total), false};
}

// per-class recall: c_ii over row sum
inline Score sensitivity(const ConfusionMatrix& cm, int i) {
  const std::int64_t row = cm.row_sum(i);
  if (row == 0) return {0.0, true};
  return {static_cast<double>(cm.at(i, i)) / static_cast<double>(row), false};
}

// Here "specificity" means the recall of the designated normal class, not the
// usual true-negative rate; the explicit suffix keeps that nonstandard
// definition visible at call sites.
inline Score specificity_paper(const ConfusionMatrix& cm, int normal_class) {
  return sensitivity(cm, normal_class);
}

inline Score f1(const ConfusionMatrix& cm, int i) {
  const std::int64_t denom = cm.row_sum(i) + cm.col_sum(i);
  if (denom == 0) return {0.0, true};
  return {2.0 * static_cast<double>(cm.at(i, i)) / static_cast<double>(denom), false};
}

inline Score mean_f1(const ConfusionMatrix& cm, const std::vector<int>& subset) {
  if (subset.empty()) return {0.0, true};
  double sum = 0.0;
  bool degenerate = false;
  for (int i : subset) {
    const auto s = f1(cm, i);
    degenerate = degenerate || s.degenerate;
    sum += s.value;
  }
  return {sum / static_cast<double>(subset.size()), degenerate};
}

inline std::vector<int> all_classes(const ConfusionMatrix& cm) {
  std::vector<int> v(static_cast<std::size_t>(cm.num_classes));
  std::iota(v.begin(), v.end(), 0);
  return v;
}

inline std::string class_label(const ConfusionMatrix& cm, int i) {
  if (static_cast<std::size_t>(i) < cm.class_names.size()) return cm.class_names[static_cast<std::size_t>(i)];
  return std::to_string(i);
}

// class,sensitivity,specificity_paper,f1 rows plus accuracy / mean_f1 summary
inline std::string report_csv(const ConfusionMatrix& cm, int normal_class = 0) {
  std::ostringstream os;
  os << std::setprecision(6);
  os << "class,sensitivity,specificity_paper,f1,degenerate\n";
  for (int i = 0; i < cm.num_classes; ++i) {
    const auto sens = sensitivity(cm, i);
    const auto f = f1(cm, i);
    os << class_label(cm, i) << "," << sens.value << ","
       << (i == normal_class ? sens.value : 0.0) << "," << f.value << ","
       << (sens.degenerate || f.degenerate ? 1 : 0) << "\n";
  }
  os << "accuracy," << accuracy(cm).value << ",,,\n";
  os << "mean_f1," << mean_f1(cm, all_classes(cm)).value << ",,,\n";
  return os.str();
}

inline std::string report_text(const ConfusionMatrix& cm, int normal_class = 0) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  os << "class        sens    F1\n";
  for (int i = 0; i < cm.num_classes; ++i) {
    const auto sens = sensitivity(cm, i);
    const auto f = f1(cm, i);
    os << std::left << std::setw(12) << class_label(cm, i) << " " << sens.value << "  " << f.value;
    if (sens.degenerate || f.degenerate) os << "  (degenerate)";
    os << "\n";
  }
  os << "accuracy          " << accuracy(cm).value << "\n";
  os << "specificity_paper " << specificity_paper(cm, normal_class).value << "\n";
  os << "mean F1           " << mean_f1(cm, all_classes(cm)).value << "\n";
  return os.str();
}

}  // namespace ecgnet::metrics
