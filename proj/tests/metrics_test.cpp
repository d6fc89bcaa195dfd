#include <gtest/gtest.h>

#include <algorithm>
#include <vector>

#include "ecgnet/metrics.hpp"
#include "ecgnet/rng.hpp"

using namespace ecgnet;
using namespace ecgnet::metrics;

TEST(Confusion, PerfectPredictions) {
  const auto cm = confusion({0, 1, 2}, {0, 1, 2}, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) EXPECT_EQ(cm.at(i, j), i == j ? 1 : 0);
}

TEST(Confusion, OffDiagonalPlacement) {
  const auto cm = confusion({1, 0}, {0, 0}, 2);
  EXPECT_EQ(cm.at(0, 1), 1);  // truth 0 predicted 1
  EXPECT_EQ(cm.at(0, 0), 1);
  EXPECT_EQ(cm.total(), 2);
}

TEST(Confusion, LengthMismatchThrows) {
  EXPECT_THROW(confusion({0, 1}, {0}, 2), LengthMismatch);
}

TEST(Scores, HandComputedTwoClass) {
  ConfusionMatrix cm;
  cm.num_classes = 2;
  cm.counts = {8, 2, 1, 9};
  EXPECT_DOUBLE_EQ(accuracy(cm).value, 0.85);
  EXPECT_DOUBLE_EQ(sensitivity(cm, 0).value, 0.8);
  EXPECT_DOUBLE_EQ(f1(cm, 0).value, 16.0 / 19.0);
  EXPECT_DOUBLE_EQ(specificity_paper(cm, 0).value, 0.8);
}

TEST(Scores, PerfectDiagonal) {
  ConfusionMatrix cm;
  cm.num_classes = 3;
  cm.counts = {5, 0, 0, 0, 7, 0, 0, 0, 2};
  EXPECT_DOUBLE_EQ(accuracy(cm).value, 1.0);
  for (int i = 0; i < 3; ++i) {
    EXPECT_DOUBLE_EQ(sensitivity(cm, i).value, 1.0);
    EXPECT_DOUBLE_EQ(f1(cm, i).value, 1.0);
  }
  EXPECT_DOUBLE_EQ(mean_f1(cm, all_classes(cm)).value, 1.0);
}

TEST(Scores, ZeroDenominatorSetsDegenerateFlag) {
  ConfusionMatrix cm;
  cm.num_classes = 2;
  cm.counts = {3, 0, 0, 0};  // class 1 never appears
  const auto s = sensitivity(cm, 1);
  EXPECT_EQ(s.value, 0.0);
  EXPECT_TRUE(s.degenerate);
  const auto f = f1(cm, 1);
  EXPECT_EQ(f.value, 0.0);
  EXPECT_TRUE(f.degenerate);
  EXPECT_FALSE(sensitivity(cm, 0).degenerate);
}

TEST(Scores, AllInUnitInterval) {
  SplitMix64 rng(1);
  ConfusionMatrix cm;
  cm.num_classes = 5;
  cm.counts.resize(25);
  for (auto& c : cm.counts) c = static_cast<std::int64_t>(rng.uniform_int(10));
  EXPECT_GE(accuracy(cm).value, 0.0);
  EXPECT_LE(accuracy(cm).value, 1.0);
  for (int i = 0; i < 5; ++i) {
    for (auto v : {sensitivity(cm, i).value, f1(cm, i).value}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(Scores, WeightedRecallIdentity) {
  SplitMix64 rng(2);
  ConfusionMatrix cm;
  cm.num_classes = 4;
  cm.counts.resize(16);
  for (auto& c : cm.counts) c = static_cast<std::int64_t>(rng.uniform_int(20) + 1);
  const double total = static_cast<double>(cm.total());
  double weighted = 0.0;
  for (int i = 0; i < 4; ++i)
    weighted += sensitivity(cm, i).value * static_cast<double>(cm.row_sum(i)) / total;
  EXPECT_DOUBLE_EQ(accuracy(cm).value, weighted);
}

TEST(Scores, ClassPermutationInvariance) {
  SplitMix64 rng(3);
  std::vector<int> labels, preds;
  for (int i = 0; i < 200; ++i) {
    labels.push_back(static_cast<int>(rng.uniform_int(3)));
    preds.push_back(static_cast<int>(rng.uniform_int(3)));
  }
  const auto cm = confusion(preds, labels, 3);
  const std::vector<int> perm{2, 0, 1};
  std::vector<int> labels_p, preds_p;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    labels_p.push_back(perm[static_cast<std::size_t>(labels[i])]);
    preds_p.push_back(perm[static_cast<std::size_t>(preds[i])]);
  }
  const auto cm_p = confusion(preds_p, labels_p, 3);
  EXPECT_DOUBLE_EQ(accuracy(cm).value, accuracy(cm_p).value);
  for (int i = 0; i < 3; ++i) {
    EXPECT_DOUBLE_EQ(sensitivity(cm, i).value,
                     sensitivity(cm_p, perm[static_cast<std::size_t>(i)]).value);
    EXPECT_DOUBLE_EQ(f1(cm, i).value, f1(cm_p, perm[static_cast<std::size_t>(i)]).value);
  }
}

TEST(Scores, MeanF1OverSubset) {
  ConfusionMatrix cm;
  cm.num_classes = 4;
  cm.counts = {2, 0, 0, 0, 0, 2, 0, 0, 0, 0, 2, 0, 0, 0, 0, 2};
  EXPECT_DOUBLE_EQ(mean_f1(cm, {0, 1, 2}).value, 1.0);
}

TEST(Report, CsvHasHeaderAndSummaryRows) {
  const auto cm = confusion({0, 1, 1}, {0, 1, 0}, 2, {"N", "ST"});
  const auto csv = report_csv(cm, 0);
  EXPECT_NE(csv.find("class,sensitivity,specificity_paper,f1,degenerate"), std::string::npos);
  EXPECT_NE(csv.find("N,"), std::string::npos);
  EXPECT_NE(csv.find("accuracy,"), std::string::npos);
  EXPECT_NE(csv.find("mean_f1,"), std::string::npos);
  const auto text = report_text(cm, 0);
  EXPECT_NE(text.find("specificity_paper"), std::string::npos);
}
