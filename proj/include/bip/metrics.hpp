#pragma once

#include "bip/types.hpp"

#include <vector>

namespace bip {

struct SelectionReport {
  double fnr = 0.0;        // percent
  double fpr = 0.0;        // percent
  double f_measure = 0.0;  // percent
  Index true_positives = 0;
  Index false_positives = 0;
  Index false_negatives = 0;
  std::vector<Index> selected;
};

/// Feature j is selected when max_l MPP(eta_lj) > threshold.
std::vector<bool> select_features(const Matrix& mpp_eta, double threshold = 0.5);

/// Scores a selection against the sorted true signal set.
SelectionReport selection_scores(const std::vector<bool>& selected, const std::vector<Index>& truth);

/// Mann-Whitney AUC, ties count one half. Throws ValidationError when either
/// class is empty.
double auc_from_mpp(const std::vector<double>& scores, const std::vector<bool>& labels);

/// Per-group score max_l MPP(r_lk).
std::vector<double> group_scores(const Matrix& mpp_group);

double mse(const Vector& pred, const Vector& actual);

}  // namespace bip
