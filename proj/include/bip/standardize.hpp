#pragma once

#include "bip/types.hpp"

namespace bip {

/// Column moments retained from training so new samples can be mapped onto
/// the same scale.
struct StandardizationRecord {
  std::vector<Vector> view_mean;
  std::vector<Vector> view_sd;
  Vector covariate_mean;
  Vector covariate_sd;
  double outcome_mean = 0.0;

  /// Standardize a new block with training moments (views 1..M, covariates M+1).
  Matrix transform(int block, const Matrix& raw, int num_views) const;
};

struct Standardized {
  ViewSet data;
  StandardizationRecord record;
};

/// Checks shapes, finiteness and name counts. Throws ValidationError.
void validate_view_set(const ViewSet& data);

/// Column-standardizes every view and the covariates (sample SD), and
/// centers the outcome when `center_outcome` is set.
Standardized validate_and_standardize(const ViewSet& raw, bool center_outcome = true);

}  // namespace bip
