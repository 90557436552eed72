#include "bip/standardize.hpp"

#include "bip/error.hpp"

#include <cmath>

namespace bip {

namespace {

void require_finite(const Matrix& m, const std::string& what) {
  if (!m.allFinite()) throw ValidationError(what + " contains NaN or Inf");
}

std::string feature_label(const std::vector<std::string>& names, Index j) {
  if (j < static_cast<Index>(names.size())) return names[static_cast<std::size_t>(j)];
  return "#" + std::to_string(j + 1);
}

// Returns (mean, sd) per column, failing on zero variance.
void column_moments(const Matrix& x, const std::vector<std::string>& names,
                    const std::string& block, Vector& mean, Vector& sd) {
  const Index n = x.rows();
  if (n < 2) throw ValidationError("standardization needs at least two samples");
  mean = x.colwise().mean().transpose();
  sd.resize(x.cols());
  for (Index j = 0; j < x.cols(); ++j) {
    const double ss = (x.col(j).array() - mean(j)).square().sum();
    sd(j) = std::sqrt(ss / static_cast<double>(n - 1));
    if (!(sd(j) > 1e-12 * (1.0 + std::abs(mean(j)))))
      throw ValidationError("zero-variance feature '" + feature_label(names, j) + "' in " + block);
  }
}

Matrix apply_moments(const Matrix& x, const Vector& mean, const Vector& sd) {
  return (x.rowwise() - mean.transpose()).array().rowwise() / sd.transpose().array();
}

}  // namespace

void validate_view_set(const ViewSet& data) {
  const Index n = data.outcome.size();
  if (n < 1) throw ValidationError("outcome is empty");
  if (data.views.empty()) throw ValidationError("at least one feature view is required");
  require_finite(data.outcome, "outcome");
  for (int v = 0; v < data.num_views(); ++v) {
    const Matrix& x = data.views[static_cast<std::size_t>(v)];
    const std::string name = data.block_name(v + 1);
    if (x.rows() != n)
      throw ValidationError("view '" + name + "' has " + std::to_string(x.rows()) +
                            " samples, outcome has " + std::to_string(n));
    if (x.cols() < 1) throw ValidationError("view '" + name + "' has no features");
    require_finite(x, "view '" + name + "'");
    if (static_cast<std::size_t>(v) < data.feature_names.size() &&
        !data.feature_names[static_cast<std::size_t>(v)].empty() &&
        static_cast<Index>(data.feature_names[static_cast<std::size_t>(v)].size()) != x.cols())
      throw ValidationError("view '" + name + "' feature name count mismatch");
  }
  if (data.covariates) {
    if (data.covariates->rows() != n) throw ValidationError("covariates row count mismatch");
    if (data.covariates->cols() < 1) throw ValidationError("covariate block has no columns");
    require_finite(*data.covariates, "covariates");
  }
  if (!data.sample_ids.empty() && static_cast<Index>(data.sample_ids.size()) != n)
    throw ValidationError("sample id count mismatch");
}

Standardized validate_and_standardize(const ViewSet& raw, bool center_outcome) {
  validate_view_set(raw);
  Standardized out{raw, {}};
  StandardizationRecord& rec = out.record;
  for (int v = 0; v < raw.num_views(); ++v) {
    const auto vi = static_cast<std::size_t>(v);
    const std::vector<std::string> none;
    const auto& names = vi < raw.feature_names.size() ? raw.feature_names[vi] : none;
    Vector mean, sd;
    column_moments(raw.views[vi], names, "view '" + raw.block_name(v + 1) + "'", mean, sd);
    out.data.views[vi] = apply_moments(raw.views[vi], mean, sd);
    rec.view_mean.push_back(std::move(mean));
    rec.view_sd.push_back(std::move(sd));
  }
  if (raw.covariates) {
    column_moments(*raw.covariates, raw.covariate_names, "covariates", rec.covariate_mean,
                   rec.covariate_sd);
    out.data.covariates = apply_moments(*raw.covariates, rec.covariate_mean, rec.covariate_sd);
  }
  if (center_outcome) {
    rec.outcome_mean = raw.outcome.mean();
    out.data.outcome = raw.outcome.array() - rec.outcome_mean;
  }
  return out;
}

Matrix StandardizationRecord::transform(int block, const Matrix& raw, int num_views) const {
  if (block >= 1 && block <= num_views) {
    const auto v = static_cast<std::size_t>(block - 1);
    if (raw.cols() != view_mean[v].size())
      throw ValidationError("view " + std::to_string(block) + " has " + std::to_string(raw.cols()) +
                            " columns, model expects " + std::to_string(view_mean[v].size()));
    return apply_moments(raw, view_mean[v], view_sd[v]);
  }
  if (block == num_views + 1) {
    if (raw.cols() != covariate_mean.size())
      throw ValidationError("covariates have " + std::to_string(raw.cols()) +
                            " columns, model expects " + std::to_string(covariate_mean.size()));
    return apply_moments(raw, covariate_mean, covariate_sd);
  }
  throw ValidationError("block " + std::to_string(block) + " is not a predictor block");
}

}  // namespace bip
