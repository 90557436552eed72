#pragma once

#include "bip/standardize.hpp"
#include "bip/types.hpp"

#include <nlohmann/json_fwd.hpp>

#include <vector>

namespace bip {

/// Loading estimate given a model.
///  scaled: a_j = sigma_j^2 (U_g^T U_g + I)^-1 U_g^T x_j (leading variance factor kept);
///  ridge:  a_j = (U_g^T U_g + I)^-1 U_g^T x_j.
enum class ModeVariant { scaled, ridge };

struct MppFields {
  std::vector<Vector> gamma;
  std::vector<Matrix> eta;
  std::vector<Matrix> group;
};

/// Fraction of draws with each indicator on. Throws ValidationError when empty.
MppFields compute_mpp(const std::vector<ModelDraw>& draws);

/// A distinct indicator configuration and the fraction of draws that visited it.
struct ModelConfig {
  std::vector<FlagVector> gamma;
  std::vector<Flags> eta;
  double weight = 0.0;
};

struct FittedModel {
  PosteriorSummary summary;
  StandardizationRecord standardization;
  Hyperparameters hp;
  int num_views = 0;
  bool has_covariates = false;
  ModeVariant variant = ModeVariant::scaled;
  Matrix gram;               // U_bar^T U_bar
  std::vector<Matrix> utx;   // U_bar^T x per block; outcome shifted by alpha0_hat
  std::vector<ModelConfig> configs;

  int num_blocks() const { return static_cast<int>(utx.size()); }
};

/// `data` is the standardized training set the summary was fit on.
FittedModel make_fitted_model(const PosteriorSummary& summary, const ViewSet& data,
                              const StandardizationRecord& record, const Hyperparameters& hp,
                              ModeVariant variant = ModeVariant::scaled);

/// Loadings under a model: solved over the components with gamma = 1, entries
/// with eta = 0 set to zero. Returns r x p.
Matrix mode_loadings(const Matrix& gram, const Matrix& utx, const Vector& sigma2,
                     const FlagVector& gamma, const Flags& eta, ModeVariant variant);

/// Loadings of block `b` under the median-probability pattern (MPP(eta) > 0.5).
Matrix posterior_mode_loadings(const FittedModel& fitted, int b);

/// Latent scores of new samples (rows of `x_blocks[b]` for blocks 1..M+1) given
/// loadings and variances of those blocks. Returns an n_new x r matrix.
Matrix estimate_latent_new(const std::vector<Matrix>& A, const std::vector<Vector>& sigma2,
                           const std::vector<Matrix>& x_blocks);

/// Linear predictor equivalent to BMA over the visited configurations:
/// y_hat = outcome_mean + alpha0_hat + sum_b x_b coef[b]. Entry 0 is empty.
std::vector<Vector> bma_coefficients(const FittedModel& fitted);

/// Predictions on the original outcome scale. `x_blocks[b]` holds the already
/// standardized new data of block b (b >= 1; entry 0 ignored).
Vector bma_predict(const FittedModel& fitted, const std::vector<Matrix>& x_blocks);

/// Standardize raw new views/covariates with the training record and predict.
Vector bma_predict_raw(const FittedModel& fitted, const std::vector<Matrix>& views,
                       const std::optional<Matrix>& covariates);

/// Compact serialized form: standardization, hyperparameters and the BMA
/// linear predictor. Enough for prediction on new data.
struct PredictorModel {
  StandardizationRecord standardization;
  std::vector<std::string> view_names;
  std::vector<std::vector<std::string>> feature_names;
  std::vector<std::string> covariate_names;
  double alpha0_hat = 0.0;
  std::vector<Vector> coef;  // per block, entry 0 empty

  Vector predict(const std::vector<Matrix>& views, const std::optional<Matrix>& covariates) const;
};

PredictorModel make_predictor(const FittedModel& fitted, const ViewSet& data);
nlohmann::json to_json(const PredictorModel& m);
PredictorModel predictor_from_json(const nlohmann::json& j);

}  // namespace bip
