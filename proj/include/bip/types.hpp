#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace bip {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
/// Binary indicator storage (0/1), one byte per entry.
using Flags = Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;
using FlagVector = Eigen::Array<std::uint8_t, Eigen::Dynamic, 1>;

/// Largest supported number of latent components.
inline constexpr int kMaxComponents = 32;

/// Observed data. Block 0 of the model is the outcome, blocks 1..M are the
/// omics views and block M+1 (when present) holds the clinical covariates.
struct ViewSet {
  std::vector<Matrix> views;
  Vector outcome;
  std::optional<Matrix> covariates;
  std::vector<std::string> view_names;
  std::vector<std::vector<std::string>> feature_names;
  std::vector<std::string> covariate_names;
  std::vector<std::string> sample_ids;

  Index n() const { return outcome.size(); }
  int num_views() const { return static_cast<int>(views.size()); }
  bool has_covariates() const { return covariates.has_value(); }
  /// Outcome + views + optional covariates.
  int num_blocks() const { return num_views() + 1 + (has_covariates() ? 1 : 0); }
  /// Data matrix of model block `b` (outcome as an n x 1 column).
  Matrix block_matrix(int b) const;
  Index block_size(int b) const;
  std::string block_name(int b) const;
};

enum class BlockKind { outcome, omics, covariates };

struct Hyperparameters {
  int r = 4;
  double q_eta = 0.05;
  double a = 1.0;
  double b = 1.0;
  double a0 = 0.01;
  double b0 = 0.01;
  double alpha = 1.0;
  double alpha_b = 1.0;
  double beta_b = 1.0;
  double alpha0_shape = 1.0;
  int n_iter = 5000;
  int burn_in = 2500;
  int thin = 1;
  std::uint64_t seed = 1;
  int n_chains = 1;

  /// Throws ValidationError on the first violated constraint.
  void validate() const;
};

/// Group membership of one omics view: kappa(j, k) = 1 when feature j is in group k.
struct ViewGroups {
  Eigen::MatrixXi membership;
  std::vector<std::string> names;
  std::vector<std::vector<Index>> members;    // features of each group
  std::vector<std::vector<Index>> groups_of;  // groups of each feature

  static ViewGroups from_membership(Eigen::MatrixXi membership,
                                    std::vector<std::string> names = {});
  Index num_groups() const { return membership.cols(); }
};

/// Per omics view (index 0..M-1) optional group layer. BIPnet when any view
/// carries groups, BIP otherwise.
struct GroupDesign {
  std::vector<std::optional<ViewGroups>> views;

  bool present() const;
  /// Group layer of model block `b`, nullptr for outcome/covariate/ungrouped blocks.
  const ViewGroups* for_block(int b, int num_views) const;
};

/// Sampled quantities of one model block.
struct BlockState {
  BlockKind kind = BlockKind::omics;
  Matrix A;          // r x p loadings
  FlagVector gamma;  // r component indicators
  Flags eta;         // r x p feature indicators
  Vector sigma2;     // p residual variances
  Matrix tau2;       // r x p
  Matrix lambda2;    // r x p
  Vector b0;         // r baseline shrinkage rates
  double q = 0.5;    // component inclusion probability
  // Group layer (empty when the block has no groups).
  Matrix b;          // r x K group effects
  Flags r_ind;       // r x K group indicators
  double q_r = 0.5;

  Index p() const { return A.cols(); }
  bool grouped() const { return b.size() > 0; }
};

struct ChainState {
  Matrix U;  // n x r
  std::vector<BlockState> blocks;
  double alpha0 = 0.0;

  int r() const { return static_cast<int>(U.cols()); }
};

/// Throws std::logic_error naming the first violated structural invariant:
/// gamma=0 => eta row zero, eta=0 => loading zero, forced inclusion for the
/// outcome/covariates, b=0 exactly when r_ind=0.
void check_invariants(const ChainState& state);

/// Indicator configuration of one retained sweep.
struct ModelDraw {
  std::vector<FlagVector> gamma;
  std::vector<Flags> eta;
  std::vector<Flags> r_ind;
  double alpha0 = 0.0;
};

struct PosteriorSummary {
  std::vector<Vector> mpp_gamma;
  std::vector<Matrix> mpp_eta;
  std::vector<Matrix> mpp_group;  // empty matrix for ungrouped blocks
  Matrix U_bar;
  std::vector<Vector> sigma2_bar;
  std::vector<Matrix> A_mean;
  std::vector<Matrix> A_mode;  // filled by predict::attach_mode_loadings
  double alpha0_hat = 0.0;
  std::vector<ModelDraw> draws;
};

}  // namespace bip
