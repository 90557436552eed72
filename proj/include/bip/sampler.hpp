#pragma once

#include "bip/exec.hpp"
#include "bip/rng.hpp"
#include "bip/types.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace bip {

/// Precision used for the loading full conditional.
///  conjugate:  sigma_j^-2 (U^T U + D(tau_j)^-1), the exact conditional under
///              a_lj ~ N(0, tau_lj^2 sigma_j^2);
///  identity:  sigma_j^-2 (U^T U + I), tau held at one.
enum class LoadingPrecision { conjugate, identity };

/// Starting point of a chain.
///  prior:    every parameter from init_chain.
///  spectral: init_chain, then U from the leading left singular vectors of the
///            concatenated blocks and sigma^2 from the residual variances.
enum class InitMethod { prior, spectral };

struct SamplerOptions {
  Exec exec = Exec::parallel;
  LoadingPrecision loading_precision = LoadingPrecision::conjugate;
  /// Resample eta of a component that stays active after a rejected
  /// switch-off (and b of a group that stays selected). Without it the
  /// indicators of an active component never change.
  bool refresh_active = true;
  bool sample_intercept = true;
  bool track_log_joint = true;
  InitMethod init = InitMethod::spectral;
};

/// Data of the model blocks: outcome (block 0), omics views, covariates.
class ModelData {
 public:
  ModelData(const ViewSet& data, const GroupDesign& groups);

  int num_blocks() const { return static_cast<int>(x_.size()); }
  int num_views() const { return num_views_; }
  Index n() const { return n_; }
  BlockKind kind(int b) const { return kinds_[static_cast<std::size_t>(b)]; }
  /// Raw block data; the outcome column is stored without the intercept shift.
  const Matrix& x(int b) const { return x_[static_cast<std::size_t>(b)]; }
  const ViewGroups* groups(int b) const {
    const auto& g = groups_[static_cast<std::size_t>(b)];
    return g ? &*g : nullptr;
  }
  Index p(int b) const { return x(b).cols(); }

 private:
  Index n_ = 0;
  int num_views_ = 0;
  std::vector<Matrix> x_;
  std::vector<BlockKind> kinds_;
  std::vector<std::optional<ViewGroups>> groups_;
};

/// Sufficient statistics of one block against the current U: U^T U, U^T x_j
/// and x_j^T x_j. The outcome block is shifted by the current intercept.
struct BlockCache {
  Matrix gram;
  Matrix utx;
  Vector xtx;
  Index n = 0;

  static BlockCache build(const ChainState& state, const ModelData& data, int b);
};

enum class StepTag : std::uint64_t {
  init = 1, gamma_eta, eta_draw, eta_refresh, sigma2, loadings, lambda2, tau2,
  group, b0, q, q_r, U, alpha0
};

/// Random streams for one sweep of one chain.
struct SweepRng {
  std::uint64_t chain_key = 0;
  std::uint64_t sweep = 0;

  Stream stream(StepTag tag, std::int64_t block, std::int64_t i = 0, std::int64_t k = 0) const {
    return Stream(derive_key(chain_key, {sweep, static_cast<std::uint64_t>(tag),
                                         static_cast<std::uint64_t>(block),
                                         static_cast<std::uint64_t>(i),
                                         static_cast<std::uint64_t>(k)}));
  }
};

struct SweepDiagnostics {
  std::vector<int> accept_gamma;    // per block
  std::vector<int> propose_gamma;
  std::vector<int> accept_group;    // per block (0 when ungrouped)
  std::vector<int> propose_group;
  double log_joint = 0.0;
};

struct StepCounts {
  int proposed = 0;
  int accepted = 0;
};

/// Draws every parameter from its prior with tau^2 = 1 and b_l0 = 0.1.
ChainState init_chain(const Hyperparameters& hp, const ModelData& data, std::uint64_t chain_key);

/// Replaces U (unit-variance singular vectors, normal draws beyond the rank)
/// and sigma^2 (residual variance on U, floored) in a freshly initialized state.
void spectral_start(ChainState& state, const ModelData& data, std::uint64_t chain_key);

/// Per-component Metropolis-Hastings switch of gamma_l with eta_l. drawn from
/// P_lj on activation; loadings are integrated out.
StepCounts step_gamma_eta(ChainState& state, const ModelData& data, int b, const BlockCache& cache,
                          const Hyperparameters& hp, const SweepRng& rng,
                          const SamplerOptions& opts = {});
void step_sigma2(ChainState& state, const ModelData& data, int b, const BlockCache& cache,
                 const Hyperparameters& hp, const SweepRng& rng, const SamplerOptions& opts = {});
void step_loadings(ChainState& state, const ModelData& data, int b, const BlockCache& cache,
                   const SweepRng& rng, const SamplerOptions& opts = {});
void step_lambda2(ChainState& state, const ModelData& data, int b, const Hyperparameters& hp,
                  const SweepRng& rng, const SamplerOptions& opts = {});
void step_tau2(ChainState& state, int b, const SweepRng& rng, const SamplerOptions& opts = {});
StepCounts step_group(ChainState& state, const ModelData& data, int b, const Hyperparameters& hp,
                      const SweepRng& rng, const SamplerOptions& opts = {});
void step_b0(ChainState& state, const ModelData& data, int b, const Hyperparameters& hp,
             const SweepRng& rng);
void step_q(ChainState& state, int b, const Hyperparameters& hp, const SweepRng& rng);
void step_qr(ChainState& state, int b, const Hyperparameters& hp, const SweepRng& rng);
void step_U(ChainState& state, const ModelData& data, const SweepRng& rng,
            const SamplerOptions& opts = {});
void step_alpha0(ChainState& state, const ModelData& data, const SweepRng& rng);

/// Group offset P_j^T b_l for every (l, j) of a grouped block (zeros otherwise).
Matrix group_offset(const BlockState& s, const ViewGroups* groups);

/// log Gamma(lambda2; alpha, b0 + c) - log Gamma(lambda2; alpha, b0): change in
/// the lambda^2 prior when eta_lj switches on.
double lambda_prior_shift(double lambda2, double alpha, double b0, double c);

/// Complete-data log likelihood plus the U prior, for monitoring.
double log_joint(const ChainState& state, const ModelData& data);

/// One full sweep: per block (gamma,eta) -> sigma^2 -> A -> lambda^2 -> tau^2;
/// then (r,b) per grouped block; b_l0, q, q_r; U; intercept.
SweepDiagnostics sweep(ChainState& state, const ModelData& data, const Hyperparameters& hp,
                       const SweepRng& rng, const SamplerOptions& opts = {});

struct ChainResult {
  PosteriorSummary summary;
  std::vector<SweepDiagnostics> trace;  // every sweep of every chain, chain-major
};

/// Runs hp.n_chains chains of hp.n_iter sweeps and pools the retained draws.
ChainResult run_chain(const ViewSet& data, const GroupDesign& groups, const Hyperparameters& hp,
                      const SamplerOptions& opts = {});

}  // namespace bip
