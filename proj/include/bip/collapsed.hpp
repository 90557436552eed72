#pragma once

#include "bip/types.hpp"

#include <cmath>

namespace bip {

/// Feature-level marginal likelihood with the loadings integrated out:
///
///   x_j ~ N(0, sigma_j^2 Sigma_j),   Sigma_j = U_g D(tau_j) U_g^T + I_n.
///
/// Everything is evaluated through the r x r capacitance matrix
/// C = I + D^{1/2} U^T U D^{1/2}, so the cost is O(r^3) once U^T U and U^T x_j
/// are known.
struct CollapsedContext {
  Matrix U_active;   // n x r_gamma
  Vector tau_active; // r_gamma, zero entries act as exact spikes
  double sigma2 = 1.0;
};

/// log|Sigma_j| and x^T Sigma_j^{-1} x.
struct CollapsedTerms {
  double log_det = 0.0;
  double quad = 0.0;
};

/// Low-rank terms from sufficient statistics: gram = U^T U (r x r),
/// utx = U^T x (r), xtx = x^T x. Entries of `tau` equal to zero are skipped.
CollapsedTerms collapsed_terms(const Matrix& gram, const Eigen::Ref<const Vector>& utx,
                               double xtx, const Eigen::Ref<const Vector>& tau);

double log_collapsed_density(const Matrix& gram, const Eigen::Ref<const Vector>& utx, double xtx,
                             Index n, const Eigen::Ref<const Vector>& tau, double sigma2);

double log_collapsed_density(const Vector& x, const CollapsedContext& ctx);

/// log G_j = log MVN(x_j; 0, sigma^2 Sigma_j) + sum_l log p(eta_lj | gamma_l),
/// with p(eta|gamma=0) a point mass at zero and Bernoulli(q_eta) otherwise.
/// `tau` holds tau_lj^2 for every component; rows with eta=0 are masked.
/// Throws ValidationError when eta_lj = 1 inside an inactive component.
double log_Gj(const Vector& x, const Matrix& U, const FlagVector& gamma, const FlagVector& eta,
              const Vector& tau, double sigma2, double q_eta);

/// P_lj = G(gamma1, eta1) / (G(gamma1, eta1) + G(gamma1, eta0)): probability that
/// feature j loads on component l once l is switched on.
double feature_inclusion_prob(const Vector& x, const Matrix& U, const FlagVector& gamma_on,
                              const FlagVector& eta_base, int l, const Vector& tau, double sigma2,
                              double q_eta);

/// Numerically stable logistic function.
inline double logistic(double t) {
  if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

/// log(1 + exp(t)) without overflow.
inline double log1pexp(double t) {
  return t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

}  // namespace bip
