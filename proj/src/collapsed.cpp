#include "bip/collapsed.hpp"

#include "bip/error.hpp"

#include <array>
#include <cmath>
#include <numbers>

namespace bip {

namespace {

using SmallMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxComponents,
                                  kMaxComponents>;
using SmallVector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxComponents, 1>;

constexpr double kJitter = 1e-10;

}  // namespace

CollapsedTerms collapsed_terms(const Matrix& gram, const Eigen::Ref<const Vector>& utx, double xtx,
                               const Eigen::Ref<const Vector>& tau) {
  const Index r = tau.size();
  std::array<Index, kMaxComponents> idx{};
  std::array<double, kMaxComponents> root{};
  Index s = 0;
  for (Index l = 0; l < r; ++l) {
    const double t = tau(l);
    if (!(t >= 0.0) || !std::isfinite(t)) throw ValidationError("tau must be finite and >= 0");
    if (t > 0.0) {
      idx[static_cast<std::size_t>(s)] = l;
      root[static_cast<std::size_t>(s)] = std::sqrt(t);
      ++s;
    }
  }
  CollapsedTerms out;
  out.quad = xtx;
  if (s == 0) return out;

  SmallMatrix C(s, s);
  SmallVector z(s);
  for (Index a = 0; a < s; ++a) {
    const auto ia = static_cast<std::size_t>(a);
    z(a) = root[ia] * utx(idx[ia]);
    for (Index c = 0; c <= a; ++c) {
      const auto ic = static_cast<std::size_t>(c);
      C(a, c) = root[ia] * root[ic] * gram(idx[ia], idx[ic]);
    }
    C(a, a) += 1.0;
  }
  Eigen::LLT<SmallMatrix, Eigen::Lower> llt(C);
  if (llt.info() != Eigen::Success) {
    C.diagonal().array() += kJitter;
    llt.compute(C);
    if (llt.info() != Eigen::Success) throw NumericError("capacitance matrix is not positive definite");
  }
  const auto& L = llt.matrixLLT();
  double log_det = 0.0;
  for (Index a = 0; a < s; ++a) log_det += std::log(L(a, a));
  out.log_det = 2.0 * log_det;
  llt.matrixL().solveInPlace(z);
  // Woodbury: x^T Sigma^{-1} x = x^T x - z^T C^{-1} z.
  out.quad = std::max(0.0, xtx - z.squaredNorm());
  return out;
}

double log_collapsed_density(const Matrix& gram, const Eigen::Ref<const Vector>& utx, double xtx,
                             Index n, const Eigen::Ref<const Vector>& tau, double sigma2) {
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2) || !std::isfinite(xtx))
    throw ValidationError("collapsed density needs finite inputs and sigma2 > 0");
  const CollapsedTerms t = collapsed_terms(gram, utx, xtx, tau);
  const double nd = static_cast<double>(n);
  return -0.5 * (nd * std::log(2.0 * std::numbers::pi * sigma2) + t.log_det + t.quad / sigma2);
}

double log_collapsed_density(const Vector& x, const CollapsedContext& ctx) {
  if (ctx.U_active.rows() != x.size() || ctx.U_active.cols() != ctx.tau_active.size())
    throw ValidationError("collapsed context dimensions are inconsistent");
  if (!x.allFinite() || !ctx.U_active.allFinite()) throw ValidationError("non-finite input");
  const Matrix gram = ctx.U_active.transpose() * ctx.U_active;
  const Vector utx = ctx.U_active.transpose() * x;
  return log_collapsed_density(gram, utx, x.squaredNorm(), x.size(), ctx.tau_active, ctx.sigma2);
}

double log_Gj(const Vector& x, const Matrix& U, const FlagVector& gamma, const FlagVector& eta,
              const Vector& tau, double sigma2, double q_eta) {
  const Index r = U.cols();
  if (gamma.size() != r || eta.size() != r || tau.size() != r || U.rows() != x.size())
    throw ValidationError("log_Gj: dimension mismatch");
  Vector masked = Vector::Zero(r);
  double log_prior = 0.0;
  for (Index l = 0; l < r; ++l) {
    if (gamma(l) == 0) {
      if (eta(l) != 0) throw ValidationError("invalid indicator configuration: eta=1 with gamma=0");
      continue;
    }
    if (eta(l) != 0) {
      masked(l) = tau(l);
      log_prior += std::log(q_eta);
    } else {
      log_prior += std::log1p(-q_eta);
    }
  }
  const Matrix gram = U.transpose() * U;
  const Vector utx = U.transpose() * x;
  return log_collapsed_density(gram, utx, x.squaredNorm(), x.size(), masked, sigma2) + log_prior;
}

double feature_inclusion_prob(const Vector& x, const Matrix& U, const FlagVector& gamma_on,
                              const FlagVector& eta_base, int l, const Vector& tau, double sigma2,
                              double q_eta) {
  if (gamma_on(l) != 1) throw ValidationError("feature_inclusion_prob: component must be active");
  FlagVector eta1 = eta_base, eta0 = eta_base;
  eta1(l) = 1;
  eta0(l) = 0;
  const double g1 = log_Gj(x, U, gamma_on, eta1, tau, sigma2, q_eta);
  const double g0 = log_Gj(x, U, gamma_on, eta0, tau, sigma2, q_eta);
  return logistic(g1 - g0);
}

}  // namespace bip
