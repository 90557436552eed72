#include "bip/sampler.hpp"

#include "bip/collapsed.hpp"
#include "bip/error.hpp"
#include "bip/predict.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace bip {

namespace {

using SmallMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxComponents,
                                  kMaxComponents>;
using SmallVector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxComponents, 1>;

constexpr double kLoadingFloor = 1e-12;
constexpr double kTauFloor = 1e-300;
constexpr double kInitSigmaMin = 1e-6;
constexpr double kInitSigmaMax = 1e6;

// Working column(s) of a block: the outcome is shifted by the intercept.
Matrix working_x(const ChainState& state, const ModelData& data, int b) {
  if (data.kind(b) == BlockKind::outcome) return data.x(b).array() - state.alpha0;
  return data.x(b);
}

}  // namespace

ModelData::ModelData(const ViewSet& data, const GroupDesign& groups)
    : n_(data.n()), num_views_(data.num_views()) {
  const int B = data.num_blocks();
  for (int b = 0; b < B; ++b) {
    x_.push_back(data.block_matrix(b));
    if (x_.back().rows() != n_) throw ValidationError("block " + data.block_name(b) + " row mismatch");
    kinds_.push_back(b == 0 ? BlockKind::outcome
                            : (b <= num_views_ ? BlockKind::omics : BlockKind::covariates));
    const ViewGroups* g = groups.for_block(b, num_views_);
    if (g && g->membership.rows() != x_.back().cols())
      throw ValidationError("group design of view '" + data.block_name(b) + "' has " +
                            std::to_string(g->membership.rows()) + " rows, view has " +
                            std::to_string(x_.back().cols()) + " features");
    groups_.push_back(g ? std::optional<ViewGroups>(*g) : std::nullopt);
  }
}

BlockCache BlockCache::build(const ChainState& state, const ModelData& data, int b) {
  BlockCache c;
  const Matrix x = working_x(state, data, b);
  c.gram = state.U.transpose() * state.U;
  c.utx = state.U.transpose() * x;
  c.xtx = x.colwise().squaredNorm().transpose();
  c.n = data.n();
  return c;
}

Matrix group_offset(const BlockState& s, const ViewGroups* groups) {
  Matrix c = Matrix::Zero(s.eta.rows(), s.eta.cols());
  if (!groups || !s.grouped()) return c;
  for (Index k = 0; k < groups->num_groups(); ++k)
    for (Index j : groups->members[static_cast<std::size_t>(k)]) c.col(j) += s.b.col(k);
  return c;
}

double lambda_prior_shift(double lambda2, double alpha, double b0, double c) {
  if (c == 0.0) return 0.0;
  return alpha * std::log1p(c / b0) - lambda2 * c;
}

ChainState init_chain(const Hyperparameters& hp, const ModelData& data, std::uint64_t chain_key) {
  hp.validate();
  const int r = hp.r;
  const Index n = data.n();
  ChainState st;
  st.U.resize(n, r);
  {
    Stream s(derive_key(chain_key, {static_cast<std::uint64_t>(StepTag::init), 0}));
    for (Index l = 0; l < r; ++l)
      for (Index i = 0; i < n; ++i) st.U(i, l) = s.normal();
  }
  for (int b = 0; b < data.num_blocks(); ++b) {
    Stream s(derive_key(chain_key, {static_cast<std::uint64_t>(StepTag::init), 1,
                                    static_cast<std::uint64_t>(b)}));
    const Index p = data.p(b);
    const BlockKind kind = data.kind(b);
    BlockState bs;
    bs.kind = kind;
    bs.q = kind == BlockKind::covariates ? 1.0 : s.beta(hp.a, hp.b);
    bs.gamma.resize(r);
    for (int l = 0; l < r; ++l)
      bs.gamma(l) = kind == BlockKind::covariates ? 1 : static_cast<std::uint8_t>(s.bernoulli(bs.q));
    bs.eta = Flags::Zero(r, p);
    for (int l = 0; l < r; ++l) {
      if (!bs.gamma(l)) continue;
      for (Index j = 0; j < p; ++j)
        bs.eta(l, j) = kind == BlockKind::omics ? static_cast<std::uint8_t>(s.bernoulli(hp.q_eta)) : 1;
    }
    bs.sigma2.resize(p);
    for (Index j = 0; j < p; ++j)
      bs.sigma2(j) = std::clamp(s.inverse_gamma(hp.a0, hp.b0), kInitSigmaMin, kInitSigmaMax);
    bs.tau2 = Matrix::Ones(r, p);
    bs.b0 = Vector::Constant(r, 0.1);
    if (const ViewGroups* g = data.groups(b)) {
      const Index K = g->num_groups();
      bs.q_r = s.beta(hp.a, hp.b);
      bs.r_ind = Flags::Zero(r, K);
      bs.b = Matrix::Zero(r, K);
      for (int l = 0; l < r; ++l)
        for (Index k = 0; k < K; ++k)
          if (s.bernoulli(bs.q_r)) {
            bs.r_ind(l, k) = 1;
            bs.b(l, k) = s.gamma(hp.alpha_b, hp.beta_b);
          }
    }
    const Matrix offs = group_offset(bs, data.groups(b));
    bs.lambda2.resize(r, p);
    bs.A = Matrix::Zero(r, p);
    for (Index j = 0; j < p; ++j)
      for (int l = 0; l < r; ++l) {
        const double c = bs.eta(l, j) ? offs(l, j) : 0.0;
        bs.lambda2(l, j) = s.gamma(hp.alpha, bs.b0(l) + c);
        if (bs.eta(l, j)) bs.A(l, j) = std::sqrt(bs.tau2(l, j) * bs.sigma2(j)) * s.normal();
      }
    st.blocks.push_back(std::move(bs));
  }
  st.alpha0 = 0.0;
  return st;
}

void spectral_start(ChainState& state, const ModelData& data, std::uint64_t chain_key) {
  const Index n = data.n();
  const int r = state.r();
  Index total = 0;
  for (int b = 0; b < data.num_blocks(); ++b) total += data.p(b);
  Matrix X(n, total);
  Index at = 0;
  for (int b = 0; b < data.num_blocks(); ++b) {
    Matrix x = working_x(state, data, b);
    x.rowwise() -= x.colwise().mean();
    X.middleCols(at, x.cols()) = x;
    at += x.cols();
  }
  Eigen::BDCSVD<Matrix> svd(X, Eigen::ComputeThinU);
  const Index rank = std::min<Index>(svd.rank(), std::min<Index>(n - 1, r));
  Stream s(derive_key(chain_key, {static_cast<std::uint64_t>(StepTag::init), 2}));
  for (int l = 0; l < r; ++l) {
    if (l < rank)
      state.U.col(l) = svd.matrixU().col(l) * std::sqrt(static_cast<double>(n));
    else
      for (Index i = 0; i < n; ++i) state.U(i, l) = s.normal();
  }
  const Eigen::LDLT<Matrix> gram(state.U.transpose() * state.U);
  for (int b = 0; b < data.num_blocks(); ++b) {
    const Matrix x = working_x(state, data, b);
    const Matrix resid = x - state.U * gram.solve(state.U.transpose() * x);
    BlockState& bs = state.blocks[static_cast<std::size_t>(b)];
    for (Index j = 0; j < bs.p(); ++j)
      bs.sigma2(j) = std::max(resid.col(j).squaredNorm() / static_cast<double>(n), 1e-3);
  }
}

StepCounts step_gamma_eta(ChainState& state, const ModelData& data, int b, const BlockCache& cache,
                          const Hyperparameters& hp, const SweepRng& rng,
                          const SamplerOptions& opts) {
  BlockState& s = state.blocks[static_cast<std::size_t>(b)];
  StepCounts counts;
  if (s.kind == BlockKind::covariates) return counts;
  const bool outcome = s.kind == BlockKind::outcome;
  const int r = state.r();
  const Index p = s.p();
  const Matrix offs = group_offset(s, data.groups(b));
  const double logit_q_eta = std::log(hp.q_eta) - std::log1p(-hp.q_eta);
  const double log_1m_q_eta = std::log1p(-hp.q_eta);
  std::vector<double> log_odds(static_cast<std::size_t>(p));
  std::vector<double> log_gain(static_cast<std::size_t>(p));

  for (int l = 0; l < r; ++l) {
    // Per feature: log-density with component l off (D0) and on (D1), other
    // rows at their current indicators.
    for_each_index(opts.exec, p, [&](std::int64_t j) {
      SmallVector tau = SmallVector::Zero(r);
      for (int m = 0; m < r; ++m)
        if (m != l && s.gamma(m) && s.eta(m, j)) tau(m) = s.tau2(m, j);
      const auto utx = cache.utx.col(j);
      const double d0 = log_collapsed_density(cache.gram, utx, cache.xtx(j), cache.n, tau, s.sigma2(j));
      tau(l) = s.tau2(l, j);
      const double d1 = log_collapsed_density(cache.gram, utx, cache.xtx(j), cache.n, tau, s.sigma2(j));
      const auto ju = static_cast<std::size_t>(j);
      if (outcome) {
        log_odds[ju] = d1 - d0;
        log_gain[ju] = d1 - d0;
      } else {
        const double w = lambda_prior_shift(s.lambda2(l, j), hp.alpha, s.b0(l), offs(l, j));
        log_odds[ju] = logit_q_eta + d1 - d0 + w;
        log_gain[ju] = log_1m_q_eta + log1pexp(log_odds[ju]);
      }
    });
    // log of the activation ratio: prior odds of gamma_l times
    // prod_j (G_j(gamma1, eta1) + G_j(gamma1, eta0)) / G_j(gamma0, eta0).
    double log_ratio = std::log(s.q) - std::log1p(-s.q);
    for (Index j = 0; j < p; ++j) log_ratio += log_gain[static_cast<std::size_t>(j)];
    if (!std::isfinite(log_ratio) && !std::isinf(log_ratio))
      throw NumericError("non-finite (gamma, eta) acceptance ratio");

    Stream u = rng.stream(StepTag::gamma_eta, b, l);
    const double log_u = std::log(u.uniform());
    ++counts.proposed;
    auto draw_eta_row = [&](StepTag tag) {
      for_each_index(opts.exec, p, [&](std::int64_t j) {
        if (outcome) {
          s.eta(l, j) = 1;
          return;
        }
        Stream sj = rng.stream(tag, b, l, j);
        s.eta(l, j) = static_cast<std::uint8_t>(sj.uniform() < logistic(log_odds[static_cast<std::size_t>(j)]));
        if (!s.eta(l, j)) s.A(l, j) = 0.0;
      });
    };
    if (s.gamma(l) == 0) {
      if (log_u < log_ratio) {
        ++counts.accepted;
        s.gamma(l) = 1;
        draw_eta_row(StepTag::eta_draw);
      }
    } else if (log_u < -log_ratio) {
      ++counts.accepted;
      s.gamma(l) = 0;
      s.eta.row(l).setZero();
      s.A.row(l).setZero();
    } else if (opts.refresh_active && !outcome) {
      draw_eta_row(StepTag::eta_refresh);
    }
  }
  return counts;
}

void step_sigma2(ChainState& state, const ModelData& /*data*/, int b, const BlockCache& cache,
                 const Hyperparameters& hp, const SweepRng& rng, const SamplerOptions& opts) {
  BlockState& s = state.blocks[static_cast<std::size_t>(b)];
  const int r = state.r();
  const double shape = hp.a0 + 0.5 * static_cast<double>(cache.n);
  for_each_index(opts.exec, s.p(), [&](std::int64_t j) {
    SmallVector tau = SmallVector::Zero(r);
    for (int l = 0; l < r; ++l)
      if (s.eta(l, j)) tau(l) = s.tau2(l, j);
    const CollapsedTerms t = collapsed_terms(cache.gram, cache.utx.col(j), cache.xtx(j), tau);
    Stream sj = rng.stream(StepTag::sigma2, b, j);
    s.sigma2(j) = sj.inverse_gamma(shape, hp.b0 + 0.5 * t.quad);
  });
}

void step_loadings(ChainState& state, const ModelData& /*data*/, int b, const BlockCache& cache,
                   const SweepRng& rng, const SamplerOptions& opts) {
  BlockState& s = state.blocks[static_cast<std::size_t>(b)];
  const int r = state.r();
  const bool conjugate = opts.loading_precision == LoadingPrecision::conjugate;
  for_each_index(opts.exec, s.p(), [&](std::int64_t j) {
    std::array<int, kMaxComponents> idx{};
    int act = 0;
    for (int l = 0; l < r; ++l)
      if (s.eta(l, j)) idx[static_cast<std::size_t>(act++)] = l;
    s.A.col(j).setZero();
    if (act == 0) return;
    SmallMatrix P(act, act);
    SmallVector rhs(act), z(act);
    Stream sj = rng.stream(StepTag::loadings, b, j);
    for (int a = 0; a < act; ++a) {
      const int la = idx[static_cast<std::size_t>(a)];
      for (int c = 0; c < act; ++c) P(a, c) = cache.gram(la, idx[static_cast<std::size_t>(c)]);
      P(a, a) += conjugate ? 1.0 / s.tau2(la, j) : 1.0;
      rhs(a) = cache.utx(la, j);
      z(a) = sj.normal();
    }
    Eigen::LLT<SmallMatrix> llt(P);
    if (llt.info() != Eigen::Success) throw NumericError("loading precision is not positive definite");
    SmallVector mean = llt.solve(rhs);
    llt.matrixU().solveInPlace(z);
    const double sd = std::sqrt(s.sigma2(j));
    for (int a = 0; a < act; ++a) s.A(idx[static_cast<std::size_t>(a)], j) = mean(a) + sd * z(a);
  });
}

void step_lambda2(ChainState& state, const ModelData& data, int b, const Hyperparameters& hp,
                  const SweepRng& rng, const SamplerOptions& opts) {
  BlockState& s = state.blocks[static_cast<std::size_t>(b)];
  const int r = state.r();
  const Matrix offs = group_offset(s, data.groups(b));
  for_each_index(opts.exec, s.p(), [&](std::int64_t j) {
    Stream sj = rng.stream(StepTag::lambda2, b, j);
    for (int l = 0; l < r; ++l) {
      if (s.eta(l, j))
        s.lambda2(l, j) = sj.gamma(hp.alpha + 1.0, s.b0(l) + offs(l, j) + s.tau2(l, j));
      else
        s.lambda2(l, j) = sj.gamma(hp.alpha, s.b0(l));
    }
  });
}

void step_tau2(ChainState& state, int b, const SweepRng& rng, const SamplerOptions& opts) {
  BlockState& s = state.blocks[static_cast<std::size_t>(b)];
  const int r = state.r();
  for_each_index(opts.exec, s.p(), [&](std::int64_t j) {
    Stream sj = rng.stream(StepTag::tau2, b, j);
    for (int l = 0; l < r; ++l) {
      const double lam = s.lambda2(l, j);
      if (s.eta(l, j)) {
        const double a = std::max(std::abs(s.A(l, j)), kLoadingFloor);
        const double mu = std::sqrt(2.0 * lam * s.sigma2(j)) / a;
        const double inv = sample_inverse_gaussian(mu, 2.0 * lam, sj);
        s.tau2(l, j) = std::max(1.0 / inv, kTauFloor);
      } else {
        s.tau2(l, j) = std::max(sj.exponential(lam), kTauFloor);
      }
    }
  });
}

StepCounts step_group(ChainState& state, const ModelData& data, int b, const Hyperparameters& hp,
                      const SweepRng& rng, const SamplerOptions& opts) {
  BlockState& s = state.blocks[static_cast<std::size_t>(b)];
  const ViewGroups* g = data.groups(b);
  StepCounts counts;
  if (!g || !s.grouped()) return counts;
  const int r = state.r();
  const Index K = g->num_groups();
  const double logit_qr = std::log(s.q_r) - std::log1p(-s.q_r);
  for (int l = 0; l < r; ++l) {
    for (Index k = 0; k < K; ++k) {
      // Active members of group k and their offsets from the other groups.
      std::vector<double> base, lam;
      for (Index j : g->members[static_cast<std::size_t>(k)]) {
        if (!s.eta(l, j)) continue;
        double c = s.b0(l);
        for (Index k2 : g->groups_of[static_cast<std::size_t>(j)])
          if (k2 != k) c += s.b(l, k2);
        base.push_back(c);
        lam.push_back(s.lambda2(l, j));
      }
      // log prod_j Gamma(lambda2_j; alpha, base_j + x) / Gamma(lambda2_j; alpha, base_j + y)
      auto log_target_ratio = [&](double x, double y) {
        double t = 0.0;
        for (std::size_t i = 0; i < base.size(); ++i)
          t += hp.alpha * (std::log(base[i] + x) - std::log(base[i] + y)) - lam[i] * (x - y);
        return t;
      };
      Stream sk = rng.stream(StepTag::group, b, l, k);
      const double log_u = std::log(sk.uniform());
      ++counts.proposed;
      const double current = s.b(l, k);
      if (s.r_ind(l, k) == 0) {
        // Proposal equals the slab prior, so the prior and proposal terms cancel.
        const double prop = sk.gamma(hp.alpha_b, hp.beta_b);
        if (log_u < logit_qr + log_target_ratio(prop, 0.0)) {
          ++counts.accepted;
          s.r_ind(l, k) = 1;
          s.b(l, k) = prop;
        }
      } else if (log_u < -logit_qr + log_target_ratio(0.0, current)) {
        ++counts.accepted;
        s.r_ind(l, k) = 0;
        s.b(l, k) = 0.0;
      }
      // Separate independence move on b; running it only after a rejected
      // switch-off would make the kernel depend on b and bias P(r = 1).
      if (opts.refresh_active && s.r_ind(l, k) == 1) {
        const double prop = sk.gamma(hp.alpha_b, hp.beta_b);
        if (std::log(sk.uniform()) < log_target_ratio(prop, s.b(l, k))) s.b(l, k) = prop;
      }
    }
  }
  return counts;
}

void step_b0(ChainState& state, const ModelData& data, int b, const Hyperparameters& hp,
             const SweepRng& rng) {
  BlockState& s = state.blocks[static_cast<std::size_t>(b)];
  const int r = state.r();
  const Index p = s.p();
  const Matrix offs = group_offset(s, data.groups(b));
  for (int l = 0; l < r; ++l) {
    // lambda2_lj ~ Gamma(alpha, b0 + c_lj) with c_lj > 0 only for active
    // features in selected groups; those terms are handled by an MH correction
    // on top of the conjugate proposal built from the remaining terms.
    double rate = hp.beta_b;
    Index plain = 0;
    std::vector<double> shifted;
    for (Index j = 0; j < p; ++j) {
      rate += s.lambda2(l, j);
      const double c = s.eta(l, j) ? offs(l, j) : 0.0;
      if (c > 0.0)
        shifted.push_back(c);
      else
        ++plain;
    }
    const double shape = hp.alpha0_shape + hp.alpha * static_cast<double>(plain);
    Stream sl = rng.stream(StepTag::b0, b, l);
    const double prop = sl.gamma(shape, rate);
    if (shifted.empty()) {
      s.b0(l) = prop;
      continue;
    }
    double log_ratio = 0.0;
    for (double c : shifted) log_ratio += hp.alpha * (std::log(prop + c) - std::log(s.b0(l) + c));
    if (std::log(sl.uniform()) < log_ratio) s.b0(l) = prop;
  }
}

void step_q(ChainState& state, int b, const Hyperparameters& hp, const SweepRng& rng) {
  BlockState& s = state.blocks[static_cast<std::size_t>(b)];
  if (s.kind == BlockKind::covariates) return;
  const double on = s.gamma.cast<double>().sum();
  Stream st = rng.stream(StepTag::q, b);
  s.q = st.beta(hp.a + on, hp.b + static_cast<double>(s.gamma.size()) - on);
}

void step_qr(ChainState& state, int b, const Hyperparameters& hp, const SweepRng& rng) {
  BlockState& s = state.blocks[static_cast<std::size_t>(b)];
  if (!s.grouped()) return;
  const double on = s.r_ind.cast<double>().sum();
  Stream st = rng.stream(StepTag::q_r, b);
  s.q_r = st.beta(hp.a + on, hp.b + static_cast<double>(s.r_ind.size()) - on);
}

void step_U(ChainState& state, const ModelData& data, const SweepRng& rng, const SamplerOptions& opts) {
  const int r = state.r();
  const Index n = data.n();
  Matrix prec = Matrix::Identity(r, r);
  Matrix proj = Matrix::Zero(n, r);
  for (int b = 0; b < data.num_blocks(); ++b) {
    const BlockState& s = state.blocks[static_cast<std::size_t>(b)];
    const Matrix W = s.A.array().rowwise() / s.sigma2.transpose().array();
    prec.noalias() += W * s.A.transpose();
    proj.noalias() += working_x(state, data, b) * W.transpose();
  }
  Eigen::LLT<Matrix> llt(prec);
  if (llt.info() != Eigen::Success) throw NumericError("U precision is not positive definite");
  const Matrix mean = llt.solve(proj.transpose());  // r x n
  const Matrix upper = llt.matrixU();
  for_each_index(opts.exec, n, [&](std::int64_t i) {
    Stream si = rng.stream(StepTag::U, 0, i);
    Vector z(r);
    for (int l = 0; l < r; ++l) z(l) = si.normal();
    upper.triangularView<Eigen::Upper>().solveInPlace(z);
    state.U.row(i) = (mean.col(i) + z).transpose();
  });
}

void step_alpha0(ChainState& state, const ModelData& data, const SweepRng& rng) {
  const BlockState& s = state.blocks[0];
  const Index n = data.n();
  const Vector resid = data.x(0).col(0) - state.U * s.A.col(0);
  Stream st = rng.stream(StepTag::alpha0, 0);
  state.alpha0 = resid.mean() + std::sqrt(s.sigma2(0) / static_cast<double>(n)) * st.normal();
}

double log_joint(const ChainState& state, const ModelData& data) {
  double total = -0.5 * state.U.squaredNorm();
  const double n = static_cast<double>(data.n());
  for (int b = 0; b < data.num_blocks(); ++b) {
    const BlockState& s = state.blocks[static_cast<std::size_t>(b)];
    const Matrix resid = working_x(state, data, b) - state.U * s.A;
    const Vector rss = resid.colwise().squaredNorm().transpose();
    for (Index j = 0; j < s.p(); ++j)
      total -= 0.5 * (n * std::log(2.0 * std::numbers::pi * s.sigma2(j)) + rss(j) / s.sigma2(j));
  }
  return total;
}

SweepDiagnostics sweep(ChainState& state, const ModelData& data, const Hyperparameters& hp,
                       const SweepRng& rng, const SamplerOptions& opts) {
  const int B = data.num_blocks();
  SweepDiagnostics diag;
  diag.accept_gamma.assign(static_cast<std::size_t>(B), 0);
  diag.propose_gamma.assign(static_cast<std::size_t>(B), 0);
  diag.accept_group.assign(static_cast<std::size_t>(B), 0);
  diag.propose_group.assign(static_cast<std::size_t>(B), 0);

  for (int b = 0; b < B; ++b) {
    const BlockCache cache = BlockCache::build(state, data, b);
    const StepCounts c = step_gamma_eta(state, data, b, cache, hp, rng, opts);
    diag.accept_gamma[static_cast<std::size_t>(b)] = c.accepted;
    diag.propose_gamma[static_cast<std::size_t>(b)] = c.proposed;
    // sigma^2 is drawn with the loadings still integrated out, then A given sigma^2.
    step_sigma2(state, data, b, cache, hp, rng, opts);
    step_loadings(state, data, b, cache, rng, opts);
    // lambda^2 before tau^2: the inactive path then draws (lambda^2, tau^2)
    // jointly from the pseudo-prior.
    step_lambda2(state, data, b, hp, rng, opts);
    step_tau2(state, b, rng, opts);
  }
  for (int b = 0; b < B; ++b) {
    const StepCounts c = step_group(state, data, b, hp, rng, opts);
    diag.accept_group[static_cast<std::size_t>(b)] = c.accepted;
    diag.propose_group[static_cast<std::size_t>(b)] = c.proposed;
  }
  for (int b = 0; b < B; ++b) {
    step_b0(state, data, b, hp, rng);
    step_q(state, b, hp, rng);
    step_qr(state, b, hp, rng);
  }
  step_U(state, data, rng, opts);
  if (opts.sample_intercept) step_alpha0(state, data, rng);
  if (opts.track_log_joint) diag.log_joint = log_joint(state, data);
#ifndef NDEBUG
  check_invariants(state);
#endif
  return diag;
}

namespace {

struct ChainAccumulator {
  Matrix U_sum;
  std::vector<Vector> sigma2_sum;
  std::vector<Matrix> A_sum;
  double alpha0_sum = 0.0;
  std::vector<ModelDraw> draws;
  std::vector<SweepDiagnostics> trace;

  void add(const ChainState& st) {
    if (draws.empty()) {
      U_sum = Matrix::Zero(st.U.rows(), st.U.cols());
      for (const auto& b : st.blocks) {
        sigma2_sum.push_back(Vector::Zero(b.sigma2.size()));
        A_sum.push_back(Matrix::Zero(b.A.rows(), b.A.cols()));
      }
    }
    U_sum += st.U;
    alpha0_sum += st.alpha0;
    ModelDraw d;
    for (std::size_t b = 0; b < st.blocks.size(); ++b) {
      sigma2_sum[b] += st.blocks[b].sigma2;
      A_sum[b] += st.blocks[b].A;
      d.gamma.push_back(st.blocks[b].gamma);
      d.eta.push_back(st.blocks[b].eta);
      d.r_ind.push_back(st.blocks[b].r_ind);
    }
    d.alpha0 = st.alpha0;
    draws.push_back(std::move(d));
  }
};

ChainAccumulator run_one_chain(const ModelData& model, const Hyperparameters& hp,
                               const SamplerOptions& opts, int chain) {
  const std::uint64_t key = derive_key(hp.seed, {static_cast<std::uint64_t>(chain)});
  ChainState state = init_chain(hp, model, key);
  if (opts.init == InitMethod::spectral) spectral_start(state, model, key);
  ChainAccumulator acc;
  acc.trace.reserve(static_cast<std::size_t>(hp.n_iter));
  for (int t = 0; t < hp.n_iter; ++t) {
    try {
      acc.trace.push_back(sweep(state, model, hp, SweepRng{key, static_cast<std::uint64_t>(t) + 1}, opts));
    } catch (const NumericError& e) {
      throw NumericError("chain " + std::to_string(chain) + ", iteration " + std::to_string(t) +
                         ": " + e.what());
    }
    if (t >= hp.burn_in && (t - hp.burn_in) % hp.thin == 0) acc.add(state);
  }
  return acc;
}

}  // namespace

ChainResult run_chain(const ViewSet& data, const GroupDesign& groups, const Hyperparameters& hp,
                      const SamplerOptions& opts) {
  hp.validate();
  const ModelData model(data, groups);
  std::vector<ChainAccumulator> chains(static_cast<std::size_t>(hp.n_chains));
  // Chains run side by side; the feature loops inside fall back to serial.
  for_each_index(hp.n_chains > 1 ? opts.exec : Exec::serial, hp.n_chains, [&](std::int64_t c) {
    chains[static_cast<std::size_t>(c)] = run_one_chain(model, hp, opts, static_cast<int>(c));
  });

  ChainResult out;
  PosteriorSummary& sum = out.summary;
  double count = 0.0;
  for (auto& ch : chains) {
    count += static_cast<double>(ch.draws.size());
    if (sum.draws.empty()) {
      sum.U_bar = ch.U_sum;
      sum.sigma2_bar = ch.sigma2_sum;
      sum.A_mean = ch.A_sum;
    } else {
      sum.U_bar += ch.U_sum;
      for (std::size_t b = 0; b < ch.sigma2_sum.size(); ++b) {
        sum.sigma2_bar[b] += ch.sigma2_sum[b];
        sum.A_mean[b] += ch.A_sum[b];
      }
    }
    sum.alpha0_hat += ch.alpha0_sum;
    for (auto& d : ch.draws) sum.draws.push_back(std::move(d));
    for (auto& t : ch.trace) out.trace.push_back(std::move(t));
  }
  sum.U_bar /= count;
  for (std::size_t b = 0; b < sum.sigma2_bar.size(); ++b) {
    sum.sigma2_bar[b] /= count;
    sum.A_mean[b] /= count;
  }
  sum.alpha0_hat /= count;
  const MppFields mpp = compute_mpp(sum.draws);
  sum.mpp_gamma = mpp.gamma;
  sum.mpp_eta = mpp.eta;
  sum.mpp_group = mpp.group;
  return out;
}

}  // namespace bip
