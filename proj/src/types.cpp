#include "bip/types.hpp"

#include "bip/error.hpp"

#include <stdexcept>

namespace bip {

Matrix ViewSet::block_matrix(int b) const {
  if (b == 0) return outcome;
  if (b <= num_views()) return views[b - 1];
  if (b == num_views() + 1 && has_covariates()) return *covariates;
  throw std::out_of_range("block index " + std::to_string(b));
}

Index ViewSet::block_size(int b) const {
  if (b == 0) return 1;
  if (b <= num_views()) return views[b - 1].cols();
  if (b == num_views() + 1 && has_covariates()) return covariates->cols();
  throw std::out_of_range("block index " + std::to_string(b));
}

std::string ViewSet::block_name(int b) const {
  if (b == 0) return "outcome";
  if (b <= num_views()) {
    const auto i = static_cast<std::size_t>(b - 1);
    return i < view_names.size() ? view_names[i] : "X" + std::to_string(b);
  }
  return "covariates";
}

void Hyperparameters::validate() const {
  auto fail = [](const std::string& what) { throw ValidationError("invalid hyperparameter: " + what); };
  if (r < 1 || r > kMaxComponents) fail("r must be in [1, " + std::to_string(kMaxComponents) + "]");
  if (!(q_eta > 0.0 && q_eta < 1.0)) fail("q_eta must lie in (0, 1)");
  if (!(a > 0 && b > 0)) fail("a and b must be positive");
  if (!(a0 > 0 && b0 > 0)) fail("a0 and b0 must be positive");
  if (!(alpha > 0)) fail("alpha must be positive");
  if (!(alpha_b > 0 && beta_b > 0)) fail("alpha_b and beta_b must be positive");
  if (!(alpha0_shape > 0)) fail("alpha0_shape must be positive");
  if (n_iter < 1) fail("n_iter must be positive");
  if (burn_in < 0 || burn_in >= n_iter) fail("burn_in must satisfy 0 <= burn_in < n_iter");
  if (thin < 1) fail("thin must be >= 1");
  if (n_chains < 1) fail("n_chains must be >= 1");
}

ViewGroups ViewGroups::from_membership(Eigen::MatrixXi membership, std::vector<std::string> names) {
  ViewGroups g;
  const Index p = membership.rows();
  const Index K = membership.cols();
  if (K < 1) throw ValidationError("group design needs at least one group");
  if (!names.empty() && static_cast<Index>(names.size()) != K)
    throw ValidationError("group name count does not match membership columns");
  if (names.empty())
    for (Index k = 0; k < K; ++k) names.push_back("group" + std::to_string(k + 1));
  g.members.resize(static_cast<std::size_t>(K));
  g.groups_of.resize(static_cast<std::size_t>(p));
  for (Index j = 0; j < p; ++j) {
    for (Index k = 0; k < K; ++k) {
      const int v = membership(j, k);
      if (v != 0 && v != 1) throw ValidationError("group membership entries must be 0 or 1");
      if (v == 1) {
        g.members[static_cast<std::size_t>(k)].push_back(j);
        g.groups_of[static_cast<std::size_t>(j)].push_back(k);
      }
    }
  }
  g.membership = std::move(membership);
  g.names = std::move(names);
  return g;
}

bool GroupDesign::present() const {
  for (const auto& v : views)
    if (v) return true;
  return false;
}

const ViewGroups* GroupDesign::for_block(int b, int num_views) const {
  if (b < 1 || b > num_views) return nullptr;
  const auto i = static_cast<std::size_t>(b - 1);
  if (i >= views.size() || !views[i]) return nullptr;
  return &*views[i];
}

void check_invariants(const ChainState& state) {
  const int r = state.r();
  for (std::size_t bi = 0; bi < state.blocks.size(); ++bi) {
    const BlockState& s = state.blocks[bi];
    auto fail = [&](const std::string& what) {
      throw std::logic_error("invariant violated in block " + std::to_string(bi) + ": " + what);
    };
    if (s.A.rows() != r || s.eta.rows() != r || s.gamma.size() != r) fail("dimension");
    for (int l = 0; l < r; ++l) {
      if (s.kind == BlockKind::covariates && s.gamma(l) != 1) fail("covariate gamma must be 1");
      for (Index j = 0; j < s.p(); ++j) {
        if (s.gamma(l) == 0 && s.eta(l, j) != 0) fail("eta=1 inside inactive component");
        if (s.eta(l, j) == 0 && s.A(l, j) != 0.0) fail("nonzero loading with eta=0");
        if ((s.kind == BlockKind::covariates || s.kind == BlockKind::outcome) &&
            s.eta(l, j) != s.gamma(l))
          fail("forced inclusion broken");
      }
    }
    if (s.grouped()) {
      for (Index l = 0; l < s.b.rows(); ++l)
        for (Index k = 0; k < s.b.cols(); ++k)
          if ((s.b(l, k) == 0.0) != (s.r_ind(l, k) == 0)) fail("b_lk = 0 must match r_lk = 0");
    }
  }
}

}  // namespace bip
