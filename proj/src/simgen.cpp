#include "bip/simgen.hpp"

#include "bip/error.hpp"
#include "bip/rng.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace bip {

namespace {

enum Tag : std::uint64_t { loadings = 1, zeroing, scores, view_noise, outcome_noise };

double draw_effect(Stream& s, bool main) {
  const double mag = 0.3 + 0.2 * s.uniform();
  const double sign = s.uniform() < 0.5 ? -1.0 : 1.0;
  return sign * mag * (main ? 2.0 : 1.0);
}

bool is_main(Index j) { return j < kNetworkSize && j % kNetworkBlock == 0; }

void fill(Matrix& A, int l, Index from, Index to, Stream& s) {
  for (Index j = from; j < to; ++j) A(l, j) = draw_effect(s, is_main(j));
}

// Zero a uniform {0..5} count of whole columns inside each network group
// that carries signal.
void zero_within_groups(Matrix& A, Index groups, Stream& s) {
  for (Index g = 0; g < groups; ++g) {
    std::vector<Index> cols(static_cast<std::size_t>(kNetworkBlock));
    std::iota(cols.begin(), cols.end(), g * kNetworkBlock);
    const auto count = static_cast<std::size_t>(std::min<std::uint64_t>(s() % 6, 5));
    std::shuffle(cols.begin(), cols.end(), s);
    for (std::size_t i = 0; i < count; ++i) A.col(cols[i]).setZero();
  }
}

Matrix correlated_noise(Index n, Index p, bool iid, Stream& s) {
  Matrix E(n, p);
  for (Index j = 0; j < p; ++j)
    for (Index i = 0; i < n; ++i) E(i, j) = s.normal();
  if (iid) return E;
  const Matrix block = build_block_covariance(kNetworkSize).topLeftCorner(kNetworkBlock, kNetworkBlock);
  const Matrix L = block.llt().matrixL();
  for (Index g = 0; g < kNetworkSize / kNetworkBlock; ++g) {
    auto cols = E.middleCols(g * kNetworkBlock, kNetworkBlock);
    cols = (cols * L.transpose()).eval();
  }
  return E;
}

// Network-correlated noise for Settings 1-4 of scenario 1; i.i.d. otherwise.
bool structured_noise(const ScenarioSpec& spec) {
  return !spec.iid_noise && spec.scenario == 1 && spec.setting <= 4;
}

ViewSet draw_data(const ScenarioSpec& spec, const std::vector<Matrix>& A, const Vector& a, Index n,
                  std::uint64_t part, Matrix* U_out) {
  Stream su(derive_key(spec.seed, {Tag::scores, part}));
  Matrix U(n, kSimComponents);
  for (Index l = 0; l < kSimComponents; ++l)
    for (Index i = 0; i < n; ++i) U(i, l) = su.normal();
  ViewSet out;
  for (std::size_t v = 0; v < A.size(); ++v) {
    Stream se(derive_key(spec.seed, {Tag::view_noise, part, v}));
    out.views.push_back(U * A[v] + correlated_noise(n, A[v].cols(), !structured_noise(spec), se));
    out.view_names.push_back("X" + std::to_string(v + 1));
    std::vector<std::string> names;
    for (Index j = 0; j < A[v].cols(); ++j) names.push_back("x" + std::to_string(v + 1) + "_" + std::to_string(j + 1));
    out.feature_names.push_back(std::move(names));
  }
  Stream so(derive_key(spec.seed, {Tag::outcome_noise, part}));
  out.outcome = U * a;
  for (Index i = 0; i < n; ++i) out.outcome(i) += so.normal();
  for (Index i = 0; i < n; ++i) out.sample_ids.push_back((part == 0 ? "s" : "t") + std::to_string(i + 1));
  if (U_out) *U_out = std::move(U);
  return out;
}

}  // namespace

void ScenarioSpec::validate() const {
  if (scenario < 1 || scenario > 3) throw ValidationError("scenario must be 1, 2 or 3");
  if (scenario == 1 && (setting < 1 || setting > 5)) throw ValidationError("setting must be in 1..5");
  if (scenario != 1 && setting != 1) throw ValidationError("setting applies to scenario 1 only");
  if (n < 2 || n_test < 1) throw ValidationError("sample sizes too small");
  if (p1 < kNetworkSize || p2 < kNetworkSize)
    throw ValidationError("views need at least " + std::to_string(kNetworkSize) + " features");
}

Matrix build_block_covariance(Index p) {
  if (p < kNetworkSize) throw ValidationError("block covariance needs p >= 100");
  Matrix S = Matrix::Identity(p, p);
  for (Index g = 0; g < kNetworkSize / kNetworkBlock; ++g) {
    const Index m = g * kNetworkBlock;
    for (Index i = m + 1; i < m + kNetworkBlock; ++i) {
      S(m, i) = S(i, m) = 0.7;
      for (Index k = m + 1; k < m + kNetworkBlock; ++k)
        if (k != i) S(i, k) = 0.49;
    }
  }
  return S;
}

ViewGroups simulation_groups(Index p) {
  const Index K = kNetworkSize / kNetworkBlock + 1;
  Eigen::MatrixXi P = Eigen::MatrixXi::Zero(p, K);
  std::vector<std::string> names;
  for (Index j = 0; j < p; ++j) P(j, j < kNetworkSize ? j / kNetworkBlock : K - 1) = 1;
  for (Index k = 0; k + 1 < K; ++k) names.push_back("G" + std::to_string(k + 1));
  names.push_back("singletons");
  return ViewGroups::from_membership(std::move(P), std::move(names));
}

Vector scenario_outcome_coefficients(int scenario) {
  Vector a(kSimComponents);
  if (scenario == 1) a << 1, 1, 0, 0;
  else if (scenario == 2) a << 1, 0, 1, 0;
  else a << 1, 0, 1, 1;
  return a;
}

std::vector<Matrix> scenario_loadings(const ScenarioSpec& spec) {
  spec.validate();
  std::vector<Matrix> A{Matrix::Zero(kSimComponents, spec.p1), Matrix::Zero(kSimComponents, spec.p2)};
  for (std::size_t v = 0; v < 2; ++v) {
    Stream s(derive_key(spec.seed, {Tag::loadings, v}));
    Matrix& Av = A[v];
    switch (spec.scenario) {
      case 1: {
        const Index width = (spec.setting == 2 || spec.setting == 4) ? 30 : kNetworkSize;
        for (int l = 0; l < kSimComponents; ++l) {
          if (spec.setting == 5)
            fill(Av, l, 25 * l, 25 * (l + 1), s);
          else
            fill(Av, l, 0, width, s);
        }
        if (spec.setting == 3 || spec.setting == 4) {
          Stream sz(derive_key(spec.seed, {Tag::zeroing, v}));
          zero_within_groups(Av, width / kNetworkBlock, sz);
        }
        break;
      }
      case 2: {
        const int first = v == 0 ? 0 : 2;
        if (spec.overlap) {
          fill(Av, first, 0, kNetworkSize, s);
          fill(Av, first + 1, 0, kNetworkSize, s);
        } else {
          fill(Av, first, 0, 50, s);
          fill(Av, first + 1, 50, kNetworkSize, s);
        }
        break;
      }
      case 3: {
        if (spec.overlap) {
          fill(Av, 0, 0, 50, s);
          fill(Av, 1, 0, 50, s);
        } else {
          fill(Av, 0, 0, 25, s);
          fill(Av, 1, 25, 50, s);
        }
        fill(Av, v == 0 ? 2 : 3, 50, kNetworkSize, s);
        break;
      }
      default:
        break;
    }
  }
  return A;
}

SimulatedData simulate(const ScenarioSpec& spec) {
  spec.validate();
  SimulatedData out;
  GroundTruth& truth = out.truth;
  truth.A = scenario_loadings(spec);
  truth.a = scenario_outcome_coefficients(spec.scenario);
  out.train = draw_data(spec, truth.A, truth.a, spec.n, 0, &truth.U);
  out.test = draw_data(spec, truth.A, truth.a, spec.n_test, 1, nullptr);
  for (const Matrix& A : truth.A) {
    std::vector<Index> sig;
    for (Index j = 0; j < A.cols(); ++j)
      if (!A.col(j).isZero(0.0)) sig.push_back(j);
    ViewGroups g = simulation_groups(A.cols());
    std::vector<bool> flags(static_cast<std::size_t>(g.num_groups()), false);
    for (Index j : sig)
      for (Index k : g.groups_of[static_cast<std::size_t>(j)]) flags[static_cast<std::size_t>(k)] = true;
    truth.signal.push_back(std::move(sig));
    truth.group_is_signal.push_back(std::move(flags));
    out.groups.views.emplace_back(std::move(g));
  }
  return out;
}

}  // namespace bip
