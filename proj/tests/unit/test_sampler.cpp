#include "doctest.h"

#include "bip/error.hpp"
#include "bip/predict.hpp"
#include "bip/sampler.hpp"
#include "bip/simgen.hpp"
#include "bip/standardize.hpp"
#include "checks.hpp"

#include <random>

using namespace bip;

namespace {

const SamplerOptions kSerial{.exec = Exec::serial};

ViewSet noise_views(Index n, Index p, std::uint64_t seed, bool covariates = false) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> d;
  ViewSet v;
  for (int m = 0; m < 2; ++m) {
    Matrix x(n, p);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < p; ++j) x(i, j) = d(gen);
    v.views.push_back(x);
  }
  v.outcome.resize(n);
  for (Index i = 0; i < n; ++i) v.outcome(i) = d(gen);
  if (covariates) {
    Matrix c(n, 2);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < 2; ++j) c(i, j) = d(gen);
    v.covariates = c;
  }
  return v;
}

GroupDesign two_groups(Index p) {
  GroupDesign g;
  for (int m = 0; m < 2; ++m) {
    Eigen::MatrixXi P = Eigen::MatrixXi::Zero(p, 2);
    for (Index j = 0; j < p; ++j) P(j, j < p / 2 ? 0 : 1) = 1;
    g.views.emplace_back(ViewGroups::from_membership(P));
  }
  return g;
}

Hyperparameters small_hp(int n_iter, int burn_in) {
  Hyperparameters hp;
  hp.n_iter = n_iter;
  hp.burn_in = burn_in;
  hp.seed = 17;
  return hp;
}

double mean_of(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Single view, single feature state for scalar conditionals.
struct Scalar {
  ViewSet vs;
  std::unique_ptr<ModelData> data;
  ChainState st;
  Hyperparameters hp;

  Scalar(const Vector& x, const Matrix& U, int r) {
    vs.views.push_back(x);
    vs.outcome = Vector::Zero(x.size());
    data = std::make_unique<ModelData>(vs, GroupDesign{});
    hp.r = r;
    hp.n_iter = 2;
    hp.burn_in = 0;
    st = init_chain(hp, *data, 3);
    st.U = U;
    for (auto& b : st.blocks) {
      b.gamma.setZero();
      b.eta.setZero();
      b.A.setZero();
    }
  }
  BlockState& view() { return st.blocks[1]; }
};

}  // namespace

TEST_CASE("init_chain starting values and invariants") {
  const ViewSet v = noise_views(12, 6, 1, true);
  const ModelData data(v, two_groups(6));
  Hyperparameters hp;
  hp.r = 5;
  for (std::uint64_t key = 0; key < 20; ++key) {
    const ChainState st = init_chain(hp, data, key);
    CHECK_NOTHROW(check_invariants(st));
    for (const BlockState& b : st.blocks) {
      CHECK((b.tau2.array() == 1.0).all());
      CHECK((b.b0.array() == 0.1).all());
      for (int l = 0; l < hp.r; ++l)
        if (!b.gamma(l)) {
          CHECK((b.eta.row(l) == 0).all());
          CHECK(b.A.row(l).isZero(0.0));
        }
    }
    CHECK((st.blocks.back().gamma == 1).all());
    CHECK(st.blocks.back().kind == BlockKind::covariates);
  }
}

TEST_CASE("invariants hold after sweeps, including the parallel path") {
  const ViewSet v = noise_views(15, 8, 2, true);
  const ModelData data(v, two_groups(8));
  Hyperparameters hp;
  ChainState st = init_chain(hp, data, 4);
  for (int t = 1; t <= 30; ++t) {
    sweep(st, data, hp, SweepRng{4, static_cast<std::uint64_t>(t)}, SamplerOptions{});
    REQUIRE_NOTHROW(check_invariants(st));
  }
}

TEST_CASE("check_invariants names violations") {
  const ViewSet v = noise_views(6, 3, 3);
  const ModelData data(v, GroupDesign{});
  ChainState st = init_chain(Hyperparameters{}, data, 1);
  st.blocks[1].gamma(0) = 0;
  st.blocks[1].eta(0, 0) = 1;
  CHECK_THROWS_WITH(check_invariants(st), doctest::Contains("eta=1 inside inactive component"));
}

TEST_CASE("loadings: scalar ridge example and empty component") {
  Scalar s(Vector::Ones(9), Matrix::Ones(9, 1), 1);
  s.view().gamma(0) = 1;
  s.view().eta(0, 0) = 1;
  s.view().sigma2(0) = 1.0;
  s.view().tau2(0, 0) = 1.0;
  const BlockCache cache = BlockCache::build(s.st, *s.data, 1);
  std::vector<double> a;
  for (int t = 0; t < 20000; ++t) {
    step_loadings(s.st, *s.data, 1, cache, SweepRng{1, static_cast<std::uint64_t>(t)}, kSerial);
    a.push_back(s.view().A(0, 0));
  }
  // Mean 0.9, SD sqrt(1/10): 3 SE = 0.0067.
  CHECK(std::abs(mean_of(a) - 0.9) < 3.0 * std::sqrt(0.1 / 20000));

  Scalar z(Vector::Ones(9), Matrix::Zero(9, 1), 1);
  z.view().gamma(0) = 1;
  z.view().eta(0, 0) = 1;
  z.view().sigma2(0) = 2.0;
  z.view().tau2(0, 0) = 1.0;
  SamplerOptions sup = kSerial;
  sup.loading_precision = LoadingPrecision::identity;
  const BlockCache c2 = BlockCache::build(z.st, *z.data, 1);
  std::vector<double> b, b2;
  for (int t = 0; t < 20000; ++t) {
    step_loadings(z.st, *z.data, 1, c2, SweepRng{2, static_cast<std::uint64_t>(t)}, sup);
    b.push_back(z.view().A(0, 0));
    b2.push_back(b.back() * b.back());
  }
  CHECK(std::abs(mean_of(b)) < 3.0 * std::sqrt(2.0 / 20000));
  CHECK(mean_of(b2) == doctest::Approx(2.0).epsilon(0.03));
}

TEST_CASE("sigma2: empty model posterior IG(a0 + n/2, b0)") {
  Scalar s(Vector::Zero(2), Matrix::Zero(2, 1), 1);
  const BlockCache cache = BlockCache::build(s.st, *s.data, 1);
  std::vector<double> prec;
  for (int t = 0; t < 100000; ++t) {
    step_sigma2(s.st, *s.data, 1, cache, s.hp, SweepRng{3, static_cast<std::uint64_t>(t)}, kSerial);
    prec.push_back(1.0 / s.view().sigma2(0));
  }
  // 1/sigma2 ~ Gamma(1.01, 0.01): mean 101, SD 100.5.
  CHECK(std::abs(mean_of(prec) - 101.0) < 3.0 * 100.5 / std::sqrt(100000.0));
}

TEST_CASE("sigma2 rate scales with c^2 of the data") {
  Vector x(4);
  x << 0.5, -1.0, 1.5, 0.2;
  Scalar a(x, Matrix::Zero(4, 1), 1), b(3.0 * x, Matrix::Zero(4, 1), 1);
  a.hp.b0 = b.hp.b0 = 1e-12;
  const BlockCache ca = BlockCache::build(a.st, *a.data, 1), cb = BlockCache::build(b.st, *b.data, 1);
  step_sigma2(a.st, *a.data, 1, ca, a.hp, SweepRng{4, 1}, kSerial);
  step_sigma2(b.st, *b.data, 1, cb, b.hp, SweepRng{4, 1}, kSerial);
  CHECK(b.view().sigma2(0) == doctest::Approx(9.0 * a.view().sigma2(0)).epsilon(1e-9));
}

TEST_CASE("lambda2 and tau2 examples") {
  Scalar s(Vector::Ones(3), Matrix::Ones(3, 1), 1);
  s.hp.alpha = 1.0;
  BlockState& v = s.view();
  v.b0(0) = 0.1;
  v.tau2(0, 0) = 0.9;
  v.gamma(0) = 1;
  std::vector<double> act, inact;
  for (int t = 0; t < 100000; ++t) {
    v.eta(0, 0) = 1;
    step_lambda2(s.st, *s.data, 1, s.hp, SweepRng{5, static_cast<std::uint64_t>(t)}, kSerial);
    act.push_back(v.lambda2(0, 0));
    v.eta(0, 0) = 0;
    step_lambda2(s.st, *s.data, 1, s.hp, SweepRng{6, static_cast<std::uint64_t>(t)}, kSerial);
    inact.push_back(v.lambda2(0, 0));
  }
  CHECK(mean_of(act) == doctest::Approx(2.0).epsilon(0.01));
  CHECK(mean_of(inact) == doctest::Approx(10.0).epsilon(0.02));

  v.eta(0, 0) = 0;
  v.lambda2(0, 0) = 2.0;
  std::vector<double> tau;
  for (int t = 0; t < 1000000; ++t) {
    step_tau2(s.st, 1, SweepRng{7, static_cast<std::uint64_t>(t)}, kSerial);
    tau.push_back(v.tau2(0, 0));
  }
  CHECK(mean_of(tau) == doctest::Approx(0.5).epsilon(0.01));

  v.lambda2(0, 0) = 1e8;
  for (int eta : {0, 1}) {
    v.eta(0, 0) = static_cast<std::uint8_t>(eta);
    v.A(0, 0) = eta ? 0.5 : 0.0;
    step_tau2(s.st, 1, SweepRng{8, 1}, kSerial);
    CHECK(v.tau2(0, 0) < 1e-3);
  }
}

TEST_CASE("grouped lambda2 rate grows with the group effect") {
  Matrix x(5, 2);
  x << 1, 2, 3, 4, 5, 6, 7, 8, 9, 1;
  ViewSet vs;
  vs.views.push_back(x);
  vs.outcome = Vector::Zero(5);
  GroupDesign gd;
  gd.views.emplace_back(ViewGroups::from_membership(Eigen::MatrixXi::Ones(2, 1)));
  const ModelData data(vs, gd);
  Hyperparameters hp;
  hp.r = 1;
  ChainState st = init_chain(hp, data, 1);
  BlockState& v = st.blocks[1];
  v.gamma(0) = 1;
  v.eta(0, 0) = 1;
  v.A(0, 0) = 0.3;
  v.tau2(0, 0) = 1.0;
  double mean[2];
  for (int c = 0; c < 2; ++c) {
    v.r_ind(0, 0) = c;
    v.b(0, 0) = c ? 5.0 : 0.0;
    double s = 0;
    for (int t = 0; t < 20000; ++t) {
      step_lambda2(st, data, 1, hp, SweepRng{9, static_cast<std::uint64_t>(t)}, kSerial);
      s += v.lambda2(0, 0);
    }
    mean[c] = s / 20000;
  }
  CHECK(mean[1] < mean[0]);
}

TEST_CASE("U examples") {
  Scalar s(Vector::Constant(1, 3.0), Matrix::Zero(1, 1), 1);
  std::vector<double> u, u2;
  for (int t = 0; t < 100000; ++t) {
    step_U(s.st, *s.data, SweepRng{10, static_cast<std::uint64_t>(t)}, kSerial);
    u.push_back(s.st.U(0, 0));
    u2.push_back(u.back() * u.back());
  }
  CHECK(std::abs(mean_of(u)) < 0.01);
  CHECK(mean_of(u2) == doctest::Approx(1.0).epsilon(0.02));

  s.view().gamma(0) = 1;
  s.view().eta(0, 0) = 1;
  s.view().A(0, 0) = 1.0;
  s.view().sigma2(0) = 1.0;
  s.st.blocks[0].sigma2(0) = 1.0;
  u.clear();
  u2.clear();
  for (int t = 0; t < 100000; ++t) {
    step_U(s.st, *s.data, SweepRng{11, static_cast<std::uint64_t>(t)}, kSerial);
    u.push_back(s.st.U(0, 0));
    u2.push_back((u.back() - 1.5) * (u.back() - 1.5));
  }
  CHECK(std::abs(mean_of(u) - 1.5) < 3.0 * std::sqrt(0.5 / 100000));
  CHECK(mean_of(u2) == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("q examples") {
  Scalar s(Vector::Ones(3), Matrix::Ones(3, 1), 4);
  s.view().gamma.setOnes();
  double on = 0, off = 0;
  for (int t = 0; t < 100000; ++t) {
    step_q(s.st, 1, s.hp, SweepRng{12, static_cast<std::uint64_t>(t)});
    on += s.view().q;
  }
  s.view().gamma.setZero();
  for (int t = 0; t < 100000; ++t) {
    step_q(s.st, 1, s.hp, SweepRng{13, static_cast<std::uint64_t>(t)});
    off += s.view().q;
  }
  CHECK(on / 100000 == doctest::Approx(5.0 / 6.0).epsilon(0.01));
  CHECK(off / 100000 == doctest::Approx(1.0 / 6.0).epsilon(0.01));
}

TEST_CASE("intercept: centered null model and translation") {
  const Index n = 10;
  ViewSet vs;
  vs.views.push_back(Matrix::Identity(n, 2));
  vs.outcome = Vector::LinSpaced(n, -1.0, 1.0);
  const ModelData data(vs, GroupDesign{});
  Hyperparameters hp;
  hp.r = 1;
  ChainState st = init_chain(hp, data, 1);
  st.blocks[0].gamma.setZero();
  st.blocks[0].eta.setZero();
  st.blocks[0].A.setZero();
  st.blocks[0].sigma2(0) = 2.0;
  std::vector<double> a, a2;
  for (int t = 0; t < 100000; ++t) {
    step_alpha0(st, data, SweepRng{14, static_cast<std::uint64_t>(t)});
    a.push_back(st.alpha0);
    a2.push_back(st.alpha0 * st.alpha0);
  }
  CHECK(std::abs(mean_of(a)) < 3.0 * std::sqrt(0.2 / 100000));
  CHECK(mean_of(a2) == doctest::Approx(0.2).epsilon(0.02));

  ViewSet shifted = vs;
  shifted.outcome.array() += 4.0;
  const ModelData data2(shifted, GroupDesign{});
  ChainState st2 = st;
  step_alpha0(st, data, SweepRng{15, 1});
  step_alpha0(st2, data2, SweepRng{15, 1});
  CHECK(st2.alpha0 - st.alpha0 == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("group indicators recover the prior without active features") {
  Matrix x = Matrix::Identity(4, 3);
  ViewSet vs;
  vs.views.push_back(x);
  vs.outcome = Vector::Zero(4);
  GroupDesign gd;
  gd.views.emplace_back(ViewGroups::from_membership(Eigen::MatrixXi::Ones(3, 1)));
  const ModelData data(vs, gd);
  Hyperparameters hp;
  hp.r = 1;
  ChainState st = init_chain(hp, data, 1);
  BlockState& v = st.blocks[1];
  v.gamma.setZero();
  v.eta.setZero();
  v.A.setZero();
  v.q_r = 0.3;
  double on = 0;
  for (int t = 0; t < 10000; ++t) {
    step_group(st, data, 1, hp, SweepRng{16, static_cast<std::uint64_t>(t)}, kSerial);
    on += v.r_ind(0, 0);
    if (!v.r_ind(0, 0)) CHECK(v.b(0, 0) == 0.0);
  }
  CHECK(std::abs(on / 10000 - 0.3) < 0.02);
}

TEST_CASE("conditional moments at reduced draws") {
  for (const auto& c : checks::conditional_moments(20000, 5)) {
    INFO(c.step, ": ", c.quantity, " estimate ", c.estimate, " expected ", c.expected);
    CHECK(c.pass(4.0));
  }
}

TEST_CASE("enumerable toy at reduced sweeps") {
  const checks::ToyResult r = checks::enumeration_toy(30000, 2);
  INFO("chain ", r.chain, " exact ", r.exact);
  CHECK(std::abs(r.chain - r.exact) < 0.03);
  CHECK((r.exact > 0.05 && r.exact < 0.95));
}

TEST_CASE("null data: components rarely switch on") {
  const ViewSet v = noise_views(30, 20, 6);
  const Standardized s = validate_and_standardize(v);
  Hyperparameters hp = small_hp(500, 100);
  hp.a = 1.0;
  hp.b = 20.0;
  SamplerOptions opts = kSerial;
  opts.init = InitMethod::prior;
  const ChainResult res = run_chain(s.data, GroupDesign{}, hp, opts);
  int acc = 0, prop = 0;
  for (std::size_t t = 100; t < res.trace.size(); ++t) {
    acc += res.trace[t].accept_gamma[1];
    prop += res.trace[t].propose_gamma[1];
  }
  CHECK(static_cast<double>(acc) / prop < 0.1);
}

TEST_CASE("run_chain bookkeeping") {
  const ViewSet v = validate_and_standardize(noise_views(10, 5, 7)).data;
  Hyperparameters hp = small_hp(10, 5);
  ChainResult r = run_chain(v, GroupDesign{}, hp);
  CHECK(r.summary.draws.size() == 5);
  CHECK(r.trace.size() == 10);
  hp.thin = 2;
  CHECK(run_chain(v, GroupDesign{}, hp).summary.draws.size() == 3);
  hp.thin = 1;
  hp.n_chains = 2;
  r = run_chain(v, GroupDesign{}, hp);
  CHECK(r.summary.draws.size() == 10);
  CHECK(r.trace.size() == 20);
  hp.burn_in = 10;
  CHECK_THROWS_AS(run_chain(v, GroupDesign{}, hp), ValidationError);
}

TEST_CASE("MPPs match a recount of the draws and lie in [0, 1]") {
  const ViewSet v = validate_and_standardize(noise_views(20, 6, 8)).data;
  const ChainResult r = run_chain(v, two_groups(6), small_hp(60, 20));
  const auto& d = r.summary.draws;
  for (std::size_t b = 0; b < d.front().eta.size(); ++b) {
    Matrix count = Matrix::Zero(d.front().eta[b].rows(), d.front().eta[b].cols());
    for (const auto& x : d)
      for (Index l = 0; l < count.rows(); ++l)
        for (Index j = 0; j < count.cols(); ++j) count(l, j) += x.eta[b](l, j) ? 1.0 : 0.0;
    CHECK((count / static_cast<double>(d.size()) - r.summary.mpp_eta[b]).cwiseAbs().maxCoeff() == 0.0);
    CHECK(r.summary.mpp_eta[b].minCoeff() >= 0.0);
    CHECK(r.summary.mpp_eta[b].maxCoeff() <= 1.0);
  }
}

TEST_CASE("same seed gives identical summaries; serial and parallel agree") {
  const ViewSet v = validate_and_standardize(noise_views(25, 30, 9)).data;
  const GroupDesign g = two_groups(30);
  const Hyperparameters hp = small_hp(40, 10);
  const ChainResult a = run_chain(v, g, hp, SamplerOptions{});
  const ChainResult b = run_chain(v, g, hp, SamplerOptions{});
  const ChainResult c = run_chain(v, g, hp, kSerial);
  for (const ChainResult* o : {&b, &c}) {
    CHECK(o->summary.U_bar == a.summary.U_bar);
    CHECK(o->summary.alpha0_hat == a.summary.alpha0_hat);
    for (std::size_t k = 0; k < a.summary.A_mean.size(); ++k) {
      CHECK(o->summary.A_mean[k] == a.summary.A_mean[k]);
      CHECK(o->summary.sigma2_bar[k] == a.summary.sigma2_bar[k]);
      CHECK(o->summary.mpp_eta[k] == a.summary.mpp_eta[k]);
    }
  }
}

TEST_CASE("Scenario 1 outcome loads on at least one component") {
  ScenarioSpec spec;
  spec.n = 100;
  spec.n_test = 10;
  spec.p1 = spec.p2 = 120;
  spec.seed = 3;
  const SimulatedData sim = simulate(spec);
  const Standardized s = validate_and_standardize(sim.train);
  const ChainResult r = run_chain(s.data, sim.groups, small_hp(600, 300));
  CHECK(r.summary.mpp_gamma[0].maxCoeff() > 0.5);
}

TEST_CASE("geweke smoke run") {
  const checks::GewekeResult g = checks::geweke(1500, 5, LoadingPrecision::conjugate, 3);
  for (std::size_t k = 0; k < g.names.size(); ++k) {
    INFO(g.names[k], " p = ", g.pvalues[k]);
    CHECK(g.pvalues[k] > 0.001);
  }
}

TEST_CASE("ks p-value behaves") {
  std::vector<double> a, b, c;
  std::mt19937_64 gen(1);
  std::normal_distribution<double> d;
  for (int i = 0; i < 2000; ++i) {
    a.push_back(d(gen));
    b.push_back(d(gen));
    c.push_back(d(gen) + 0.3);
  }
  CHECK(checks::ks_pvalue(a, b) > 0.01);
  CHECK(checks::ks_pvalue(a, c) < 1e-6);
  CHECK(checks::ks_pvalue(a, a) == 1.0);
}
