#include "doctest.h"

#include "bip/error.hpp"
#include "bip/predict.hpp"
#include "bip/sampler.hpp"
#include "bip/standardize.hpp"

#include <nlohmann/json.hpp>

#include <random>

using namespace bip;

namespace {

Matrix random_matrix(Index n, Index p, std::mt19937_64& gen) {
  std::normal_distribution<double> d;
  Matrix m(n, p);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < p; ++j) m(i, j) = d(gen);
  return m;
}

ViewSet signal_views(Index n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> d;
  const Matrix U = random_matrix(n, 2, gen);
  ViewSet v;
  for (int m = 0; m < 2; ++m) {
    Matrix x = random_matrix(n, 12, gen);
    for (Index j = 0; j < 6; ++j) x.col(j) += 1.5 * U.col(m);
    v.views.push_back(x);
    v.view_names.push_back("V" + std::to_string(m + 1));
    std::vector<std::string> names;
    for (Index j = 0; j < 12; ++j) names.push_back("f" + std::to_string(j));
    v.feature_names.push_back(names);
  }
  v.outcome = 2.0 * U.col(0) - U.col(1) + 0.5 * random_matrix(n, 1, gen).col(0);
  v.outcome.array() += 3.0;
  return v;
}

Hyperparameters quick_hp() {
  Hyperparameters hp;
  hp.r = 3;
  hp.n_iter = 300;
  hp.burn_in = 150;
  hp.seed = 4;
  return hp;
}

// Dense reading of the mode formula: sigma^2 (U_g^T U_g + I)^-1 U_g^T x_j, eta-masked.
Matrix dense_mode(const Matrix& U, const Matrix& X, const Vector& s2, const FlagVector& g, const Flags& eta,
                  bool scaled) {
  std::vector<Index> idx;
  for (Index l = 0; l < g.size(); ++l)
    if (g(l)) idx.push_back(l);
  Matrix Ug(U.rows(), static_cast<Index>(idx.size()));
  for (std::size_t a = 0; a < idx.size(); ++a) Ug.col(static_cast<Index>(a)) = U.col(idx[a]);
  const Matrix M = (Ug.transpose() * Ug + Matrix::Identity(Ug.cols(), Ug.cols())).inverse() * Ug.transpose();
  Matrix A = Matrix::Zero(g.size(), X.cols());
  for (Index j = 0; j < X.cols(); ++j) {
    const Vector a = M * X.col(j);
    for (std::size_t k = 0; k < idx.size(); ++k)
      if (eta(idx[k], j)) A(idx[k], j) = (scaled ? s2(j) : 1.0) * a(static_cast<Index>(k));
  }
  return A;
}

}  // namespace

TEST_CASE("mode loadings examples") {
  const Index n = 7;
  FlagVector g(1);
  g << 1;
  Flags eta = Flags::Ones(1, 1);
  const Matrix zero = mode_loadings(Matrix::Zero(1, 1), Matrix::Zero(1, 1), Vector::Ones(1), g, eta, ModeVariant::scaled);
  CHECK(zero.isZero(0.0));
  const Matrix U = Matrix::Ones(n, 1);
  const Matrix x = Matrix::Ones(n, 1);
  const Matrix a = mode_loadings(U.transpose() * U, U.transpose() * x, Vector::Ones(1), g, eta, ModeVariant::scaled);
  CHECK(a(0, 0) == doctest::Approx(7.0 / 8.0));
  g << 0;
  CHECK(mode_loadings(U.transpose() * U, U.transpose() * x, Vector::Ones(1), g, Flags::Zero(1, 1), ModeVariant::scaled)
            .isZero(0.0));
}

TEST_CASE("mode loadings match the dense formula") {
  std::mt19937_64 gen(2);
  const Matrix U = random_matrix(15, 4, gen);
  const Matrix X = random_matrix(15, 6, gen);
  Vector s2(6);
  s2 << 0.5, 1.2, 0.8, 2.0, 0.3, 1.0;
  FlagVector g(4);
  g << 1, 0, 1, 1;
  Flags eta = Flags::Zero(4, 6);
  for (Index j = 0; j < 6; ++j) {
    eta(0, j) = j % 2;
    eta(2, j) = 1;
    eta(3, j) = j < 3;
  }
  for (bool scaled : {true, false}) {
    const Matrix A = mode_loadings(U.transpose() * U, U.transpose() * X, s2, g, eta,
                                   scaled ? ModeVariant::scaled : ModeVariant::ridge);
    CHECK((A - dense_mode(U, X, s2, g, eta, scaled)).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("latent estimate examples and dense oracle") {
  std::vector<Matrix> A{Matrix::Zero(2, 3)};
  std::vector<Vector> s2{Vector::Ones(3)};
  std::mt19937_64 gen(3);
  const Matrix x = random_matrix(4, 3, gen);
  CHECK(estimate_latent_new(A, s2, {x}).isZero(0.0));

  Matrix a1(1, 1);
  a1 << 1.0;
  Matrix x1(1, 1);
  x1 << 2.0;
  CHECK(estimate_latent_new({a1}, {Vector::Ones(1)}, {x1})(0, 0) == doctest::Approx(1.0));

  const std::vector<Matrix> As{random_matrix(3, 5, gen), random_matrix(3, 4, gen)};
  const std::vector<Vector> ss{Vector::LinSpaced(5, 0.5, 1.5), Vector::LinSpaced(4, 2.0, 0.7)};
  const std::vector<Matrix> xs{random_matrix(2, 5, gen), random_matrix(2, 4, gen)};
  // Concatenated dense form.
  Matrix Acat(3, 9), Xcat(2, 9);
  Acat << As[0], As[1];
  Xcat << xs[0], xs[1];
  Vector scat(9);
  scat << ss[0], ss[1];
  const Matrix D = scat.cwiseInverse().asDiagonal();
  const Matrix expect = ((Acat * D * Acat.transpose() + Matrix::Identity(3, 3)).inverse() * Acat * D * Xcat.transpose()).transpose();
  CHECK((estimate_latent_new(As, ss, xs) - expect).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(estimate_latent_new(As, ss, {Matrix::Zero(1, 5), Matrix::Zero(1, 4)}).isZero(0.0));
  CHECK_THROWS_AS(estimate_latent_new(As, ss, {Matrix::Zero(1, 5), Matrix::Zero(1, 3)}), ValidationError);
}

TEST_CASE("compute_mpp tallies") {
  std::vector<ModelDraw> d(4);
  for (int i = 0; i < 4; ++i) {
    d[static_cast<std::size_t>(i)].gamma = {FlagVector::Constant(2, 1)};
    Flags e = Flags::Zero(2, 1);
    e(0, 0) = i < 3;
    d[static_cast<std::size_t>(i)].eta = {e};
    d[static_cast<std::size_t>(i)].r_ind = {Flags()};
  }
  const MppFields m = compute_mpp(d);
  CHECK(m.gamma[0](0) == 1.0);
  CHECK(m.eta[0](0, 0) == 0.75);
  CHECK(m.eta[0](1, 0) == 0.0);
  CHECK_THROWS_AS(compute_mpp({}), ValidationError);
}

TEST_CASE("BMA: null model predicts the training mean; one draw is a plug-in") {
  const ViewSet raw = signal_views(40, 5);
  const Standardized s = validate_and_standardize(raw);
  const ChainResult r = run_chain(s.data, GroupDesign{}, quick_hp());
  PosteriorSummary sum = r.summary;
  for (auto& d : sum.draws) {
    d.gamma[0].setZero();
    d.eta[0].setZero();
  }
  sum.alpha0_hat = 0.0;
  const FittedModel null = make_fitted_model(sum, s.data, s.record, quick_hp());
  const Vector y = bma_predict_raw(null, raw.views, std::nullopt);
  CHECK((y.array() - raw.outcome.mean()).abs().maxCoeff() < 1e-12);

  PosteriorSummary one = r.summary;
  one.draws.resize(1);
  const FittedModel f = make_fitted_model(one, s.data, s.record, quick_hp());
  const ModelConfig& c = f.configs.front();
  CHECK(c.weight == 1.0);
  // Plug-in: latent scores from the view loadings, then the outcome loading.
  std::vector<Matrix> A, xs;
  std::vector<Vector> s2;
  for (int b = 1; b <= 2; ++b) {
    A.push_back(mode_loadings(f.gram, f.utx[static_cast<std::size_t>(b)], one.sigma2_bar[static_cast<std::size_t>(b)],
                              c.gamma[static_cast<std::size_t>(b)], c.eta[static_cast<std::size_t>(b)], f.variant));
    s2.push_back(one.sigma2_bar[static_cast<std::size_t>(b)]);
    xs.push_back(s.data.views[static_cast<std::size_t>(b - 1)]);
  }
  const Matrix u = estimate_latent_new(A, s2, xs);
  const Matrix a0 = mode_loadings(f.gram, f.utx[0], one.sigma2_bar[0], c.gamma[0], c.eta[0], f.variant);
  const Vector plug = (u * a0).col(0).array() + s.record.outcome_mean + one.alpha0_hat;
  CHECK((bma_predict_raw(f, raw.views, std::nullopt) - plug).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("BMA is the visit-weighted average of per-configuration predictions") {
  const ViewSet raw = signal_views(40, 6);
  const Standardized s = validate_and_standardize(raw);
  const ChainResult r = run_chain(s.data, GroupDesign{}, quick_hp());
  const FittedModel f = make_fitted_model(r.summary, s.data, s.record, quick_hp());
  double total = 0;
  for (const auto& c : f.configs) total += c.weight;
  CHECK(total == doctest::Approx(1.0));
  Vector avg = Vector::Zero(raw.n());
  for (const auto& d : r.summary.draws) {
    PosteriorSummary one = r.summary;
    one.draws = {d};
    avg += bma_predict_raw(make_fitted_model(one, s.data, s.record, quick_hp()), raw.views, std::nullopt);
  }
  avg /= static_cast<double>(r.summary.draws.size());
  CHECK((bma_predict_raw(f, raw.views, std::nullopt) - avg).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("predictions shift exactly with the outcome") {
  const ViewSet raw = signal_views(40, 7);
  ViewSet shifted = raw;
  shifted.outcome.array() += 10.0;
  Vector pred[2];
  int i = 0;
  for (const ViewSet* v : std::initializer_list<const ViewSet*>{&raw, &shifted}) {
    const Standardized s = validate_and_standardize(*v);
    const ChainResult r = run_chain(s.data, GroupDesign{}, quick_hp());
    pred[i++] = bma_predict_raw(make_fitted_model(r.summary, s.data, s.record, quick_hp()), raw.views, std::nullopt);
  }
  CHECK(((pred[1] - pred[0]).array() - 10.0).abs().maxCoeff() < 1e-9);
}

TEST_CASE("serialized predictor reproduces BMA predictions") {
  ViewSet raw = signal_views(40, 8);
  std::mt19937_64 gen(9);
  raw.covariates = random_matrix(40, 2, gen);
  raw.covariate_names = {"age", "sex"};
  const Standardized s = validate_and_standardize(raw);
  const ChainResult r = run_chain(s.data, GroupDesign{}, quick_hp());
  const FittedModel f = make_fitted_model(r.summary, s.data, s.record, quick_hp(), ModeVariant::ridge);
  const PredictorModel p = predictor_from_json(nlohmann::json::parse(to_json(make_predictor(f, raw)).dump()));
  CHECK(p.view_names == std::vector<std::string>{"V1", "V2"});
  CHECK(p.covariate_names == raw.covariate_names);
  const Vector a = bma_predict_raw(f, raw.views, raw.covariates);
  CHECK((p.predict(raw.views, raw.covariates) - a).cwiseAbs().maxCoeff() < 1e-10);
  CHECK_THROWS_AS(p.predict(raw.views, std::nullopt), ValidationError);
  CHECK_THROWS_AS(p.predict({raw.views[0]}, raw.covariates), ValidationError);
  CHECK_THROWS_WITH_AS(p.predict({raw.views[0], raw.views[0].leftCols(5)}, raw.covariates),
                       doctest::Contains("view 'V2'"), ValidationError);
  CHECK_THROWS_AS(predictor_from_json(nlohmann::json::parse(R"({"view_names": 3})")), ValidationError);
}

TEST_CASE("posterior mode loadings follow the median-probability pattern") {
  const ViewSet raw = signal_views(40, 10);
  const Standardized s = validate_and_standardize(raw);
  const ChainResult r = run_chain(s.data, GroupDesign{}, quick_hp());
  const FittedModel f = make_fitted_model(r.summary, s.data, s.record, quick_hp());
  for (int b = 0; b < f.num_blocks(); ++b) {
    const Matrix& A = f.summary.A_mode[static_cast<std::size_t>(b)];
    const Matrix& mpp = r.summary.mpp_eta[static_cast<std::size_t>(b)];
    for (Index l = 0; l < A.rows(); ++l)
      for (Index j = 0; j < A.cols(); ++j)
        if (mpp(l, j) <= 0.5 || r.summary.mpp_gamma[static_cast<std::size_t>(b)](l) <= 0.5) CHECK(A(l, j) == 0.0);
  }
}
