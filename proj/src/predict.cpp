#include "bip/predict.hpp"

#include "bip/error.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <string>

namespace bip {

MppFields compute_mpp(const std::vector<ModelDraw>& draws) {
  if (draws.empty()) throw ValidationError("no retained draws");
  MppFields out;
  const std::size_t B = draws.front().gamma.size();
  for (std::size_t b = 0; b < B; ++b) {
    const auto& d0 = draws.front();
    Vector g = Vector::Zero(d0.gamma[b].size());
    Matrix e = Matrix::Zero(d0.eta[b].rows(), d0.eta[b].cols());
    Matrix r = Matrix::Zero(d0.r_ind[b].rows(), d0.r_ind[b].cols());
    for (const auto& d : draws) {
      g += d.gamma[b].cast<double>().matrix();
      e += d.eta[b].cast<double>().matrix();
      if (r.size() > 0) r += d.r_ind[b].cast<double>().matrix();
    }
    const double n = static_cast<double>(draws.size());
    out.gamma.push_back(g / n);
    out.eta.push_back(e / n);
    out.group.push_back(r / n);
  }
  return out;
}

namespace {

std::string config_key(const ModelDraw& d) {
  std::string key;
  for (std::size_t b = 0; b < d.gamma.size(); ++b) {
    key.append(reinterpret_cast<const char*>(d.gamma[b].data()), static_cast<std::size_t>(d.gamma[b].size()));
    key.append(reinterpret_cast<const char*>(d.eta[b].data()), static_cast<std::size_t>(d.eta[b].size()));
  }
  return key;
}

std::vector<ModelConfig> unique_configs(const std::vector<ModelDraw>& draws) {
  std::map<std::string, std::size_t> seen;
  std::vector<ModelConfig> out;
  for (const auto& d : draws) {
    auto [it, inserted] = seen.try_emplace(config_key(d), out.size());
    if (inserted) out.push_back({d.gamma, d.eta, 0.0});
    out[it->second].weight += 1.0;
  }
  for (auto& c : out) c.weight /= static_cast<double>(draws.size());
  return out;
}

}  // namespace

FittedModel make_fitted_model(const PosteriorSummary& summary, const ViewSet& data,
                              const StandardizationRecord& record, const Hyperparameters& hp,
                              ModeVariant variant) {
  if (summary.draws.empty()) throw ValidationError("fitted model needs at least one retained draw");
  FittedModel f;
  f.summary = summary;
  f.standardization = record;
  f.hp = hp;
  f.num_views = data.num_views();
  f.has_covariates = data.has_covariates();
  f.variant = variant;
  f.gram = summary.U_bar.transpose() * summary.U_bar;
  for (int b = 0; b < data.num_blocks(); ++b) {
    Matrix x = data.block_matrix(b);
    if (b == 0) x.array() -= summary.alpha0_hat;
    f.utx.push_back(summary.U_bar.transpose() * x);
  }
  f.configs = unique_configs(summary.draws);
  f.summary.A_mode.clear();
  for (int b = 0; b < f.num_blocks(); ++b) f.summary.A_mode.push_back(posterior_mode_loadings(f, b));
  return f;
}

Matrix mode_loadings(const Matrix& gram, const Matrix& utx, const Vector& sigma2,
                     const FlagVector& gamma, const Flags& eta, ModeVariant variant) {
  const Index r = gram.rows();
  Matrix A = Matrix::Zero(r, utx.cols());
  std::vector<Index> idx;
  for (Index l = 0; l < r; ++l)
    if (gamma(l)) idx.push_back(l);
  if (idx.empty()) return A;
  // Solve over the active components, keep the entries with eta = 1.
  const auto k = static_cast<Index>(idx.size());
  Matrix P(k, k);
  Matrix rhs(k, utx.cols());
  for (Index a = 0; a < k; ++a) {
    for (Index c = 0; c < k; ++c) P(a, c) = gram(idx[a], idx[c]);
    P(a, a) += 1.0;
    rhs.row(a) = utx.row(idx[a]);
  }
  const Matrix sol = P.llt().solve(rhs);
  for (Index j = 0; j < utx.cols(); ++j) {
    const double scale = variant == ModeVariant::scaled ? sigma2(j) : 1.0;
    for (Index a = 0; a < k; ++a)
      if (eta(idx[a], j)) A(idx[a], j) = scale * sol(a, j);
  }
  return A;
}

Matrix posterior_mode_loadings(const FittedModel& fitted, int b) {
  const auto bi = static_cast<std::size_t>(b);
  const Flags eta = (fitted.summary.mpp_eta[bi].array() > 0.5).cast<std::uint8_t>();
  const FlagVector gamma = (fitted.summary.mpp_gamma[bi].array() > 0.5).cast<std::uint8_t>();
  return mode_loadings(fitted.gram, fitted.utx[bi], fitted.summary.sigma2_bar[bi], gamma, eta,
                       fitted.variant);
}

Matrix estimate_latent_new(const std::vector<Matrix>& A, const std::vector<Vector>& sigma2,
                           const std::vector<Matrix>& x_blocks) {
  if (A.empty()) throw ValidationError("no predictor blocks");
  const Index r = A.front().rows();
  const Index m = x_blocks.front().rows();
  Matrix P = Matrix::Identity(r, r);
  Matrix rhs = Matrix::Zero(r, m);
  for (std::size_t b = 0; b < A.size(); ++b) {
    if (x_blocks[b].cols() != A[b].cols())
      throw ValidationError("new data block " + std::to_string(b + 1) + " has " +
                            std::to_string(x_blocks[b].cols()) + " columns, model expects " +
                            std::to_string(A[b].cols()));
    const Matrix W = A[b].array().rowwise() / sigma2[b].transpose().array();
    P.noalias() += W * A[b].transpose();
    rhs.noalias() += W * x_blocks[b].transpose();
  }
  return P.llt().solve(rhs).transpose();
}

std::vector<Vector> bma_coefficients(const FittedModel& fitted) {
  const int B = fitted.num_blocks();
  const Index r = fitted.gram.rows();
  std::vector<Vector> coef(static_cast<std::size_t>(B));
  for (int b = 1; b < B; ++b) coef[static_cast<std::size_t>(b)] = Vector::Zero(fitted.utx[static_cast<std::size_t>(b)].cols());
  const auto& s2 = fitted.summary.sigma2_bar;
  for (const ModelConfig& c : fitted.configs) {
    const Matrix a0 = mode_loadings(fitted.gram, fitted.utx[0], s2[0], c.gamma[0], c.eta[0], fitted.variant);
    if (a0.isZero(0.0)) continue;
    std::vector<Matrix> W(static_cast<std::size_t>(B));
    Matrix P = Matrix::Identity(r, r);
    for (int b = 1; b < B; ++b) {
      const auto bi = static_cast<std::size_t>(b);
      const Matrix A = mode_loadings(fitted.gram, fitted.utx[bi], s2[bi], c.gamma[bi], c.eta[bi], fitted.variant);
      W[bi] = A.array().rowwise() / s2[bi].transpose().array();
      P.noalias() += W[bi] * A.transpose();
    }
    // y_hat = a0^T P^-1 sum_b W_b x_b
    const Vector v = P.llt().solve(a0.col(0));
    for (int b = 1; b < B; ++b) {
      const auto bi = static_cast<std::size_t>(b);
      coef[bi].noalias() += c.weight * (W[bi].transpose() * v);
    }
  }
  return coef;
}

Vector bma_predict(const FittedModel& fitted, const std::vector<Matrix>& x_blocks) {
  const std::vector<Vector> coef = bma_coefficients(fitted);
  const Index m = x_blocks.at(1).rows();
  Vector y = Vector::Constant(m, fitted.standardization.outcome_mean + fitted.summary.alpha0_hat);
  for (int b = 1; b < fitted.num_blocks(); ++b) {
    const auto bi = static_cast<std::size_t>(b);
    if (x_blocks.at(bi).cols() != coef[bi].size())
      throw ValidationError("new data block " + std::to_string(b) + " has " +
                            std::to_string(x_blocks[bi].cols()) + " columns, model expects " +
                            std::to_string(coef[bi].size()));
    y.noalias() += x_blocks[bi] * coef[bi];
  }
  return y;
}

Vector bma_predict_raw(const FittedModel& fitted, const std::vector<Matrix>& views,
                       const std::optional<Matrix>& covariates) {
  std::vector<Matrix> blocks(1);
  for (int v = 0; v < fitted.num_views; ++v)
    blocks.push_back(fitted.standardization.transform(v + 1, views.at(static_cast<std::size_t>(v)), fitted.num_views));
  if (fitted.has_covariates) {
    if (!covariates) throw ValidationError("model was fit with covariates; none supplied");
    blocks.push_back(fitted.standardization.transform(fitted.num_views + 1, *covariates, fitted.num_views));
  }
  return bma_predict(fitted, blocks);
}

PredictorModel make_predictor(const FittedModel& fitted, const ViewSet& data) {
  PredictorModel m;
  m.standardization = fitted.standardization;
  for (int v = 0; v < data.num_views(); ++v) m.view_names.push_back(data.block_name(v + 1));
  m.feature_names = data.feature_names;
  m.covariate_names = data.covariate_names;
  m.alpha0_hat = fitted.summary.alpha0_hat;
  m.coef = bma_coefficients(fitted);
  return m;
}

Vector PredictorModel::predict(const std::vector<Matrix>& views,
                               const std::optional<Matrix>& covariates) const {
  const int M = static_cast<int>(view_names.size());
  if (static_cast<int>(views.size()) != M)
    throw ValidationError("expected " + std::to_string(M) + " views, got " + std::to_string(views.size()));
  const Index m = views.front().rows();
  Vector y = Vector::Constant(m, standardization.outcome_mean + alpha0_hat);
  for (int v = 0; v < M; ++v) {
    const auto vi = static_cast<std::size_t>(v);
    if (views[vi].cols() != coef[vi + 1].size())
      throw ValidationError("view '" + view_names[vi] + "' has " + std::to_string(views[vi].cols()) +
                            " columns, model expects " + std::to_string(coef[vi + 1].size()));
    y.noalias() += standardization.transform(v + 1, views[vi], M) * coef[vi + 1];
  }
  if (coef.size() > static_cast<std::size_t>(M) + 1) {
    if (!covariates) throw ValidationError("model was fit with covariates; none supplied");
    y.noalias() += standardization.transform(M + 1, *covariates, M) * coef.back();
  }
  return y;
}

namespace {

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

Vector from_std(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

}  // namespace

nlohmann::json to_json(const PredictorModel& m) {
  nlohmann::json j;
  j["view_names"] = m.view_names;
  j["feature_names"] = m.feature_names;
  j["covariate_names"] = m.covariate_names;
  j["alpha0_hat"] = m.alpha0_hat;
  j["outcome_mean"] = m.standardization.outcome_mean;
  auto& views = j["views"];
  for (std::size_t v = 0; v < m.view_names.size(); ++v)
    views.push_back({{"mean", to_std(m.standardization.view_mean[v])},
                     {"sd", to_std(m.standardization.view_sd[v])},
                     {"coef", to_std(m.coef[v + 1])}});
  if (m.coef.size() > m.view_names.size() + 1)
    j["covariates"] = {{"mean", to_std(m.standardization.covariate_mean)},
                       {"sd", to_std(m.standardization.covariate_sd)},
                       {"coef", to_std(m.coef.back())}};
  return j;
}

PredictorModel predictor_from_json(const nlohmann::json& j) {
  try {
    PredictorModel m;
    m.view_names = j.at("view_names").get<std::vector<std::string>>();
    m.feature_names = j.at("feature_names").get<std::vector<std::vector<std::string>>>();
    m.covariate_names = j.at("covariate_names").get<std::vector<std::string>>();
    m.alpha0_hat = j.at("alpha0_hat").get<double>();
    m.standardization.outcome_mean = j.at("outcome_mean").get<double>();
    m.coef.emplace_back();
    for (const auto& v : j.at("views")) {
      m.standardization.view_mean.push_back(from_std(v.at("mean").get<std::vector<double>>()));
      m.standardization.view_sd.push_back(from_std(v.at("sd").get<std::vector<double>>()));
      m.coef.push_back(from_std(v.at("coef").get<std::vector<double>>()));
    }
    if (j.contains("covariates")) {
      const auto& c = j.at("covariates");
      m.standardization.covariate_mean = from_std(c.at("mean").get<std::vector<double>>());
      m.standardization.covariate_sd = from_std(c.at("sd").get<std::vector<double>>());
      m.coef.push_back(from_std(c.at("coef").get<std::vector<double>>()));
    }
    if (m.view_names.empty() || m.view_names.size() + 1 > m.coef.size())
      throw ValidationError("model file has no views");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed model file: ") + e.what());
  }
}

}  // namespace bip
