// bip: fit, predict, simulate and evaluate from the command line.

#include "bip/error.hpp"
#include "bip/exec.hpp"
#include "bip/io.hpp"
#include "bip/metrics.hpp"
#include "bip/predict.hpp"
#include "bip/sampler.hpp"
#include "bip/simgen.hpp"
#include "bip/standardize.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <filesystem>
#include <iostream>
#include <map>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNumeric = 3;

struct FitArgs {
  std::vector<std::string> views;
  std::vector<std::string> groups;
  std::string outcome;
  std::string covariates;
  std::string out = "fit_out";
  bip::Hyperparameters hp;
  bool center_outcome = true;
  std::string mode_variant = "scaled";
  std::string loading_precision = "conjugate";
};

struct PredictArgs {
  std::string model;
  std::vector<std::string> views;
  std::string covariates;
  std::string outcome;
  std::string out;
};

struct SimulateArgs {
  bip::ScenarioSpec spec;
  std::string out = "sim_out";
};

struct EvaluateArgs {
  std::string model;
  std::string truth;
  std::string test;
  std::string out;
};

std::vector<std::string> component_names(int r) {
  std::vector<std::string> out;
  for (int l = 1; l <= r; ++l) out.push_back("comp" + std::to_string(l));
  return out;
}

void require_same_ids(const std::vector<std::string>& ref, const bip::io::LabeledMatrix& m,
                      const std::string& what) {
  if (m.row_ids != ref) throw bip::ValidationError(what + ": sample ids differ from the first view");
}

std::string stem(const std::string& path) { return fs::path(path).stem().string(); }

void add_hyperparameters(CLI::App* app, bip::Hyperparameters& hp) {
  app->add_option("--r", hp.r, "maximum number of components")->capture_default_str();
  app->add_option("--q_eta", hp.q_eta, "prior feature inclusion probability")->capture_default_str();
  app->add_option("--a", hp.a)->capture_default_str();
  app->add_option("--b", hp.b)->capture_default_str();
  app->add_option("--a0", hp.a0)->capture_default_str();
  app->add_option("--b0", hp.b0)->capture_default_str();
  app->add_option("--alpha", hp.alpha)->capture_default_str();
  app->add_option("--alpha_b", hp.alpha_b)->capture_default_str();
  app->add_option("--beta_b", hp.beta_b)->capture_default_str();
  app->add_option("--alpha0_shape", hp.alpha0_shape)->capture_default_str();
  app->add_option("--n_iter", hp.n_iter)->capture_default_str();
  app->add_option("--burn_in", hp.burn_in)->capture_default_str();
  app->add_option("--thin", hp.thin)->capture_default_str();
  app->add_option("--seed", hp.seed)->capture_default_str();
  app->add_option("--n_chains", hp.n_chains)->capture_default_str();
}

json hyperparameters_json(const bip::Hyperparameters& hp) {
  return {{"r", hp.r},           {"q_eta", hp.q_eta},     {"a", hp.a},
          {"b", hp.b},           {"a0", hp.a0},           {"b0", hp.b0},
          {"alpha", hp.alpha},   {"alpha_b", hp.alpha_b}, {"beta_b", hp.beta_b},
          {"alpha0_shape", hp.alpha0_shape},              {"n_iter", hp.n_iter},
          {"burn_in", hp.burn_in}, {"thin", hp.thin},     {"seed", hp.seed},
          {"n_chains", hp.n_chains}};
}

void write_json(const fs::path& path, const json& j) { bip::io::write_atomic(path, j.dump(2) + "\n"); }

int cmd_fit(const FitArgs& args) {
  const auto t0 = std::chrono::steady_clock::now();
  if (args.views.empty()) throw bip::ValidationError("at least one --view is required");
  if (!args.groups.empty() && args.groups.size() != args.views.size())
    throw bip::ValidationError("--groups needs one entry per view ('none' to skip a view)");
  args.hp.validate();
  bip::SamplerOptions opts;
  if (args.loading_precision == "identity") opts.loading_precision = bip::LoadingPrecision::identity;
  else if (args.loading_precision != "conjugate") throw bip::ValidationError("loading_precision must be conjugate or identity");
  bip::ModeVariant variant = bip::ModeVariant::scaled;
  if (args.mode_variant == "ridge") variant = bip::ModeVariant::ridge;
  else if (args.mode_variant != "scaled") throw bip::ValidationError("posterior_mode_variant must be scaled or ridge");

  bip::ViewSet raw;
  std::vector<std::string> ids;
  for (const auto& path : args.views) {
    auto m = bip::io::read_matrix_csv(path);
    if (ids.empty()) ids = m.row_ids;
    else require_same_ids(ids, m, path);
    raw.views.push_back(std::move(m.values));
    raw.view_names.push_back(stem(path));
    raw.feature_names.push_back(std::move(m.col_names));
  }
  raw.sample_ids = ids;
  {
    auto y = bip::io::read_matrix_csv(args.outcome);
    require_same_ids(ids, y, args.outcome);
    if (y.values.cols() != 1) throw bip::ValidationError(args.outcome + ": outcome file needs exactly one column");
    raw.outcome = y.values.col(0);
  }
  if (!args.covariates.empty()) {
    auto c = bip::io::read_matrix_csv(args.covariates);
    require_same_ids(ids, c, args.covariates);
    raw.covariates = std::move(c.values);
    raw.covariate_names = std::move(c.col_names);
  }
  bip::GroupDesign design;
  for (std::size_t v = 0; v < args.groups.size(); ++v) {
    if (args.groups[v] == "none" || args.groups[v].empty()) design.views.emplace_back();
    else design.views.emplace_back(bip::io::read_groups_csv(args.groups[v], raw.feature_names[v]));
  }

  const bip::Standardized st = bip::validate_and_standardize(raw, args.center_outcome);
  const bip::ChainResult res = bip::run_chain(st.data, design, args.hp, opts);
  const bip::FittedModel fitted = bip::make_fitted_model(res.summary, st.data, st.record, args.hp, variant);
  const bip::PosteriorSummary& s = fitted.summary;

  const fs::path out(args.out);
  fs::create_directories(out);
  const int r = args.hp.r;
  const auto comps = component_names(r);
  const int B = st.data.num_blocks();
  std::vector<std::string> block_names;
  for (int b = 0; b < B; ++b) block_names.push_back(st.data.block_name(b));

  bip::Matrix gamma(B, r);
  for (int b = 0; b < B; ++b) gamma.row(b) = s.mpp_gamma[static_cast<std::size_t>(b)].transpose();
  bip::io::write_atomic(out / "mpp_gamma.csv", bip::io::matrix_csv(gamma, block_names, comps, "block"));
  for (int b = 0; b < B; ++b) {
    const auto bi = static_cast<std::size_t>(b);
    const std::string name = block_names[bi];
    std::vector<std::string> features{"y"};
    if (b >= 1 && b <= st.data.num_views()) features = st.data.feature_names[bi - 1];
    else if (b > st.data.num_views()) features = st.data.covariate_names;
    if (b >= 1) {
      bip::io::write_atomic(out / ("mpp_eta_" + name + ".csv"),
                            bip::io::matrix_csv(s.mpp_eta[bi].transpose(), features, comps, "feature"));
    }
    bip::io::write_atomic(out / ("loadings_" + name + ".csv"),
                          bip::io::matrix_csv(s.A_mode[bi].transpose(), features, comps, "feature"));
    if (const bip::ViewGroups* g = design.for_block(b, st.data.num_views())) {
      bip::io::write_atomic(out / ("mpp_group_" + name + ".csv"),
                            bip::io::matrix_csv(s.mpp_group[bi].transpose(), g->names, comps, "group"));
    }
  }
  bip::io::write_atomic(out / "u_scores.csv", bip::io::matrix_csv(s.U_bar, ids, comps, "sample"));
  write_json(out / "model.json", bip::to_json(bip::make_predictor(fitted, st.data)));

  json acc = json::object();
  for (int b = 0; b < B; ++b) {
    double ag = 0, pg = 0, ar = 0, pr = 0;
    for (const auto& d : res.trace) {
      ag += d.accept_gamma[static_cast<std::size_t>(b)];
      pg += d.propose_gamma[static_cast<std::size_t>(b)];
      ar += d.accept_group[static_cast<std::size_t>(b)];
      pr += d.propose_group[static_cast<std::size_t>(b)];
    }
    json e = {{"gamma_eta", pg > 0 ? ag / pg : 0.0}};
    if (pr > 0) e["group"] = ar / pr;
    acc[block_names[static_cast<std::size_t>(b)]] = e;
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  json fit = {{"hyperparameters", hyperparameters_json(args.hp)},
              {"seed", args.hp.seed},
              {"mode", design.present() ? "BIPnet" : "BIP"},
              {"posterior_mode_variant", args.mode_variant},
              {"loading_precision", args.loading_precision},
              {"center_outcome", args.center_outcome},
              {"retained_draws", s.draws.size()},
              {"distinct_models", fitted.configs.size()},
              {"alpha0_hat", s.alpha0_hat},
              {"acceptance_rates", acc},
              {"threads", bip::max_threads()},
              {"wall_time_seconds", wall}};
  write_json(out / "fit.json", fit);
  std::cout << "fit: " << s.draws.size() << " retained draws, " << wall << " s, results in " << out.string() << "\n";
  return 0;
}

std::pair<std::vector<bip::Matrix>, std::vector<std::string>> read_new_views(
    const std::vector<std::string>& paths, const bip::PredictorModel& model) {
  if (paths.size() != model.view_names.size())
    throw bip::ValidationError("model has " + std::to_string(model.view_names.size()) + " views, got " +
                               std::to_string(paths.size()));
  std::vector<bip::Matrix> views;
  std::vector<std::string> ids;
  for (std::size_t v = 0; v < paths.size(); ++v) {
    auto m = bip::io::read_matrix_csv(paths[v]);
    if (ids.empty()) ids = m.row_ids;
    else require_same_ids(ids, m, paths[v]);
    if (v < model.feature_names.size() && m.col_names != model.feature_names[v])
      throw bip::ValidationError("view '" + model.view_names[v] + "' (" + paths[v] +
                                 "): columns do not match the training features");
    views.push_back(std::move(m.values));
  }
  return {std::move(views), std::move(ids)};
}

int cmd_predict(const PredictArgs& args) {
  const bip::PredictorModel model =
      bip::predictor_from_json(json::parse(bip::io::read_text(fs::path(args.model) / "model.json")));
  auto [views, ids] = read_new_views(args.views, model);
  std::optional<bip::Matrix> cov;
  if (!args.covariates.empty()) cov = bip::io::read_matrix_csv(args.covariates).values;
  const bip::Vector yhat = model.predict(views, cov);
  const fs::path out = args.out.empty() ? fs::path(args.model) / "predictions.csv" : fs::path(args.out);
  bip::io::write_atomic(out, bip::io::matrix_csv(yhat, ids, {"y_hat"}, "sample_id"));
  if (!args.outcome.empty()) {
    const auto y = bip::io::read_matrix_csv(args.outcome);
    std::cout << "test MSE: " << bip::io::format_double(bip::mse(yhat, y.values.col(0))) << "\n";
  }
  return 0;
}

void write_dataset(const fs::path& dir, const bip::ViewSet& d, const bip::GroupDesign* groups) {
  fs::create_directories(dir);
  for (int v = 0; v < d.num_views(); ++v) {
    const auto vi = static_cast<std::size_t>(v);
    bip::io::write_atomic(dir / (d.view_names[vi] + ".csv"),
                          bip::io::matrix_csv(d.views[vi], d.sample_ids, d.feature_names[vi]));
    if (groups)
      bip::io::write_atomic(dir / ("groups_" + d.view_names[vi] + ".csv"),
                            bip::io::groups_csv(*groups->views[vi], d.feature_names[vi]));
  }
  bip::io::write_atomic(dir / "y.csv", bip::io::matrix_csv(d.outcome, d.sample_ids, {"y"}));
}

int cmd_simulate(const SimulateArgs& args) {
  const bip::SimulatedData sim = bip::simulate(args.spec);
  const fs::path out(args.out);
  write_dataset(out, sim.train, &sim.groups);
  write_dataset(out / "test", sim.test, nullptr);
  json truth = {{"scenario", args.spec.scenario},
                {"setting", args.spec.setting},
                {"overlap", args.spec.overlap},
                {"seed", args.spec.seed},
                {"iid_noise", args.spec.iid_noise},
                {"a", std::vector<double>(sim.truth.a.data(), sim.truth.a.data() + sim.truth.a.size())}};
  for (std::size_t v = 0; v < sim.truth.A.size(); ++v) {
    const auto& names = sim.train.feature_names[v];
    std::vector<std::string> sig;
    for (bip::Index j : sim.truth.signal[v]) sig.push_back(names[static_cast<std::size_t>(j)]);
    const auto& g = *sim.groups.views[v];
    json groups = json::object();
    for (std::size_t k = 0; k < g.names.size(); ++k) groups[g.names[k]] = static_cast<bool>(sim.truth.group_is_signal[v][k]);
    truth["views"][sim.train.view_names[v]] = {{"signal", sig},
                                               {"signal_index", sim.truth.signal[v]},
                                               {"group_is_signal", groups}};
  }
  write_json(out / "truth.json", truth);
  std::cout << "simulate: wrote " << out.string() << "\n";
  return 0;
}

int cmd_evaluate(const EvaluateArgs& args) {
  const fs::path model_dir(args.model);
  const json truth = json::parse(bip::io::read_text(args.truth));
  const bip::PredictorModel model = bip::predictor_from_json(json::parse(bip::io::read_text(model_dir / "model.json")));
  json report = json::object();
  for (std::size_t v = 0; v < model.view_names.size(); ++v) {
    const std::string& name = model.view_names[v];
    if (!truth.at("views").contains(name)) throw bip::ValidationError("truth has no view '" + name + "'");
    const json& tv = truth["views"][name];
    const auto eta = bip::io::read_matrix_csv(model_dir / ("mpp_eta_" + name + ".csv"));
    std::map<std::string, bip::Index> index;
    for (std::size_t j = 0; j < eta.row_ids.size(); ++j) index[eta.row_ids[j]] = static_cast<bip::Index>(j);
    std::vector<bip::Index> signal;
    for (const auto& f : tv.at("signal")) {
      auto it = index.find(f.get<std::string>());
      if (it == index.end()) throw bip::ValidationError("truth feature '" + f.get<std::string>() + "' not in the model");
      signal.push_back(it->second);
    }
    const auto sel = bip::select_features(eta.values.transpose());
    const auto rep = bip::selection_scores(sel, signal);
    json e = {{"fnr", rep.fnr}, {"fpr", rep.fpr}, {"f_measure", rep.f_measure}, {"selected", rep.selected.size()}};
    const fs::path gpath = model_dir / ("mpp_group_" + name + ".csv");
    if (fs::exists(gpath)) {
      const auto grp = bip::io::read_matrix_csv(gpath);
      const auto scores = bip::group_scores(grp.values.transpose());
      std::vector<bool> labels;
      for (const auto& gname : grp.row_ids) labels.push_back(tv.at("group_is_signal").at(gname).get<bool>());
      const bool both = std::find(labels.begin(), labels.end(), true) != labels.end() &&
                        std::find(labels.begin(), labels.end(), false) != labels.end();
      if (both) e["group_auc"] = bip::auc_from_mpp(scores, labels);
    }
    report[name] = e;
  }
  if (!args.test.empty()) {
    const fs::path test(args.test);
    std::vector<std::string> paths;
    for (const auto& name : model.view_names) paths.push_back((test / (name + ".csv")).string());
    auto [views, ids] = read_new_views(paths, model);
    std::optional<bip::Matrix> cov;
    if (fs::exists(test / "covariates.csv")) cov = bip::io::read_matrix_csv(test / "covariates.csv").values;
    const bip::Vector yhat = model.predict(views, cov);
    const auto y = bip::io::read_matrix_csv(test / "y.csv");
    report["mse"] = bip::mse(yhat, y.values.col(0));
  }
  const fs::path out = args.out.empty() ? model_dir / "report.json" : fs::path(args.out);
  write_json(out, report);
  std::cout << report.dump(2) << "\n";
  return 0;
}

// Unsectioned config keys belong to the subcommand being run.
class SubcommandConfig : public CLI::ConfigTOML {
 public:
  explicit SubcommandConfig(const CLI::App* app) : app_(app) {}

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    auto items = CLI::ConfigTOML::from_config(input);
    const auto subs = app_->get_subcommands();
    if (!subs.empty())
      for (auto& item : items)
        if (item.parents.empty()) item.parents = {subs.front()->get_name()};
    return items;
  }

 private:
  const CLI::App* app_;
};

}  // namespace

int main(int argc, char** argv) {
  bip::configure_threads_from_env();
  CLI::App app{"Bayesian integrative factor analysis (BIP / BIPnet)"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key = value file for the subcommand; flags override it");
  app.config_formatter(std::make_shared<SubcommandConfig>(&app));
  app.allow_config_extras(false);

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "fit the model and write posterior summaries");
  fit_cmd->fallthrough();
  fit_cmd->add_option("--view", fit.views, "view matrix CSV (repeat per view)")->required();
  fit_cmd->add_option("--groups", fit.groups, "group CSV per view, 'none' to skip a view");
  fit_cmd->add_option("--outcome", fit.outcome, "outcome CSV")->required();
  fit_cmd->add_option("--covariates", fit.covariates, "clinical covariate CSV");
  fit_cmd->add_option("--out", fit.out, "output directory")->capture_default_str();
  fit_cmd->add_option("--center_outcome", fit.center_outcome)->capture_default_str();
  fit_cmd->add_option("--posterior_mode_variant", fit.mode_variant, "scaled or ridge")->capture_default_str();
  fit_cmd->add_option("--loading_precision", fit.loading_precision, "conjugate or identity")->capture_default_str();
  add_hyperparameters(fit_cmd, fit.hp);

  PredictArgs pred;
  auto* pred_cmd = app.add_subcommand("predict", "predict outcomes for new samples");
  pred_cmd->fallthrough();
  pred_cmd->add_option("--model", pred.model, "fit output directory")->required();
  pred_cmd->add_option("--view", pred.views, "new view CSV, same order as in fit")->required();
  pred_cmd->add_option("--covariates", pred.covariates);
  pred_cmd->add_option("--outcome", pred.outcome, "observed outcome, prints the test MSE");
  pred_cmd->add_option("--out", pred.out, "predictions CSV (default <model>/predictions.csv)");

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "generate a simulation scenario");
  sim_cmd->fallthrough();
  sim_cmd->add_option("--scenario", sim.spec.scenario)->capture_default_str();
  sim_cmd->add_option("--setting", sim.spec.setting)->capture_default_str();
  sim_cmd->add_option("--overlap", sim.spec.overlap)->capture_default_str();
  sim_cmd->add_option("--n", sim.spec.n)->capture_default_str();
  sim_cmd->add_option("--n_test", sim.spec.n_test)->capture_default_str();
  sim_cmd->add_option("--p1", sim.spec.p1)->capture_default_str();
  sim_cmd->add_option("--p2", sim.spec.p2)->capture_default_str();
  sim_cmd->add_option("--seed", sim.spec.seed)->capture_default_str();
  sim_cmd->add_option("--iid_noise", sim.spec.iid_noise)->capture_default_str();
  sim_cmd->add_option("--out", sim.out)->capture_default_str();

  EvaluateArgs ev;
  auto* ev_cmd = app.add_subcommand("evaluate", "score a fit against simulation truth");
  ev_cmd->fallthrough();
  ev_cmd->add_option("--model", ev.model, "fit output directory")->required();
  ev_cmd->add_option("--truth", ev.truth, "truth.json from simulate")->required();
  ev_cmd->add_option("--test", ev.test, "held-out data directory");
  ev_cmd->add_option("--out", ev.out, "report path (default <model>/report.json)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }
  try {
    if (*fit_cmd) return cmd_fit(fit);
    if (*pred_cmd) return cmd_predict(pred);
    if (*sim_cmd) return cmd_simulate(sim);
    if (*ev_cmd) return cmd_evaluate(ev);
  } catch (const bip::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const bip::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
