#include "clr/cli.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "clr/errors.hpp"
#include "clr/gradcheck.hpp"
#include "clr/inference.hpp"
#include "clr/io.hpp"
#include "clr/optimizer.hpp"
#include "clr/select.hpp"
#include "clr/simulate.hpp"

namespace clr {

namespace {

using json = nlohmann::ordered_json;

json to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json to_json(const Eigen::MatrixXd& M) {
  json out = json::array();
  for (Index i = 0; i < M.rows(); ++i) out.push_back(to_json(Eigen::VectorXd(M.row(i).transpose())));
  return out;
}

// Two paths naming the same file, so an output would clobber an input.
bool same_file(const std::string& a, const std::string& b) {
  if (a.empty() || b.empty()) return false;
  std::error_code ec;
  if (std::filesystem::equivalent(a, b, ec)) return true;
  return std::filesystem::weakly_canonical(a, ec) ==
         std::filesystem::weakly_canonical(b, ec);
}

void refuse_overwrite(const std::string& out,
                      std::initializer_list<std::string> inputs) {
  for (const auto& in : inputs)
    if (same_file(out, in))
      throw MalformedInput("output path " + out + " equals input path " + in);
}

struct FitFlags {
  std::string foreground, background, response_col = "r", out;
  Index d = 1;
  double alpha = 1.0, tol = 1e-4;
  int max_iter = 5000, restarts = 3;
  std::string mode = "line-search";
  std::uint64_t seed = 0;
};

void add_fit_options(CLI::App* cmd, FitFlags& f) {
  cmd->add_option("--foreground", f.foreground, "Foreground CSV")->required();
  cmd->add_option("--background", f.background,
                  "Background CSV (a zero-byte file means no background)")
      ->required();
  cmd->add_option("--response-col", f.response_col, "Response column name")
      ->capture_default_str();
  cmd->add_option("--alpha", f.alpha, "Background weight")->capture_default_str();
  cmd->add_option("--tol", f.tol, "Relative log-likelihood tolerance")
      ->capture_default_str();
  cmd->add_option("--max-iter", f.max_iter, "Iterations per restart")
      ->capture_default_str();
  cmd->add_option("--mode", f.mode, "Ascent rule")
      ->check(CLI::IsMember({"line-search", "adam"}))
      ->capture_default_str();
  cmd->add_option("--restarts", f.restarts, "Additional random restarts")
      ->capture_default_str();
  cmd->add_option("--seed", f.seed, "Random seed")->capture_default_str();
}

FitConfig fit_config(const FitFlags& f) {
  FitConfig cfg;
  cfg.d = f.d;
  cfg.alpha = f.alpha;
  cfg.tol = f.tol;
  cfg.max_iter = f.max_iter;
  cfg.mode = f.mode == "adam" ? AscentMode::kAdaptiveMoment : AscentMode::kLineSearch;
  cfg.restarts = f.restarts;
  cfg.seed = f.seed;
  return cfg;
}

int cmd_fit(const FitFlags& f, std::ostream& out) {
  refuse_overwrite(f.out, {f.foreground, f.background});
  const Dataset<double> data =
      io::read_dataset(f.foreground, f.background, f.response_col);
  const FitResult result = fit(data, fit_config(f));
  io::write_model(f.out, io::ModelFile::from_fit(result, data.feature_names));

  json report;
  report["final_ll"] = result.final_ll;
  report["iterations"] = result.iterations;
  report["converged"] = result.converged;
  report["wall_time_seconds"] = result.wall_time_seconds;
  report["best_restart"] = result.best_restart;
  report["total_iterations"] = result.total_iterations;
  report["grad_inf_norm"] = result.grad_inf_norm;
  try {
    report["train_r2"] = r_squared(predict_responses(result, data.X), data.r);
  } catch (const Error&) {
    report["train_r2"] = nullptr;
  }
  json restarts = json::array();
  for (const auto& r : result.restarts)
    restarts.push_back({{"final_ll", r.final_ll},
                        {"iterations", r.iterations},
                        {"converged", r.converged}});
  report["restarts"] = std::move(restarts);
  report["n"] = data.n();
  report["m"] = data.m();
  report["p"] = data.p();
  report["d"] = f.d;
  report["alpha"] = f.alpha;
  report["seed"] = f.seed;
  report["model"] = f.out;
  out << report.dump(2) << "\n";
  return kExitOk;
}

// Query matrix for a model: by stored feature names when the input carries
// them all, otherwise every column in file order.
Eigen::MatrixXd query_matrix(const io::Table& table, const io::ModelFile& model) {
  const Index p = model.params.p();
  if (!model.feature_names.empty()) {
    std::vector<Index> cols;
    for (const auto& name : model.feature_names) {
      const auto it = std::find(table.header.begin(), table.header.end(), name);
      if (it == table.header.end()) break;
      cols.push_back(static_cast<Index>(it - table.header.begin()));
    }
    if (static_cast<Index>(cols.size()) == p) {
      Eigen::MatrixXd X(table.values.rows(), p);
      for (Index j = 0; j < p; ++j) X.col(j) = table.values.col(cols[j]);
      return X;
    }
  }
  if (table.values.cols() != p)
    throw ShapeMismatch("model has p = " + std::to_string(p) +
                        " but the input has " +
                        std::to_string(table.values.cols()) + " columns");
  return table.values;
}

int cmd_predict(const std::string& model_path, const std::string& input,
                const std::string& out_path) {
  refuse_overwrite(out_path, {model_path, input});
  const io::ModelFile model = io::read_model(model_path);
  const io::Table table = io::read_csv(input);
  const Eigen::MatrixXd X = query_matrix(table, model);
  const Workspace<double> ws = build_workspace(model.params);
  const Eigen::MatrixXd Xc = X.rowwise() - model.center_x.transpose();
  Eigen::MatrixXd rows(X.rows(), 3);
  for (Index i = 0; i < X.rows(); ++i) {
    const PredictiveDist<double> pd = predict(ws, Xc.row(i).transpose());
    rows(i, 0) = static_cast<double>(i);
    rows(i, 1) = pd.mean + model.center_r;
    rows(i, 2) = pd.variance;
  }
  io::write_csv(out_path, {"row", "mean", "variance"}, rows);
  return kExitOk;
}

json cv_to_json(const CVReport& rep) {
  json j;
  j["d_grid"] = rep.d_grid;
  j["k"] = rep.k;
  j["seed"] = rep.seed;
  j["best_d"] = rep.best_d;
  j["selection_valid"] = rep.selection_valid;
  j["mean_train_r2"] = to_json(rep.mean_train_r2);
  j["mean_test_r2"] = to_json(rep.mean_test_r2);
  j["pooled_test_r2"] = to_json(rep.pooled_test_r2);
  j["train_r2"] = to_json(rep.train_r2);
  j["test_r2"] = to_json(rep.test_r2);
  j["errors"] = rep.errors;
  j["fold_of"] = rep.fold_of;
  return j;
}

int cmd_cv(const FitFlags& f, const std::vector<Index>& d_grid, int k,
           const std::string& csv_path, std::ostream& out) {
  refuse_overwrite(f.out, {f.foreground, f.background});
  refuse_overwrite(csv_path, {f.foreground, f.background});
  const Dataset<double> data =
      io::read_dataset(f.foreground, f.background, f.response_col);
  const CVReport rep = cross_validate(data, d_grid, k, fit_config(f));
  const std::string text = cv_to_json(rep).dump(2) + "\n";
  if (f.out.empty())
    out << text;
  else
    io::write_text(f.out, text);
  if (!csv_path.empty()) {
    Eigen::MatrixXd tidy(static_cast<Index>(d_grid.size()) * k, 4);
    Index row = 0;
    for (std::size_t di = 0; di < d_grid.size(); ++di)
      for (int fold = 0; fold < k; ++fold, ++row)
        tidy.row(row) << static_cast<double>(d_grid[di]), fold,
            rep.train_r2(di, fold), rep.test_r2(di, fold);
    io::write_csv(csv_path, {"d", "fold", "train_r2", "test_r2"}, tidy);
  }
  return kExitOk;
}

struct SimFlags {
  Index n = 200, m = 200, p = 2, d = 1, image_side = 28;
  std::uint64_t seed = 0;
  std::string out_prefix, truth;
  bool lines = false;
  std::optional<double> sigma2, tau2;  // override the truth's variances
};

int cmd_simulate(const SimFlags& f, std::ostream& out) {
  const std::string fg = f.out_prefix + "_foreground.csv";
  const std::string bg = f.out_prefix + "_background.csv";
  if (f.n < 0 || f.m < 0) throw InvalidParams("sample sizes must be nonnegative");
  json report;
  if (f.lines) {
    LinesConfig cfg;
    cfg.image_side = f.image_side;
    cfg.n_fg = f.n;
    cfg.n_bg = f.m;
    cfg.seed = f.seed;
    io::write_dataset(generate_lines(cfg), fg, bg);
    report["line_column"] = cfg.column();
    report["p"] = f.image_side * f.image_side;
  } else {
    GenConfig cfg;
    cfg.n = f.n;
    cfg.m = f.m;
    cfg.p = f.p;
    cfg.d = f.d;
    cfg.seed = f.seed;
    cfg.sigma2 = f.sigma2.value_or(cfg.sigma2);
    cfg.tau2 = f.tau2.value_or(cfg.tau2);
    if (!f.truth.empty()) {
      cfg.truth = io::read_model(f.truth).params;
      cfg.p = cfg.truth->p();
      cfg.d = cfg.truth->d();
      if (f.sigma2) cfg.truth->sigma2 = *f.sigma2;
      if (f.tau2) cfg.truth->tau2 = *f.tau2;
    }
    const SimulatedData sim = generate(cfg);
    io::write_dataset(sim.data, fg, bg);
    io::ModelFile truth = io::ModelFile::from_params(sim.truth, sim.data.feature_names);
    truth.seed = f.seed;
    const std::string truth_path = f.out_prefix + "_truth.json";
    io::write_model(truth_path, truth);
    report["truth"] = truth_path;
    report["p"] = cfg.p;
  }
  report["foreground"] = fg;
  report["background"] = bg;
  out << report.dump(2) << "\n";
  return kExitOk;
}

int cmd_gradcheck(const GradCheckConfig& cfg, std::ostream& out,
                  std::ostream& err) {
  if (cfg.trials < 1) throw InvalidParams("--trials must be at least 1");
  if (cfg.p < 1 || cfg.d < 1 || cfg.d > cfg.p || cfg.n < 0 || cfg.m < 0)
    throw InvalidParams("need 1 <= d <= p and n, m >= 0");
  if (!(cfg.step > 0) || cfg.rtol < 0 || cfg.atol < 0 || cfg.alpha < 0)
    throw InvalidParams("step must be positive; rtol, atol, alpha nonnegative");
  const GradCheckReport rep = run_gradcheck(cfg);
  for (const auto& b : rep.summary.blocks)
    out << b.name << " worst_rel=" << io::format_double(b.worst_rel)
        << " worst_abs=" << io::format_double(b.worst_abs)
        << " max_abs_grad=" << io::format_double(b.max_magnitude)
        << (b.ok ? " ok" : " MISMATCH") << "\n";
  if (rep.passed()) {
    out << "gradcheck passed: " << cfg.trials << " instances\n";
    return kExitOk;
  }
  err << "gradient mismatch; offending instance seeds:";
  for (auto s : rep.failing_seeds) err << " " << s;
  err << "\n";
  return kExitGradient;
}

int cmd_rank(const std::string& model_path, const std::string& out_path,
             bool literal) {
  refuse_overwrite(out_path, {model_path});
  const io::ModelFile model = io::read_model(model_path);
  const FeatureRanking ranking =
      rank_features(model.params, model.feature_names,
                    literal ? RankRotation::kLiteral : RankRotation::kCanonical);
  std::string text = "rank,feature,score\n";
  for (std::size_t k = 0; k < ranking.order.size(); ++k) {
    const Index j = ranking.order[k];
    text += std::to_string(k + 1) + ",";
    text += ranking.names.empty() ? std::to_string(j)
                                  : ranking.names[static_cast<std::size_t>(j)];
    text += "," + io::format_double(ranking.scores(j)) + "\n";
  }
  io::write_text(out_path, text);
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Contrastive linear regression: fit, predict, select, simulate"};
  app.require_subcommand(1);
  std::function<int()> action;

  FitFlags fit_flags;
  auto* fit_cmd = app.add_subcommand("fit", "Maximum-likelihood fit");
  add_fit_options(fit_cmd, fit_flags);
  fit_cmd->add_option("-d", fit_flags.d, "Latent dimension")->required();
  fit_cmd->add_option("--out", fit_flags.out, "Model JSON to write")->required();
  fit_cmd->callback([&] { action = [&] { return cmd_fit(fit_flags, out); }; });

  std::string model_path, input_path, out_path;
  auto* predict_cmd = app.add_subcommand("predict", "Predictive mean and variance");
  predict_cmd->add_option("--model", model_path, "Model JSON")->required();
  predict_cmd->add_option("--input", input_path, "Feature CSV")->required();
  predict_cmd->add_option("--out", out_path, "Predictions CSV")->required();
  predict_cmd->callback([&] {
    action = [&] { return cmd_predict(model_path, input_path, out_path); };
  });

  FitFlags cv_flags;
  std::vector<Index> d_grid;
  int k = 10;
  std::string cv_csv;
  auto* cv_cmd = app.add_subcommand("cv", "k-fold selection of the latent dimension");
  add_fit_options(cv_cmd, cv_flags);
  cv_cmd->add_option("--d-grid", d_grid, "Comma-separated latent dimensions")
      ->required()
      ->delimiter(',');
  cv_cmd->add_option("--k", k, "Number of folds")->capture_default_str();
  cv_cmd->add_option("--out", cv_flags.out, "Report JSON (default: stdout)");
  cv_cmd->add_option("--csv", cv_csv, "Tidy per-cell CSV");
  cv_cmd->callback([&] {
    action = [&] { return cmd_cv(cv_flags, d_grid, k, cv_csv, out); };
  });

  SimFlags sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Draw a synthetic dataset");
  sim_cmd->add_option("--n", sim.n, "Foreground samples")->capture_default_str();
  sim_cmd->add_option("--m", sim.m, "Background samples")->capture_default_str();
  sim_cmd->add_option("--p", sim.p, "Features")->capture_default_str();
  sim_cmd->add_option("-d,--d", sim.d, "Latent dimension")->capture_default_str();
  sim_cmd->add_option("--seed", sim.seed, "Random seed")->capture_default_str();
  sim_cmd->add_option("--sigma2", sim.sigma2, "Feature noise variance [0.25]");
  sim_cmd->add_option("--tau2", sim.tau2, "Response noise variance [0.25]");
  sim_cmd->add_option("--truth", sim.truth, "Model JSON with fixed parameters");
  sim_cmd->add_option("--out-prefix", sim.out_prefix, "Output path prefix")
      ->required();
  sim_cmd->add_flag("--lines", sim.lines, "Line-image analog instead of the model");
  sim_cmd->add_option("--image-side", sim.image_side, "Image side for --lines")
      ->capture_default_str();
  sim_cmd->callback([&] { action = [&] { return cmd_simulate(sim, out); }; });

  GradCheckConfig gc;
  auto* gc_cmd = app.add_subcommand("gradcheck",
                                    "Analytic gradient against finite differences");
  gc_cmd->add_option("--p", gc.p)->capture_default_str();
  gc_cmd->add_option("-d,--d", gc.d)->capture_default_str();
  gc_cmd->add_option("--n", gc.n)->capture_default_str();
  gc_cmd->add_option("--m", gc.m)->capture_default_str();
  gc_cmd->add_option("--trials", gc.trials)->capture_default_str();
  gc_cmd->add_option("--seed", gc.seed)->capture_default_str();
  gc_cmd->add_option("--step", gc.step)->capture_default_str();
  gc_cmd->add_option("--rtol", gc.rtol)->capture_default_str();
  gc_cmd->add_option("--atol", gc.atol, "Values this close to zero always pass")
      ->capture_default_str();
  gc_cmd->add_option("--alpha", gc.alpha)->capture_default_str();
  gc_cmd->callback([&] { action = [&] { return cmd_gradcheck(gc, out, err); }; });

  std::string rank_model, rank_out;
  bool literal = false;
  auto* rank_cmd = app.add_subcommand("rank", "Rank features by response-linked loading");
  rank_cmd->add_option("--model", rank_model, "Model JSON")->required();
  rank_cmd->add_option("--out", rank_out, "Ranking CSV")->required();
  rank_cmd->add_flag("--no-canonical-rotation", literal,
                     "Use the W column with the largest |beta_k|");
  rank_cmd->callback([&] {
    action = [&] { return cmd_rank(rank_model, rank_out, literal); };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitMalformed;
  }

  try {
    return action();
  } catch (const ShapeMismatch& e) {
    err << "shape mismatch: " << e.what() << "\n";
    return kExitShape;
  } catch (const NonFiniteObjective& e) {
    err << "optimization failed: " << e.what() << "\n";
    return kExitOptimization;
  } catch (const FactorizationError& e) {
    err << "optimization failed: " << e.what() << "\n";
    return kExitOptimization;
  } catch (const RankDeficiencyError& e) {
    err << "optimization failed: " << e.what() << "\n";
    return kExitOptimization;
  } catch (const ZeroBeta& e) {
    err << "zero beta: " << e.what() << "\n";
    return kExitOptimization;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitMalformed;
  }
}

}  // namespace clr
