#include "wavepinn/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "wavepinn/json_io.hpp"
#include "wavepinn/objective.hpp"

namespace wavepinn {

namespace {

using nlohmann::json;

constexpr const char* kConfigKeys[] = {
    "problem",       "activation",      "hidden_layers",  "hidden_width",
    "iterations",    "seed",            "lambda_r",       "lambda_b",
    "lambda_i",      "nx",              "nt",             "ns_points",
    "gabor_omega_init", "coeff_init",   "per_layer_coeffs",
    "output_activation", "iteration_unit", "threads",     "reference_data",
    "output_dir",    "scale",           "rho",            "wave_beta",
    "convection_beta", "lambda1",       "lambda2"};

json config_to_json_obj(const RunConfig& c) {
  json j;
  j["problem"] = c.problem;
  j["activation"] = c.activation;
  j["hidden_layers"] = c.hidden_layers;
  j["hidden_width"] = c.hidden_width;
  j["iterations"] = c.iterations;
  j["seed"] = c.seed;
  j["lambda_r"] = c.lambda_r;
  j["lambda_b"] = c.lambda_b;
  j["lambda_i"] = c.lambda_i;
  j["nx"] = c.nx;
  j["nt"] = c.nt;
  j["ns_points"] = c.ns_points;
  j["gabor_omega_init"] = c.gabor_omega_init;
  j["coeff_init"] = c.coeff_init;
  j["per_layer_coeffs"] = c.per_layer_coeffs;
  j["output_activation"] = c.output_activation;
  j["iteration_unit"] = c.iteration_unit;
  j["threads"] = c.threads;
  j["reference_data"] = c.reference_data;
  j["output_dir"] = c.output_dir;
  j["scale"] = c.scale;
  if (c.rho) j["rho"] = *c.rho;
  if (c.wave_beta) j["wave_beta"] = *c.wave_beta;
  if (c.convection_beta) j["convection_beta"] = *c.convection_beta;
  if (c.lambda1) j["lambda1"] = *c.lambda1;
  if (c.lambda2) j["lambda2"] = *c.lambda2;
  return j;
}

RunConfig config_from_json_obj(const json& j) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (std::find_if(std::begin(kConfigKeys), std::end(kConfigKeys),
                     [&](const char* k) { return key == k; }) ==
        std::end(kConfigKeys))
      throw std::invalid_argument("run config: unknown key `" + key + "`");
  }
  RunConfig c;
  c.problem = j.value("problem", c.problem);
  c.activation = j.value("activation", c.activation);
  c.hidden_layers = j.value("hidden_layers", c.hidden_layers);
  c.hidden_width = j.value("hidden_width", c.hidden_width);
  c.iterations = j.value("iterations", c.iterations);
  c.seed = j.value("seed", c.seed);
  c.lambda_r = j.value("lambda_r", c.lambda_r);
  c.lambda_b = j.value("lambda_b", c.lambda_b);
  c.lambda_i = j.value("lambda_i", c.lambda_i);
  c.nx = j.value("nx", c.nx);
  c.nt = j.value("nt", c.nt);
  c.ns_points = j.value("ns_points", c.ns_points);
  c.gabor_omega_init = j.value("gabor_omega_init", c.gabor_omega_init);
  c.coeff_init = j.value("coeff_init", c.coeff_init);
  c.per_layer_coeffs = j.value("per_layer_coeffs", c.per_layer_coeffs);
  c.output_activation = j.value("output_activation", c.output_activation);
  c.iteration_unit = j.value("iteration_unit", c.iteration_unit);
  c.threads = j.value("threads", c.threads);
  c.reference_data = j.value("reference_data", c.reference_data);
  c.output_dir = j.value("output_dir", c.output_dir);
  c.scale = j.value("scale", c.scale);
  if (j.contains("rho")) c.rho = j.at("rho").get<double>();
  if (j.contains("wave_beta")) c.wave_beta = j.at("wave_beta").get<double>();
  if (j.contains("convection_beta"))
    c.convection_beta = j.at("convection_beta").get<double>();
  if (j.contains("lambda1")) c.lambda1 = j.at("lambda1").get<double>();
  if (j.contains("lambda2")) c.lambda2 = j.at("lambda2").get<double>();
  return c;
}

std::string format_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

ProblemSpec RunConfig::problem_spec() const {
  const auto kind = parse_problem_name(problem);
  if (!kind) throw std::invalid_argument("unknown problem: " + problem);
  ProblemSpec spec = ProblemSpec::make(*kind);
  if (rho) spec.rho = *rho;
  if (wave_beta) spec.wave_beta = *wave_beta;
  if (convection_beta) spec.convection_beta = *convection_beta;
  if (lambda1) spec.lambda1 = *lambda1;
  if (lambda2) spec.lambda2 = *lambda2;
  return spec;
}

MlpConfig RunConfig::mlp_config() const {
  const auto kind = parse_activation_name(activation);
  if (!kind) throw std::invalid_argument("unknown activation: " + activation);
  const ProblemSpec spec = problem_spec();

  MlpConfig mlp;
  mlp.in_dim = spec.in_dim();
  mlp.out_dim = spec.out_dim();
  mlp.hidden_layers = hidden_layers;
  mlp.hidden_width = hidden_width;
  mlp.activation = *kind;
  mlp.gabor_omega_init = gabor_omega_init;
  if (coeff_init == "raw_one")
    mlp.coeff_init = CoeffInit::RawOne;
  else if (coeff_init == "effective_one")
    mlp.coeff_init = CoeffInit::EffectiveOne;
  else
    throw std::invalid_argument("unknown coeff_init: " + coeff_init);
  mlp.per_layer_coeffs = per_layer_coeffs;
  mlp.output_activation = output_activation;
  mlp.seed = seed;
  return mlp;
}

void apply_scale_preset(RunConfig& config, const std::string& scale) {
  if (scale == "paper") {
    config.hidden_width = 512;
    config.iterations = 1000;
    config.nx = config.nt = 101;
  } else if (scale == "desk") {
    config.hidden_width = 64;
    config.iterations = 500;
    config.nx = config.nt = 51;
  } else {
    throw std::invalid_argument("unknown scale preset: " + scale +
                                " (want `paper` or `desk`)");
  }
  config.scale = scale;
}

RunConfig run_config_from_json(const std::string& text) {
  return config_from_json_obj(json::parse(text));
}

RunConfig run_config_from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  json j;
  in >> j;
  return config_from_json_obj(j);
}

std::string run_config_to_json(const RunConfig& config) {
  return config_to_json_obj(config).dump(2);
}

std::string TrainReport::to_json() const {
  json j;
  j["config"] = config_to_json_obj(config);
  j["status"] = status;
  j["loss"] = {{"total", loss.total},
               {"residual_mse", loss.residual_mse},
               {"boundary_mse", loss.boundary_mse},
               {"initial_mse", loss.initial_mse}};
  if (config.problem == "navier-stokes" || config.problem == "navierstokes" ||
      config.problem == "ns")
    j["loss"]["note"] =
        "initial_mse holds the (u, v) data-fit terms; there are no boundary "
        "terms";
  if (eval)
    j["eval"] = {{"rmae", eval->rmae},
                 {"rrmse", eval->rrmse},
                 {"n_points", eval->n_points}};
  json coeffs = json::object();
  for (const auto& c : coefficients)
    coeffs[c.name] = {
        {"raw", c.raw}, {"value", c.value}, {"trainable", c.trainable}};
  j["activation_coefficients"] = coeffs;
  j["optimizer"] = {{"iterations", iterations_run},
                    {"function_evals", function_evals},
                    {"final_grad_norm", final_grad_norm},
                    {"termination", termination}};
  j["wall_s"] = wall_s;
  return j.dump(2);
}

namespace {

const char* coeff_long_name(char c) {
  switch (c) {
    case 'a': return "alpha";
    case 'b': return "beta";
    case 'g': return "gamma";
    case 'w': return "omega";
    case 's': return "sigma";
  }
  return "?";
}

void write_prediction_grid_1d(const std::string& path, const ProblemSpec& spec,
                              const MlpModel& model,
                              const Eigen::MatrixXd& grid,
                              const Eigen::VectorXd& pred,
                              const Eigen::VectorXd& exact) {
  std::ofstream out(path);
  out << "x,t,u_pred,u_exact,abs_err\n";
  for (Eigen::Index i = 0; i < grid.rows(); ++i)
    out << format_g(grid(i, 0)) << ',' << format_g(grid(i, 1)) << ','
        << format_g(pred[i]) << ',' << format_g(exact[i]) << ','
        << format_g(std::abs(pred[i] - exact[i])) << '\n';
  (void)spec;
  (void)model;
}

void write_prediction_grid_ns(const std::string& path,
                              const Eigen::MatrixXd& points,
                              const Eigen::VectorXd& pred,
                              const Eigen::VectorXd& ref) {
  std::ofstream out(path);
  out << "x,y,p_pred,p_ref,abs_err\n";
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    out << format_g(points(i, 0)) << ',' << format_g(points(i, 1)) << ','
        << format_g(pred[i]) << ',' << format_g(ref[i]) << ','
        << format_g(std::abs(pred[i] - ref[i])) << '\n';
}

}  // namespace

TrainReport run_experiment(const RunConfig& config) {
  const auto t0 = std::chrono::steady_clock::now();

  const ProblemSpec spec = config.problem_spec();
  const bool is_ns = spec.kind == ProblemKind::NavierStokes;

  std::optional<ReferenceField> ref;
  CollocationSet colloc;
  if (is_ns) {
    if (config.reference_data.empty())
      throw std::invalid_argument(
          "navier-stokes runs need reference_data (CSV with header "
          "t,x,y,u,v,p)");
    ref = load_reference_csv(config.reference_data);
    colloc = sample_random(spec, config.ns_points, config.seed, *ref);
  } else {
    colloc = sample_uniform(spec, config.nx, config.nt);
  }

  MlpModel model = MlpModel::init(config.mlp_config());
  TrainObjective objective(model, spec, colloc, config.loss_weights(),
                           config.threads);

  LbfgsConfig opt;
  opt.max_iters = config.iterations;
  if (config.iteration_unit == "steps")
    opt.iteration_unit = IterationUnit::AcceptedSteps;
  else if (config.iteration_unit == "evals")
    opt.iteration_unit = IterationUnit::ObjectiveEvals;
  else
    throw std::invalid_argument("unknown iteration_unit: " +
                                config.iteration_unit);

  TrainReport report;
  report.config = config;

  MinimizeResult result;
  bool diverged = false;
  try {
    result = minimize(objective.as_objective(), model.params(), opt);
  } catch (const std::invalid_argument&) {
    diverged = true;
  }
  if (!diverged && !std::isfinite(result.loss)) diverged = true;

  if (!diverged) {
    model.params() = result.theta;
    objective.eval(model.params(), nullptr, &report.loss);
    report.iterations_run = static_cast<int>(result.trace.records.size());
    report.function_evals = result.trace.function_evals;
    report.final_grad_norm = result.grad.norm();
    report.termination = termination_name(result.reason);
  } else {
    report.status = "diverged";
    report.termination = "non_finite_loss";
  }

  for (std::size_t inst = 0; inst < model.activation_layouts().size();
       ++inst) {
    const auto& layout = model.activation_layouts()[inst];
    Eigen::Index slot = model.coeff_offset(inst);
    const std::string prefix =
        model.activation_layouts().size() > 1
            ? "layer" + std::to_string(inst) + "_"
            : "";
    for (const auto& coeff : layout.coeffs) {
      TrainReport::Coefficient c;
      c.name = prefix + coeff_long_name(coeff.name);
      c.raw = coeff.trainable ? model.params()[slot++] : coeff.raw_init;
      c.value = softplus_value(c.raw);
      c.trainable = coeff.trainable;
      report.coefficients.push_back(c);
    }
  }

  // Evaluation against the reference.
  Eigen::MatrixXd grid;
  Eigen::VectorXd pred, exact;
  if (!diverged) {
    if (is_ns) {
      const auto final_rows = ref->final_time_rows();
      grid.resize(static_cast<Eigen::Index>(final_rows.size()), 3);
      exact.resize(grid.rows());
      for (Eigen::Index i = 0; i < grid.rows(); ++i) {
        const Eigen::Index r = final_rows[static_cast<std::size_t>(i)];
        grid(i, 0) = ref->records(r, 1);
        grid(i, 1) = ref->records(r, 2);
        grid(i, 2) = ref->records(r, 0);
        exact[i] = ref->records(r, 5);
      }
      pred = predict(model, grid).col(2);  // pressure output
    } else {
      grid = uniform_grid_points(spec, kEvalGridN, kEvalGridN);
      pred = predict(model, grid).col(0);
      exact.resize(grid.rows());
      for (Eigen::Index i = 0; i < grid.rows(); ++i)
        exact[i] = analytic(spec, grid(i, 0), grid(i, 1));
    }
    report.eval = evaluate_errors(pred, exact);
  }

  report.wall_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();

  if (!config.output_dir.empty()) {
    namespace fs = std::filesystem;
    fs::create_directories(config.output_dir);
    const fs::path dir(config.output_dir);
    {
      std::ofstream out(dir / "report.json");
      out << report.to_json() << '\n';
    }
    {
      std::ofstream out(dir / "loss_history.csv");
      if (!diverged) result.trace.write_csv(out);
      else out << "iter,loss,grad_norm,step,evals\n";
    }
    save_checkpoint(model, (dir / "checkpoint.json").string());
    if (!diverged) {
      if (is_ns)
        write_prediction_grid_ns((dir / "prediction_grid.csv").string(), grid,
                                 pred, exact);
      else
        write_prediction_grid_1d((dir / "prediction_grid.csv").string(), spec,
                                 model, grid, pred, exact);
    }
  }
  return report;
}

EvalResult evaluate_checkpoint(const std::string& checkpoint_path,
                               const RunConfig& config) {
  const ProblemSpec spec = config.problem_spec();
  MlpModel model = load_checkpoint(checkpoint_path);
  if (model.config().in_dim != spec.in_dim() ||
      model.config().out_dim != spec.out_dim())
    throw std::invalid_argument(
        "checkpoint dimensions do not match the problem");

  if (spec.kind == ProblemKind::NavierStokes) {
    if (config.reference_data.empty())
      throw std::invalid_argument(
          "navier-stokes evaluation needs reference_data");
    const ReferenceField ref = load_reference_csv(config.reference_data);
    const auto rows = ref.final_time_rows();
    Eigen::MatrixXd grid(static_cast<Eigen::Index>(rows.size()), 3);
    Eigen::VectorXd exact(grid.rows());
    for (Eigen::Index i = 0; i < grid.rows(); ++i) {
      const Eigen::Index r = rows[static_cast<std::size_t>(i)];
      grid(i, 0) = ref.records(r, 1);
      grid(i, 1) = ref.records(r, 2);
      grid(i, 2) = ref.records(r, 0);
      exact[i] = ref.records(r, 5);
    }
    return evaluate_errors(predict(model, grid).col(2), exact);
  }

  const Eigen::MatrixXd grid = uniform_grid_points(spec, kEvalGridN, kEvalGridN);
  Eigen::VectorXd exact(grid.rows());
  for (Eigen::Index i = 0; i < grid.rows(); ++i)
    exact[i] = analytic(spec, grid(i, 0), grid(i, 1));
  return evaluate_errors(predict(model, grid).col(0), exact);
}

void aggregate(const std::vector<std::string>& run_dirs, std::ostream& out,
               std::ostream& warnings) {
  struct Row {
    std::string problem, activation;
    double loss, rmae, rrmse, wall_s;
  };
  std::vector<Row> rows;
  for (const std::string& dir : run_dirs) {
    const std::string path = dir + "/report.json";
    std::ifstream in(path);
    if (!in) {
      warnings << "aggregate: skipping " << dir << " (no report.json)\n";
      continue;
    }
    try {
      json j;
      in >> j;
      Row row;
      row.problem = j.at("config").at("problem").get<std::string>();
      row.activation = j.at("config").at("activation").get<std::string>();
      row.loss = j.at("loss").at("total").get<double>();
      row.rmae = j.at("eval").at("rmae").get<double>();
      row.rrmse = j.at("eval").at("rrmse").get<double>();
      row.wall_s = j.at("wall_s").get<double>();
      rows.push_back(std::move(row));
    } catch (const std::exception& e) {
      warnings << "aggregate: skipping " << dir << " (" << e.what() << ")\n";
    }
  }

  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    if (a.problem != b.problem) return a.problem < b.problem;
    return a.rrmse < b.rrmse;
  });

  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t k = i + 1; k < rows.size(); ++k)
      if (rows[i].problem == rows[k].problem &&
          rows[i].activation == rows[k].activation) {
        warnings << "aggregate: duplicate run for (" << rows[i].problem << ", "
                 << rows[i].activation << ")\n";
        k = rows.size();
      }

  out << "problem,activation,loss,rmae,rrmse,wall_s\n";
  for (const Row& r : rows)
    out << r.problem << ',' << r.activation << ',' << format_g(r.loss) << ','
        << format_g(r.rmae) << ',' << format_g(r.rrmse) << ','
        << format_g(r.wall_s) << '\n';
}

}  // namespace wavepinn
