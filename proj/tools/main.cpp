// wavepinn command-line interface: train / evaluate / aggregate.

#include <CLI11.hpp>
#include <iostream>

#include "wavepinn/harness.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 2;
constexpr int kExitDiverged = 3;

int run_train(CLI::App& app, const wavepinn::RunConfig& config) {
  (void)app;
  wavepinn::TrainReport report = wavepinn::run_experiment(config);
  std::cout << report.to_json() << '\n';
  return report.status == "diverged" ? kExitDiverged : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wavepinn: PINN training with adaptive wavelet activations"};
  app.require_subcommand(1);

  // --- train ---
  auto* train = app.add_subcommand("train", "train one (problem, activation) run");
  std::string config_path, scale;
  wavepinn::RunConfig cfg;
  double rho = 0, wave_beta = 0, convection_beta = 0, lambda1 = 0, lambda2 = 0;

  train->add_option("--config", config_path, "JSON config file (keys match RunConfig fields)");
  auto* opt_scale = train->add_option("--scale", scale, "preset: paper (4x512, 1000 iters, 101x101) or desk (4x64, 500 iters, 51x51)");
  auto* opt_problem = train->add_option("--problem", cfg.problem, "reaction | wave | convection | navier-stokes");
  auto* opt_activation = train->add_option("--activation", cfg.activation, "activation name, e.g. tanh, softgabortanh, softher2tanhw");
  auto* opt_layers = train->add_option("--hidden-layers", cfg.hidden_layers);
  auto* opt_width = train->add_option("--hidden-width", cfg.hidden_width);
  auto* opt_iters = train->add_option("--iterations", cfg.iterations);
  auto* opt_seed = train->add_option("--seed", cfg.seed);
  auto* opt_lr = train->add_option("--lambda-r", cfg.lambda_r);
  auto* opt_lb = train->add_option("--lambda-b", cfg.lambda_b);
  auto* opt_li = train->add_option("--lambda-i", cfg.lambda_i);
  auto* opt_nx = train->add_option("--nx", cfg.nx);
  auto* opt_nt = train->add_option("--nt", cfg.nt);
  auto* opt_nsp = train->add_option("--ns-points", cfg.ns_points);
  auto* opt_gabor = train->add_option("--gabor-omega-init", cfg.gabor_omega_init, "3 or 5");
  auto* opt_cinit = train->add_option("--coeff-init", cfg.coeff_init, "raw_one | effective_one");
  auto* opt_plc = train->add_flag("--per-layer-coeffs", cfg.per_layer_coeffs);
  auto* opt_oact = train->add_flag("--output-activation", cfg.output_activation);
  auto* opt_unit = train->add_option("--iteration-unit", cfg.iteration_unit, "steps | evals");
  auto* opt_threads = train->add_option("--threads", cfg.threads);
  auto* opt_ref = train->add_option("--reference-data", cfg.reference_data, "Navier-Stokes reference CSV");
  auto* opt_out = train->add_option("--output-dir", cfg.output_dir);
  auto* opt_rho = train->add_option("--rho", rho, "reaction rate override");
  auto* opt_wb = train->add_option("--wave-beta", wave_beta);
  auto* opt_cb = train->add_option("--convection-beta", convection_beta);
  auto* opt_l1 = train->add_option("--lambda1", lambda1);
  auto* opt_l2 = train->add_option("--lambda2", lambda2);

  // --- evaluate ---
  auto* evaluate = app.add_subcommand("evaluate", "evaluate a checkpoint");
  std::string checkpoint, eval_problem, eval_ref;
  double ev_rho = 0, ev_wb = 0, ev_cb = 0, ev_l1 = 0, ev_l2 = 0;
  evaluate->add_option("--checkpoint", checkpoint)->required();
  evaluate->add_option("--problem", eval_problem)->required();
  evaluate->add_option("--reference-data", eval_ref);
  auto* ev_opt_rho = evaluate->add_option("--rho", ev_rho);
  auto* ev_opt_wb = evaluate->add_option("--wave-beta", ev_wb);
  auto* ev_opt_cb = evaluate->add_option("--convection-beta", ev_cb);
  auto* ev_opt_l1 = evaluate->add_option("--lambda1", ev_l1);
  auto* ev_opt_l2 = evaluate->add_option("--lambda2", ev_l2);

  // --- aggregate ---
  auto* agg = app.add_subcommand("aggregate", "aggregate run dirs into a comparison CSV");
  std::vector<std::string> run_dirs;
  agg->add_option("dirs", run_dirs, "run directories containing report.json")
      ->expected(-1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfigError;
  }

  try {
    if (train->parsed()) {
      // Precedence: defaults < config file < scale preset < explicit flags.
      wavepinn::RunConfig merged;
      if (!config_path.empty())
        merged = wavepinn::run_config_from_json_file(config_path);
      if (opt_scale->count()) wavepinn::apply_scale_preset(merged, scale);
      if (opt_problem->count()) merged.problem = cfg.problem;
      if (opt_activation->count()) merged.activation = cfg.activation;
      if (opt_layers->count()) merged.hidden_layers = cfg.hidden_layers;
      if (opt_width->count()) merged.hidden_width = cfg.hidden_width;
      if (opt_iters->count()) merged.iterations = cfg.iterations;
      if (opt_seed->count()) merged.seed = cfg.seed;
      if (opt_lr->count()) merged.lambda_r = cfg.lambda_r;
      if (opt_lb->count()) merged.lambda_b = cfg.lambda_b;
      if (opt_li->count()) merged.lambda_i = cfg.lambda_i;
      if (opt_nx->count()) merged.nx = cfg.nx;
      if (opt_nt->count()) merged.nt = cfg.nt;
      if (opt_nsp->count()) merged.ns_points = cfg.ns_points;
      if (opt_gabor->count()) merged.gabor_omega_init = cfg.gabor_omega_init;
      if (opt_cinit->count()) merged.coeff_init = cfg.coeff_init;
      if (opt_plc->count()) merged.per_layer_coeffs = cfg.per_layer_coeffs;
      if (opt_oact->count()) merged.output_activation = cfg.output_activation;
      if (opt_unit->count()) merged.iteration_unit = cfg.iteration_unit;
      if (opt_threads->count()) merged.threads = cfg.threads;
      if (opt_ref->count()) merged.reference_data = cfg.reference_data;
      if (opt_out->count()) merged.output_dir = cfg.output_dir;
      if (opt_rho->count()) merged.rho = rho;
      if (opt_wb->count()) merged.wave_beta = wave_beta;
      if (opt_cb->count()) merged.convection_beta = convection_beta;
      if (opt_l1->count()) merged.lambda1 = lambda1;
      if (opt_l2->count()) merged.lambda2 = lambda2;
      return run_train(app, merged);
    }
    if (evaluate->parsed()) {
      wavepinn::RunConfig c;
      c.problem = eval_problem;
      c.reference_data = eval_ref;
      if (ev_opt_rho->count()) c.rho = ev_rho;
      if (ev_opt_wb->count()) c.wave_beta = ev_wb;
      if (ev_opt_cb->count()) c.convection_beta = ev_cb;
      if (ev_opt_l1->count()) c.lambda1 = ev_l1;
      if (ev_opt_l2->count()) c.lambda2 = ev_l2;
      const wavepinn::EvalResult result =
          wavepinn::evaluate_checkpoint(checkpoint, c);
      std::cout << "{\"rmae\": " << result.rmae << ", \"rrmse\": " << result.rrmse
                << ", \"n_points\": " << result.n_points << "}\n";
      return kExitOk;
    }
    if (agg->parsed()) {
      wavepinn::aggregate(run_dirs, std::cout, std::cerr);
      return kExitOk;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfigError;
  }
  return kExitConfigError;
}
