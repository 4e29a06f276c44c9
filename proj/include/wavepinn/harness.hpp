#pragma once

// Experiment orchestration: trains one (problem, activation) pair, evaluates
// on the test grid, emits machine-readable artifacts (report.json,
// loss_history.csv, prediction_grid.csv, checkpoint.json), and aggregates
// runs into a comparison table.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "wavepinn/loss.hpp"
#include "wavepinn/metrics.hpp"
#include "wavepinn/network.hpp"
#include "wavepinn/optimizer.hpp"
#include "wavepinn/pde.hpp"

namespace wavepinn {

struct RunConfig {
  std::string problem = "reaction";
  std::string activation = "tanh";
  int hidden_layers = 4;
  int hidden_width = 512;
  int iterations = 1000;
  std::uint64_t seed = 5;
  double lambda_r = 1.0;
  double lambda_b = 1.0;
  double lambda_i = 1.0;
  int nx = 101;
  int nt = 101;
  long ns_points = 2500;
  double gabor_omega_init = 3.0;
  // Activation coefficients start at effective value 1 (raw = softplus^-1(1));
  // `raw_one` selects the raw-value interpretation instead.
  std::string coeff_init = "effective_one";
  bool per_layer_coeffs = false;
  bool output_activation = false;
  std::string iteration_unit = "steps";  // or "evals"
  int threads = 1;
  std::string reference_data;  // Navier-Stokes reference CSV
  std::string output_dir;      // empty: keep the run in memory
  std::string scale;           // preset echo: "", "paper", or "desk"

  // Optional overrides of the paper-default PDE constants.
  std::optional<double> rho;
  std::optional<double> wave_beta;
  std::optional<double> convection_beta;
  std::optional<double> lambda1;
  std::optional<double> lambda2;

  bool operator==(const RunConfig&) const = default;

  ProblemSpec problem_spec() const;  // validates and applies overrides
  MlpConfig mlp_config() const;
  LossWeights loss_weights() const {
    return {lambda_r, lambda_b, lambda_i};
  }
};

// The paper-scale and desk-scale presets fix (hidden_width, iterations,
// nx, nt) = (512, 1000, 101, 101) and (64, 500, 51, 51) respectively.
void apply_scale_preset(RunConfig& config, const std::string& scale);

RunConfig run_config_from_json_file(const std::string& path);
std::string run_config_to_json(const RunConfig& config);
RunConfig run_config_from_json(const std::string& text);

struct TrainReport {
  RunConfig config;
  std::string status = "ok";  // "ok" or "diverged"
  LossBreakdown loss;
  std::optional<EvalResult> eval;  // absent when diverged

  struct Coefficient {
    std::string name;
    double raw = 0.0;
    double value = 0.0;  // softplus(raw)
    bool trainable = true;
  };
  std::vector<Coefficient> coefficients;

  int iterations_run = 0;
  long function_evals = 0;
  double final_grad_norm = 0.0;
  std::string termination;
  double wall_s = 0.0;

  std::string to_json() const;
};

// Runs one experiment end to end. Writes report.json, loss_history.csv,
// prediction_grid.csv, and checkpoint.json under config.output_dir when it is
// non-empty. Training divergence is reported through status, not an
// exception.
TrainReport run_experiment(const RunConfig& config);

// Evaluation grid used for the 1D problems (fixed, matching the benchmark
// protocol).
inline constexpr int kEvalGridN = 101;

// Re-evaluates a checkpoint against the analytic solution (1D) or the
// held-out final-time pressure (Navier-Stokes).
EvalResult evaluate_checkpoint(const std::string& checkpoint_path,
                               const RunConfig& config);

// Reads report.json from each directory and emits one CSV row per run with
// columns problem,activation,loss,rmae,rrmse,wall_s sorted by
// (problem, rrmse). Malformed reports are skipped with a warning; duplicate
// (problem, activation) pairs are kept and flagged on the warning stream.
void aggregate(const std::vector<std::string>& run_dirs, std::ostream& out,
               std::ostream& warnings);

}  // namespace wavepinn
