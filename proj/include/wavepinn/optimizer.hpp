#pragma once

// Full-batch L-BFGS with a strong Wolfe line search: two-loop recursion over
// the last m (s, y) pairs, bracket/zoom step selection, steepest-descent
// fallback when the quasi-Newton direction fails to descend.

#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace wavepinn {

// Whether max_iters counts accepted L-BFGS steps or objective evaluations.
enum class IterationUnit { AcceptedSteps, ObjectiveEvals };

struct LbfgsConfig {
  int max_iters = 1000;
  int history = 10;
  double wolfe_c1 = 1e-4;
  double wolfe_c2 = 0.9;
  double grad_tol = 1e-9;
  int max_linesearch_evals = 25;
  double initial_step = 1.0;
  // On the very first iteration (identity Hessian guess) the line search
  // starts from initial_step / max(1, |g|_1); afterwards from initial_step.
  // Keeps the first quasi-Newton step from overshooting on badly scaled
  // objectives, matching common L-BFGS implementations.
  bool scale_first_step = true;
  IterationUnit iteration_unit = IterationUnit::AcceptedSteps;
};

enum class TerminationReason {
  GradTolReached,
  MaxIterations,
  LineSearchFailed,
  AlreadyStationary,
  NonFiniteLoss,
};

const char* termination_name(TerminationReason reason);

struct IterRecord {
  int iteration = 0;
  double loss = 0.0;
  double grad_norm = 0.0;
  double step_length = 0.0;
  long function_evals = 0;  // cumulative
  // Quantities logged for re-checking the strong Wolfe inequalities.
  double loss_before = 0.0;
  double dphi0 = 0.0;        // g(theta)^T d at the step start
  double dphi_alpha = 0.0;   // g(theta + alpha d)^T d at the accepted step
};

struct OptimTrace {
  std::vector<IterRecord> records;
  long function_evals = 0;

  // Exact columns: iter,loss,grad_norm,step,evals
  void write_csv(std::ostream& out) const;
};

// Objective: fills grad and returns the loss at theta.
using Objective =
    std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

struct MinimizeResult {
  Eigen::VectorXd theta;
  double loss = 0.0;
  Eigen::VectorXd grad;
  OptimTrace trace;
  TerminationReason reason = TerminationReason::MaxIterations;
};

// Throws std::invalid_argument for a non-finite loss or gradient at theta0;
// a failed line search is reported through `reason`, not an exception.
MinimizeResult minimize(const Objective& objective,
                        const Eigen::VectorXd& theta0,
                        const LbfgsConfig& config = {});

}  // namespace wavepinn
