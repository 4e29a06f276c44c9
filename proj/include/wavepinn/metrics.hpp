#pragma once

// Relative error metrics: rMAE and rRMSE, the relative l1 and l2 errors of a
// prediction against a reference.

#include <Eigen/Core>

namespace wavepinn {

struct EvalResult {
  double rmae = 0.0;
  double rrmse = 0.0;
  Eigen::Index n_points = 0;
};

// sum |pred - ref| / sum |ref|. Throws on length mismatch or an all-zero
// reference.
double rmae(const Eigen::VectorXd& pred, const Eigen::VectorXd& ref);

// sqrt(sum (pred - ref)^2 / sum ref^2).
double rrmse(const Eigen::VectorXd& pred, const Eigen::VectorXd& ref);

EvalResult evaluate_errors(const Eigen::VectorXd& pred,
                           const Eigen::VectorXd& ref);

}  // namespace wavepinn
