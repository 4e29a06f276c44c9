#include "wavepinn/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace wavepinn {

namespace {

void check(const Eigen::VectorXd& pred, const Eigen::VectorXd& ref) {
  if (pred.size() != ref.size())
    throw std::invalid_argument("metrics: prediction/reference length mismatch");
  if (ref.size() == 0)
    throw std::invalid_argument("metrics: empty reference");
}

}  // namespace

double rmae(const Eigen::VectorXd& pred, const Eigen::VectorXd& ref) {
  check(pred, ref);
  const double denom = ref.array().abs().sum();
  if (denom == 0.0)
    throw std::invalid_argument("rmae: all-zero reference");
  return (pred - ref).array().abs().sum() / denom;
}

double rrmse(const Eigen::VectorXd& pred, const Eigen::VectorXd& ref) {
  check(pred, ref);
  const double denom = ref.squaredNorm();
  if (denom == 0.0)
    throw std::invalid_argument("rrmse: all-zero reference");
  return std::sqrt((pred - ref).squaredNorm() / denom);
}

EvalResult evaluate_errors(const Eigen::VectorXd& pred,
                           const Eigen::VectorXd& ref) {
  return {rmae(pred, ref), rrmse(pred, ref), ref.size()};
}

}  // namespace wavepinn
