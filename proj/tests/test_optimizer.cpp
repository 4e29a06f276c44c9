#include <doctest.h>

#include <cmath>
#include <sstream>

#include "wavepinn/optimizer.hpp"

using namespace wavepinn;

namespace {

Objective quadratic(const Eigen::VectorXd& center) {
  return [center](const Eigen::VectorXd& theta, Eigen::VectorXd& grad) {
    grad = theta - center;
    return 0.5 * grad.squaredNorm();
  };
}

double rosenbrock(const Eigen::VectorXd& t, Eigen::VectorXd& g) {
  const double a = t[0], b = t[1];
  g.resize(2);
  g[0] = -2 * (1 - a) - 400 * a * (b - a * a);
  g[1] = 200 * (b - a * a);
  return (1 - a) * (1 - a) + 100 * (b - a * a) * (b - a * a);
}

}  // namespace

TEST_CASE("convex quadratic converges in a few steps") {
  Eigen::VectorXd center(3);
  center << 1.0, -2.0, 0.5;
  Eigen::VectorXd theta0(3);
  theta0 << 5.0, -3.0, 2.0;
  LbfgsConfig cfg;
  cfg.grad_tol = 1e-10;
  MinimizeResult result = minimize(quadratic(center), theta0, cfg);
  CHECK(result.reason == TerminationReason::GradTolReached);
  CHECK(static_cast<int>(result.trace.records.size()) <= 3);
  CHECK(result.grad.norm() < 1e-10);
  CHECK((result.theta - center).norm() < 1e-9);
}

TEST_CASE("rosenbrock reaches the optimum within 200 iterations") {
  Eigen::VectorXd theta0(2);
  theta0 << -1.2, 1.0;
  LbfgsConfig cfg;
  cfg.max_iters = 200;
  cfg.grad_tol = 1e-12;
  MinimizeResult result = minimize(rosenbrock, theta0, cfg);
  Eigen::VectorXd opt(2);
  opt << 1.0, 1.0;
  CHECK((result.theta - opt).norm() < 1e-6);
  CHECK(static_cast<int>(result.trace.records.size()) <= 200);
}

TEST_CASE("every accepted step satisfies both strong Wolfe inequalities") {
  Eigen::VectorXd theta0(2);
  theta0 << -1.2, 1.0;
  LbfgsConfig cfg;
  cfg.max_iters = 200;
  MinimizeResult result = minimize(rosenbrock, theta0, cfg);
  REQUIRE(!result.trace.records.empty());
  for (const IterRecord& r : result.trace.records) {
    CHECK(r.loss <=
          r.loss_before + cfg.wolfe_c1 * r.step_length * r.dphi0);
    CHECK(std::abs(r.dphi_alpha) <= cfg.wolfe_c2 * std::abs(r.dphi0));
    CHECK(r.dphi0 < 0.0);
    CHECK(std::isfinite(r.loss));
  }
}

TEST_CASE("monotone descent across accepted steps") {
  Eigen::VectorXd theta0(2);
  theta0 << -1.2, 1.0;
  MinimizeResult result = minimize(rosenbrock, theta0, {});
  double prev = std::numeric_limits<double>::infinity();
  for (const IterRecord& r : result.trace.records) {
    CHECK(r.loss <= prev);
    prev = r.loss;
  }
}

TEST_CASE("zero gradient at theta0 returns immediately") {
  Eigen::VectorXd center(2);
  center << 0.3, 0.4;
  MinimizeResult result = minimize(quadratic(center), center, {});
  CHECK(result.reason == TerminationReason::AlreadyStationary);
  CHECK(result.trace.records.empty());
  CHECK(result.theta == center);
}

TEST_CASE("function evals dominate iterations and accumulate") {
  Eigen::VectorXd theta0(2);
  theta0 << -1.2, 1.0;
  MinimizeResult result = minimize(rosenbrock, theta0, {});
  const auto& rec = result.trace.records;
  CHECK(result.trace.function_evals >= static_cast<long>(rec.size()));
  for (std::size_t i = 1; i < rec.size(); ++i)
    CHECK(rec[i].function_evals >= rec[i - 1].function_evals);
  CHECK(rec.back().function_evals == result.trace.function_evals);
}

TEST_CASE("determinism: identical inputs give identical traces") {
  Eigen::VectorXd theta0(2);
  theta0 << -1.2, 1.0;
  MinimizeResult a = minimize(rosenbrock, theta0, {});
  MinimizeResult b = minimize(rosenbrock, theta0, {});
  REQUIRE(a.trace.records.size() == b.trace.records.size());
  for (std::size_t i = 0; i < a.trace.records.size(); ++i) {
    CHECK(a.trace.records[i].loss == b.trace.records[i].loss);
    CHECK(a.trace.records[i].step_length == b.trace.records[i].step_length);
  }
  CHECK(a.theta == b.theta);
}

TEST_CASE("max_iters caps the trace") {
  Eigen::VectorXd theta0(2);
  theta0 << -1.2, 1.0;
  LbfgsConfig cfg;
  cfg.max_iters = 7;
  cfg.grad_tol = 0.0;
  MinimizeResult result = minimize(rosenbrock, theta0, cfg);
  CHECK(result.reason == TerminationReason::MaxIterations);
  CHECK(result.trace.records.size() == 7);
}

TEST_CASE("objective-eval iteration unit caps total evaluations") {
  Eigen::VectorXd theta0(2);
  theta0 << -1.2, 1.0;
  LbfgsConfig cfg;
  cfg.max_iters = 40;
  cfg.grad_tol = 0.0;
  cfg.iteration_unit = IterationUnit::ObjectiveEvals;
  MinimizeResult result = minimize(rosenbrock, theta0, cfg);
  CHECK(result.trace.function_evals <= 40);
  CHECK(result.trace.records.size() <
        40u);  // line searches consume part of the budget
}

TEST_CASE("non-finite loss at theta0 is an error") {
  auto bad = [](const Eigen::VectorXd& theta, Eigen::VectorXd& grad) {
    grad = theta;
    return std::numeric_limits<double>::quiet_NaN();
  };
  Eigen::VectorXd theta0(1);
  theta0 << 1.0;
  CHECK_THROWS_AS(minimize(bad, theta0, {}), std::invalid_argument);
}

TEST_CASE("line search failure is a terminal status, not a crash") {
  // |x|: the strong curvature condition can never hold near the kink.
  auto abs_fn = [](const Eigen::VectorXd& theta, Eigen::VectorXd& grad) {
    grad.resize(1);
    grad[0] = theta[0] >= 0 ? 1.0 : -1.0;
    return std::abs(theta[0]);
  };
  Eigen::VectorXd theta0(1);
  theta0 << 0.5;
  MinimizeResult result = minimize(abs_fn, theta0, {});
  CHECK(result.reason == TerminationReason::LineSearchFailed);
  CHECK(std::isfinite(result.loss));
}

TEST_CASE("invalid configuration is rejected") {
  Eigen::VectorXd theta0(1);
  theta0 << 1.0;
  LbfgsConfig cfg;
  cfg.wolfe_c1 = 0.95;  // violates c1 < c2
  CHECK_THROWS_AS(minimize(quadratic(theta0), theta0, cfg),
                  std::invalid_argument);
  cfg = {};
  cfg.history = 0;
  CHECK_THROWS_AS(minimize(quadratic(theta0), theta0, cfg),
                  std::invalid_argument);
}

TEST_CASE("trace CSV has the exact header and one row per iteration") {
  Eigen::VectorXd theta0(2);
  theta0 << -1.2, 1.0;
  LbfgsConfig cfg;
  cfg.max_iters = 5;
  cfg.grad_tol = 0.0;
  MinimizeResult result = minimize(rosenbrock, theta0, cfg);
  std::ostringstream out;
  result.trace.write_csv(out);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "iter,loss,grad_norm,step,evals");
  int rows = 0;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 5);
}
