#include "wavepinn/optimizer.hpp"

#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>
#include <optional>
#include <stdexcept>

namespace wavepinn {

const char* termination_name(TerminationReason reason) {
  switch (reason) {
    case TerminationReason::GradTolReached: return "grad_tol";
    case TerminationReason::MaxIterations: return "max_iters";
    case TerminationReason::LineSearchFailed: return "line_search_failed";
    case TerminationReason::AlreadyStationary: return "already_stationary";
    case TerminationReason::NonFiniteLoss: return "non_finite_loss";
  }
  return "?";
}

void OptimTrace::write_csv(std::ostream& out) const {
  out << "iter,loss,grad_norm,step,evals\n";
  char buf[128];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%ld\n", r.iteration,
                  r.loss, r.grad_norm, r.step_length, r.function_evals);
    out << buf;
  }
}

namespace {

struct Probe {
  double alpha = 0.0;
  double phi = 0.0;
  double dphi = 0.0;
  Eigen::VectorXd theta;
  Eigen::VectorXd grad;
  bool finite = false;
};

class LineSearch {
 public:
  LineSearch(const Objective& objective, const Eigen::VectorXd& theta,
             const Eigen::VectorXd& direction, double phi0, double dphi0,
             const LbfgsConfig& cfg, long& evals)
      : obj_(objective),
        theta0_(theta),
        dir_(direction),
        phi0_(phi0),
        dphi0_(dphi0),
        cfg_(cfg),
        evals_(evals) {}

  // Bracketing phase; returns an accepted probe or nothing on failure.
  std::optional<Probe> run(int budget, double first_alpha) {
    budget_ = budget;
    Probe prev;
    prev.alpha = 0.0;
    prev.phi = phi0_;
    prev.dphi = dphi0_;
    prev.finite = true;

    double alpha = first_alpha;
    const double alpha_max = 1e10;
    for (int i = 0; used_ < budget_; ++i) {
      Probe cur = probe(alpha);
      if (!cur.finite || cur.phi > phi0_ + cfg_.wolfe_c1 * alpha * dphi0_ ||
          (i > 0 && cur.phi >= prev.phi))
        return zoom(prev, cur);
      if (std::abs(cur.dphi) <= cfg_.wolfe_c2 * std::abs(dphi0_)) return cur;
      if (cur.dphi >= 0.0) return zoom(cur, prev);
      prev = cur;
      alpha = std::min(2.0 * alpha, alpha_max);
      if (alpha >= alpha_max) break;
    }
    return std::nullopt;
  }

 private:
  Probe probe(double alpha) {
    Probe p;
    p.alpha = alpha;
    p.theta = theta0_ + alpha * dir_;
    p.grad.resize(theta0_.size());
    p.phi = obj_(p.theta, p.grad);
    ++evals_;
    ++used_;
    p.finite = std::isfinite(p.phi) && p.grad.allFinite();
    p.dphi = p.finite ? p.grad.dot(dir_)
                      : std::numeric_limits<double>::quiet_NaN();
    return p;
  }

  // Minimizer of the cubic through (a, fa, da) and (b, fb, db).
  static double cubic_min(double a, double fa, double da, double b, double fb,
                          double db) {
    const double d1 = da + db - 3.0 * (fa - fb) / (a - b);
    const double disc = d1 * d1 - da * db;
    if (disc < 0.0) return std::numeric_limits<double>::quiet_NaN();
    const double d2 = std::copysign(std::sqrt(disc), b - a);
    return b - (b - a) * (db + d2 - d1) / (db - da + 2.0 * d2);
  }

  std::optional<Probe> zoom(Probe lo, Probe hi) {
    while (used_ < budget_) {
      const double width = hi.alpha - lo.alpha;
      if (std::abs(width) < 1e-16 * std::max(1.0, std::abs(lo.alpha)))
        return std::nullopt;

      double alpha = std::numeric_limits<double>::quiet_NaN();
      if (lo.finite && hi.finite)
        alpha = cubic_min(lo.alpha, lo.phi, lo.dphi, hi.alpha, hi.phi, hi.dphi);
      const double fence = 0.1 * std::abs(width);
      const double a_lo = std::min(lo.alpha, hi.alpha);
      const double a_hi = std::max(lo.alpha, hi.alpha);
      if (!std::isfinite(alpha) || alpha < a_lo + fence || alpha > a_hi - fence)
        alpha = 0.5 * (lo.alpha + hi.alpha);

      Probe cur = probe(alpha);
      if (!cur.finite || cur.phi > phi0_ + cfg_.wolfe_c1 * alpha * dphi0_ ||
          cur.phi >= lo.phi) {
        hi = cur;
      } else {
        if (std::abs(cur.dphi) <= cfg_.wolfe_c2 * std::abs(dphi0_)) return cur;
        if (cur.dphi * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
        lo = cur;
      }
    }
    return std::nullopt;
  }

  const Objective& obj_;
  const Eigen::VectorXd& theta0_;
  const Eigen::VectorXd& dir_;
  double phi0_;
  double dphi0_;
  const LbfgsConfig& cfg_;
  long& evals_;
  int budget_ = 0;
  int used_ = 0;
};

}  // namespace

MinimizeResult minimize(const Objective& objective,
                        const Eigen::VectorXd& theta0,
                        const LbfgsConfig& config) {
  if (config.history < 1)
    throw std::invalid_argument("lbfgs: history must be >= 1");
  if (!(config.wolfe_c1 > 0.0 && config.wolfe_c1 < config.wolfe_c2 &&
        config.wolfe_c2 < 1.0))
    throw std::invalid_argument("lbfgs: need 0 < c1 < c2 < 1");

  MinimizeResult result;
  result.theta = theta0;
  result.grad.resize(theta0.size());
  result.loss = objective(result.theta, result.grad);
  result.trace.function_evals = 1;
  if (!std::isfinite(result.loss) || !result.grad.allFinite())
    throw std::invalid_argument("lbfgs: non-finite loss or gradient at theta0");

  if (result.grad.norm() <= config.grad_tol) {
    result.reason = TerminationReason::AlreadyStationary;
    return result;
  }

  struct Pair {
    Eigen::VectorXd s, y;
    double rho;
  };
  std::deque<Pair> history;
  double gamma = 1.0;
  std::vector<double> alpha_scratch;

  auto two_loop = [&](const Eigen::VectorXd& g) {
    Eigen::VectorXd q = g;
    alpha_scratch.assign(history.size(), 0.0);
    for (std::size_t i = history.size(); i-- > 0;) {
      alpha_scratch[i] = history[i].rho * history[i].s.dot(q);
      q -= alpha_scratch[i] * history[i].y;
    }
    q *= gamma;
    for (std::size_t i = 0; i < history.size(); ++i) {
      const double beta = history[i].rho * history[i].y.dot(q);
      q += (alpha_scratch[i] - beta) * history[i].s;
    }
    return Eigen::VectorXd(-q);
  };

  int iter = 0;
  while (true) {
    const bool budget_done =
        config.iteration_unit == IterationUnit::AcceptedSteps
            ? iter >= config.max_iters
            : result.trace.function_evals >= config.max_iters;
    if (budget_done) {
      result.reason = TerminationReason::MaxIterations;
      return result;
    }

    Eigen::VectorXd direction = two_loop(result.grad);
    double dphi0 = result.grad.dot(direction);
    if (!(dphi0 < 0.0)) {
      direction = -result.grad;
      dphi0 = -result.grad.squaredNorm();
    }

    int budget = config.max_linesearch_evals;
    if (config.iteration_unit == IterationUnit::ObjectiveEvals)
      budget = static_cast<int>(std::min<long>(
          budget, config.max_iters - result.trace.function_evals));
    if (budget <= 0) {
      result.reason = TerminationReason::MaxIterations;
      return result;
    }

    double first_alpha = config.initial_step;
    if (config.scale_first_step && iter == 0)
      first_alpha = config.initial_step /
                    std::max(1.0, result.grad.lpNorm<1>());

    LineSearch search(objective, result.theta, direction, result.loss, dphi0,
                      config, result.trace.function_evals);
    std::optional<Probe> accepted = search.run(budget, first_alpha);
    if (!accepted) {
      result.reason = TerminationReason::LineSearchFailed;
      return result;
    }

    Eigen::VectorXd s = accepted->theta - result.theta;
    Eigen::VectorXd y = accepted->grad - result.grad;
    const double loss_before = result.loss;
    result.theta = accepted->theta;
    result.loss = accepted->phi;
    result.grad = accepted->grad;
    ++iter;

    IterRecord rec;
    rec.iteration = iter;
    rec.loss = result.loss;
    rec.grad_norm = result.grad.norm();
    rec.step_length = accepted->alpha;
    rec.function_evals = result.trace.function_evals;
    rec.loss_before = loss_before;
    rec.dphi0 = dphi0;
    rec.dphi_alpha = accepted->dphi;
    result.trace.records.push_back(rec);

    const double sy = s.dot(y);
    if (sy > 1e-10 * s.norm() * y.norm()) {
      gamma = sy / y.squaredNorm();
      history.push_back({std::move(s), std::move(y), 1.0 / sy});
      if (static_cast<int>(history.size()) > config.history)
        history.pop_front();
    }

    if (rec.grad_norm < config.grad_tol) {
      result.reason = TerminationReason::GradTolReached;
      return result;
    }
  }
}

}  // namespace wavepinn
