#pragma once

// Fast training objective. The per-point loss computation is recorded once as
// tape programs (activation applied to an input jet; residual / condition
// terms applied to the network's output jets), unused jet components are
// pruned per problem, and each objective evaluation replays the recording
// over blocks of collocation points: dense GEMMs for the affine layers plus a
// vectorized interpreter for the recorded programs. Gradients come from the
// matching reverse sweep, so the math is single-sourced with the scalar tape
// route that total_loss implements, and the two are cross-checked in tests.
//
// Reductions are committed block-by-block in a fixed order, so results are
// bit-reproducible for a given configuration regardless of thread count.

#include <memory>

#include "wavepinn/loss.hpp"
#include "wavepinn/network.hpp"
#include "wavepinn/optimizer.hpp"
#include "wavepinn/pde.hpp"

namespace wavepinn {

class TrainObjective {
 public:
  TrainObjective(const MlpModel& model, const ProblemSpec& problem,
                 const CollocationSet& colloc, const LossWeights& weights,
                 int threads = 1);
  ~TrainObjective();

  TrainObjective(const TrainObjective&) = delete;
  TrainObjective& operator=(const TrainObjective&) = delete;

  // Loss at theta; fills *grad when non-null.
  double eval(const Eigen::VectorXd& theta, Eigen::VectorXd* grad,
              LossBreakdown* breakdown = nullptr) const;

  Objective as_objective() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace wavepinn
