#pragma once

// Composite training objective: weighted sum of the residual, boundary, and
// initial mean-squared-error components, assembled on the tape so a single
// reverse sweep yields parameter gradients.

#include <utility>

#include "wavepinn/pde.hpp"
#include "wavepinn/tape.hpp"

namespace wavepinn {

struct LossWeights {
  double lambda_r = 1.0;
  double lambda_b = 1.0;
  double lambda_i = 1.0;
};

struct LossBreakdown {
  double total = 0.0;
  double residual_mse = 0.0;
  double boundary_mse = 0.0;
  double initial_mse = 0.0;
};

// Each component is the mean of squared per-point terms over its own point
// count; the returned Scalar is ready for backward. Problems with no boundary
// terms (Navier-Stokes) get boundary_mse = 0; the point sets a problem does
// require must be non-empty.
std::pair<Scalar, LossBreakdown> total_loss(Tape& tape,
                                            const ProblemSpec& problem,
                                            const JetField& field,
                                            const CollocationSet& colloc,
                                            const LossWeights& weights);

}  // namespace wavepinn
