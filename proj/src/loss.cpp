#include "wavepinn/loss.hpp"

namespace wavepinn {

namespace {

Scalar mean_of(Tape& tape, const std::vector<Scalar>& terms) {
  Scalar sum = tape.constant(0.0);
  for (const Scalar& t : terms) sum = sum + t;
  return sum / static_cast<double>(terms.size());
}

}  // namespace

std::pair<Scalar, LossBreakdown> total_loss(Tape& tape,
                                            const ProblemSpec& problem,
                                            const JetField& field,
                                            const CollocationSet& colloc,
                                            const LossWeights& weights) {
  if (weights.lambda_r < 0 || weights.lambda_b < 0 || weights.lambda_i < 0)
    throw std::invalid_argument("loss weights must be non-negative");
  if (colloc.interior.rows() == 0)
    throw std::invalid_argument("total_loss: empty interior point set");
  const bool needs_bc = problem.kind != ProblemKind::NavierStokes;
  if (needs_bc && (colloc.initial.rows() == 0 || colloc.boundary.rows() == 0))
    throw std::invalid_argument(
        "total_loss: empty initial or boundary point set");

  std::vector<Scalar> residual_terms;
  residual_terms.reserve(static_cast<std::size_t>(colloc.interior.rows()));
  for (Eigen::Index i = 0; i < colloc.interior.rows(); ++i) {
    const auto rs = residual(tape, problem, field, colloc.interior.row(i));
    Scalar term = square(rs[0]);
    for (std::size_t k = 1; k < rs.size(); ++k) term = term + square(rs[k]);
    residual_terms.push_back(term);
  }

  IcBcTerms icbc = ic_bc_terms(tape, problem, field, colloc);
  if (problem.kind == ProblemKind::NavierStokes && icbc.initial.empty())
    throw std::invalid_argument("total_loss: empty data-fit point set");

  Scalar residual_mse = mean_of(tape, residual_terms);
  Scalar initial_mse = mean_of(tape, icbc.initial);
  Scalar boundary_mse = icbc.boundary.empty() ? tape.constant(0.0)
                                              : mean_of(tape, icbc.boundary);

  Scalar total = weights.lambda_r * residual_mse +
                 weights.lambda_b * boundary_mse +
                 weights.lambda_i * initial_mse;

  LossBreakdown breakdown{total.value(), residual_mse.value(),
                          boundary_mse.value(), initial_mse.value()};
  return {total, breakdown};
}

}  // namespace wavepinn
