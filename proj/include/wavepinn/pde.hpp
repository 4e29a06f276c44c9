#pragma once

// The four benchmark problems: residual operators, initial/boundary
// conditions, analytical solutions, collocation sampling, and the
// Navier-Stokes reference-data ingestion.
//
// Input direction convention: 1D problems seed jets over (x, t) as directions
// (0, 1); Navier-Stokes over (x, y, t) as (0, 1, 2).

#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "wavepinn/jet.hpp"
#include "wavepinn/tape.hpp"

namespace wavepinn {

enum class ProblemKind { Reaction, Wave, Convection, NavierStokes };

std::string problem_name(ProblemKind kind);
std::optional<ProblemKind> parse_problem_name(std::string_view name);

struct ProblemSpec {
  ProblemKind kind = ProblemKind::Reaction;

  double rho = 5.0;              // reaction rate
  double wave_beta = 3.0;        // wave IC frequency
  double wave_speed_sq = 4.0;    // wave c^2
  double convection_beta = 50.0; // convection speed
  double lambda1 = 1.0;          // NS convective coefficient
  double lambda2 = 0.01;         // NS viscosity

  // 1D space-time bounds; Navier-Stokes bounds come from the reference data.
  double x_min = 0.0, x_max = 1.0;
  double t_min = 0.0, t_max = 1.0;

  static ProblemSpec make(ProblemKind kind);

  int in_dim() const { return kind == ProblemKind::NavierStokes ? 3 : 2; }
  int out_dim() const { return kind == ProblemKind::NavierStokes ? 3 : 1; }
  bool periodic() const {
    return kind == ProblemKind::Reaction || kind == ProblemKind::Convection;
  }
};

struct CollocationSet {
  Eigen::MatrixXd interior;       // N_R x in_dim coordinates
  Eigen::MatrixXd interior_data;  // NS: N_R x 2 reference (u, v); else empty
  Eigen::MatrixXd initial;        // 1D: N_I x 2 points at t = t_min
  // 1D boundary points (x, t). When periodic_pairs is set rows come in
  // consecutive (x_min, t), (x_max, t) pairs and each pair is one term;
  // otherwise every row is its own Dirichlet term.
  Eigen::MatrixXd boundary;
  bool periodic_pairs = false;

  Eigen::Index n_residual() const { return interior.rows(); }
  Eigen::Index n_initial() const { return initial.rows(); }
  Eigen::Index n_boundary_terms() const {
    return periodic_pairs ? boundary.rows() / 2 : boundary.rows();
  }
};

// Rows ordered x-major: row = i * nt + j for x_i, t_j. Grids are inclusive of
// the domain boundaries.
Eigen::MatrixXd uniform_grid_points(const ProblemSpec& problem, int nx, int nt);

// 1D problems: interior = nx*nt tensor grid over the closed domain, initial =
// nx points at t = t_min, boundary = nt points at each spatial end (paired for
// periodic problems).
CollocationSet sample_uniform(const ProblemSpec& problem, int nx, int nt);

// Navier-Stokes reference field, rows of (t, x, y, u, v, p).
struct ReferenceField {
  Eigen::MatrixXd records;  // n x 6 in column order t,x,y,u,v,p
  double t_final = 0.0;
  Eigen::Vector3d bbox_min = Eigen::Vector3d::Zero();  // (t, x, y)
  Eigen::Vector3d bbox_max = Eigen::Vector3d::Zero();

  Eigen::Index rows() const { return records.rows(); }
  // Rows with t == t_final are held out of training and form the test set.
  std::vector<Eigen::Index> training_rows() const;
  std::vector<Eigen::Index> final_time_rows() const;
};

// Parses a CSV with exact header `t,x,y,u,v,p`. Missing columns, non-finite
// entries, duplicate (t,x,y) keys, and an empty file are distinct errors
// naming the offending row.
ReferenceField load_reference_csv(const std::string& path);

// Navier-Stokes collocation: n training records sampled uniformly without
// replacement, deterministic given seed.
CollocationSet sample_random(const ProblemSpec& problem, Eigen::Index n,
                             std::uint64_t seed, const ReferenceField& ref);

// ---------------------------------------------------------------------------
// Residual operators on output jets.
// ---------------------------------------------------------------------------

template <typename T>
T reaction_residual(const Jet2<T>& u, double rho) {
  // u_t - rho u (1 - u)
  return u.d(1) - rho * (u.val * (1.0 - u.val));
}

template <typename T>
T wave_residual(const Jet2<T>& u, double speed_sq) {
  // u_tt - c^2 u_xx
  return u.d2(1, 1) - speed_sq * u.d2(0, 0);
}

template <typename T>
T convection_residual(const Jet2<T>& u, double beta) {
  // u_t + beta u_x
  return u.d(1) + beta * u.d(0);
}

// Momentum residuals; jets over (x, y, t).
template <typename T>
std::pair<T, T> ns_residual(const Jet2<T>& u, const Jet2<T>& v,
                            const Jet2<T>& p, double lambda1, double lambda2) {
  T ru = u.d(2) + lambda1 * (u.val * u.d(0) + v.val * u.d(1)) + p.d(0) -
         lambda2 * (u.d2(0, 0) + u.d2(1, 1));
  T rv = v.d(2) + lambda1 * (u.val * v.d(0) + v.val * v.d(1)) + p.d(1) -
         lambda2 * (v.d2(0, 0) + v.d2(1, 1));
  return {ru, rv};
}

// ---------------------------------------------------------------------------
// Initial conditions.
// ---------------------------------------------------------------------------

template <typename T>
T reaction_ic(const T& x) {
  using std::exp;
  constexpr double pi = std::numbers::pi;
  const double denom = 2.0 * (pi / 4.0) * (pi / 4.0);
  T d = x - pi;
  return exp(-((d * d) / denom));
}

template <typename T>
T convection_ic(const T& x) {
  using std::sin;
  return sin(x);
}

template <typename T>
T wave_ic(const T& x, double beta) {
  using std::sin;
  constexpr double pi = std::numbers::pi;
  return sin(x * pi) + 0.5 * sin(x * (beta * pi));
}

// ---------------------------------------------------------------------------
// Analytical solutions (Reaction, Wave, Convection only).
// ---------------------------------------------------------------------------

template <typename T>
Jet2<T> analytic_jet(const ProblemSpec& problem, const Jet2<T>& x,
                     const Jet2<T>& t) {
  constexpr double pi = std::numbers::pi;
  switch (problem.kind) {
    case ProblemKind::Reaction: {
      const double denom = 2.0 * (pi / 4.0) * (pi / 4.0);
      Jet2<T> h = exp(-scale(square(x - pi), 1.0 / denom));
      Jet2<T> grow = h * exp(scale(t, problem.rho));
      return grow / (grow + (1.0 - h));
    }
    case ProblemKind::Wave: {
      const double b = problem.wave_beta;
      return sin(scale(x, pi)) * cos(scale(t, 2.0 * pi)) +
             scale(sin(scale(x, b * pi)) * cos(scale(t, 2.0 * b * pi)), 0.5);
    }
    case ProblemKind::Convection:
      return sin(x - scale(t, problem.convection_beta));
    case ProblemKind::NavierStokes:
      break;
  }
  throw std::invalid_argument(
      "analytic: no closed-form solution for navier-stokes");
}

double analytic(const ProblemSpec& problem, double x, double t);

// Taylor-Green vortex: a manufactured smooth (u, v, p) field satisfying the
// momentum equations exactly for lambda1 = 1, nu = lambda2. Used to exercise
// the Navier-Stokes pipeline without the external benchmark dataset.
Eigen::Vector3d taylor_green(double x, double y, double t, double nu);
void write_taylor_green_csv(const std::string& path, int nx, int ny, int nt,
                            double t_max, double nu);

// ---------------------------------------------------------------------------
// Field abstraction: anything that evaluates output jets at a point on a
// tape. Models and analytic closed-form graphs both qualify, so residual and
// loss assembly can run on either.
// ---------------------------------------------------------------------------

struct JetField {
  virtual ~JetField() = default;
  virtual std::vector<Jet2<Scalar>> eval(
      std::span<const Jet2<Scalar>> inputs) const = 0;
};

struct AnalyticJetField final : JetField {
  ProblemSpec problem;
  explicit AnalyticJetField(const ProblemSpec& p) : problem(p) {}
  std::vector<Jet2<Scalar>> eval(
      std::span<const Jet2<Scalar>> inputs) const override {
    return {analytic_jet(problem, inputs[0], inputs[1])};
  }
};

// Seeds input jets for a coordinate row and evaluates the field.
std::vector<Jet2<Scalar>> eval_field_at(Tape& tape, const JetField& field,
                                        const Eigen::RowVectorXd& point);

// PDE residual at one point; 1D problems return one Scalar, Navier-Stokes the
// two momentum residuals.
std::vector<Scalar> residual(Tape& tape, const ProblemSpec& problem,
                             const JetField& field,
                             const Eigen::RowVectorXd& point);

// Per-point squared-error contributions for the initial and boundary loss
// components. For Navier-Stokes the data-fit terms on (u, v) fill the initial
// slot and the boundary list is empty.
struct IcBcTerms {
  std::vector<Scalar> initial;
  std::vector<Scalar> boundary;
};

IcBcTerms ic_bc_terms(Tape& tape, const ProblemSpec& problem,
                      const JetField& field, const CollocationSet& colloc);

}  // namespace wavepinn
