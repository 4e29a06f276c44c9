#include "wavepinn/pde.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

#include "wavepinn/rng.hpp"

namespace wavepinn {

namespace {
constexpr double kPi = std::numbers::pi;
}

std::string problem_name(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::Reaction: return "reaction";
    case ProblemKind::Wave: return "wave";
    case ProblemKind::Convection: return "convection";
    case ProblemKind::NavierStokes: return "navier-stokes";
  }
  return "?";
}

std::optional<ProblemKind> parse_problem_name(std::string_view name) {
  if (name == "reaction") return ProblemKind::Reaction;
  if (name == "wave") return ProblemKind::Wave;
  if (name == "convection") return ProblemKind::Convection;
  if (name == "navier-stokes" || name == "navierstokes" || name == "ns")
    return ProblemKind::NavierStokes;
  return std::nullopt;
}

ProblemSpec ProblemSpec::make(ProblemKind kind) {
  ProblemSpec p;
  p.kind = kind;
  switch (kind) {
    case ProblemKind::Reaction:
    case ProblemKind::Convection:
      p.x_max = 2.0 * kPi;
      break;
    case ProblemKind::Wave:
      p.x_max = 1.0;
      break;
    case ProblemKind::NavierStokes:
      break;
  }
  return p;
}

namespace {

Eigen::VectorXd linspace(double lo, double hi, int n) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i)
    v[i] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / (n - 1);
  return v;
}

}  // namespace

Eigen::MatrixXd uniform_grid_points(const ProblemSpec& problem, int nx,
                                    int nt) {
  const Eigen::VectorXd xs = linspace(problem.x_min, problem.x_max, nx);
  const Eigen::VectorXd ts = linspace(problem.t_min, problem.t_max, nt);
  Eigen::MatrixXd pts(static_cast<Eigen::Index>(nx) * nt, 2);
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < nt; ++j) {
      const Eigen::Index r = static_cast<Eigen::Index>(i) * nt + j;
      pts(r, 0) = xs[i];
      pts(r, 1) = ts[j];
    }
  return pts;
}

CollocationSet sample_uniform(const ProblemSpec& problem, int nx, int nt) {
  if (problem.kind == ProblemKind::NavierStokes)
    throw std::invalid_argument(
        "sample_uniform: navier-stokes collocation comes from the reference "
        "dataset");
  if (nx < 2 || nt < 2)
    throw std::invalid_argument("sample_uniform: nx and nt must be >= 2");

  CollocationSet c;
  c.interior = uniform_grid_points(problem, nx, nt);

  const Eigen::VectorXd xs = linspace(problem.x_min, problem.x_max, nx);
  const Eigen::VectorXd ts = linspace(problem.t_min, problem.t_max, nt);

  c.initial.resize(nx, 2);
  for (int i = 0; i < nx; ++i) {
    c.initial(i, 0) = xs[i];
    c.initial(i, 1) = problem.t_min;
  }

  c.boundary.resize(2 * static_cast<Eigen::Index>(nt), 2);
  for (int j = 0; j < nt; ++j) {
    c.boundary(2 * j + 0, 0) = problem.x_min;
    c.boundary(2 * j + 0, 1) = ts[j];
    c.boundary(2 * j + 1, 0) = problem.x_max;
    c.boundary(2 * j + 1, 1) = ts[j];
  }
  c.periodic_pairs = problem.periodic();
  return c;
}

std::vector<Eigen::Index> ReferenceField::training_rows() const {
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < records.rows(); ++i)
    if (records(i, 0) != t_final) rows.push_back(i);
  return rows;
}

std::vector<Eigen::Index> ReferenceField::final_time_rows() const {
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < records.rows(); ++i)
    if (records(i, 0) == t_final) rows.push_back(i);
  return rows;
}

ReferenceField load_reference_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("reference csv: cannot open " + path);

  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("reference csv: empty file: " + path);
  // Tolerate a UTF-8 BOM and trailing CR.
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0)
    line.erase(0, 3);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "t,x,y,u,v,p")
    throw std::runtime_error(
        "reference csv: header must be exactly `t,x,y,u,v,p`, got `" + line +
        "`");

  std::vector<std::array<double, 6>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::array<double, 6> row{};
    std::stringstream ss(line);
    std::string cell;
    int col = 0;
    static const char* col_names[] = {"t", "x", "y", "u", "v", "p"};
    while (std::getline(ss, cell, ',')) {
      if (col >= 6)
        throw std::runtime_error("reference csv: too many columns at row " +
                                 std::to_string(line_no));
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        throw std::runtime_error("reference csv: non-numeric value `" + cell +
                                 "` in column " + col_names[col] + " at row " +
                                 std::to_string(line_no));
      }
      if (!std::isfinite(v))
        throw std::runtime_error(
            std::string("reference csv: non-finite value in column ") +
            col_names[col] + " at row " + std::to_string(line_no));
      row[col++] = v;
    }
    if (col != 6)
      throw std::runtime_error("reference csv: expected 6 columns at row " +
                               std::to_string(line_no) + ", got " +
                               std::to_string(col));
    rows.push_back(row);
  }
  if (rows.empty())
    throw std::runtime_error("reference csv: no data rows: " + path);

  std::map<std::tuple<double, double, double>, std::size_t> seen;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto key = std::make_tuple(rows[i][0], rows[i][1], rows[i][2]);
    auto [it, inserted] = seen.emplace(key, i + 2);
    if (!inserted)
      throw std::runtime_error(
          "reference csv: duplicate (t,x,y) key at row " +
          std::to_string(i + 2) + " (first at row " + std::to_string(it->second) +
          ")");
  }

  ReferenceField field;
  field.records.resize(static_cast<Eigen::Index>(rows.size()), 6);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (int c = 0; c < 6; ++c)
      field.records(static_cast<Eigen::Index>(i), c) = rows[i][c];
  field.t_final = field.records.col(0).maxCoeff();
  for (int c = 0; c < 3; ++c) {
    field.bbox_min[c] = field.records.col(c).minCoeff();
    field.bbox_max[c] = field.records.col(c).maxCoeff();
  }
  return field;
}

CollocationSet sample_random(const ProblemSpec& problem, Eigen::Index n,
                             std::uint64_t seed, const ReferenceField& ref) {
  if (problem.kind != ProblemKind::NavierStokes)
    throw std::invalid_argument(
        "sample_random: only navier-stokes samples from reference records");
  auto rows = ref.training_rows();
  if (n > static_cast<Eigen::Index>(rows.size()))
    throw std::invalid_argument(
        "sample_random: requested " + std::to_string(n) +
        " points but only " + std::to_string(rows.size()) +
        " training records are available");

  UniformBits rng(seed);
  // Partial Fisher-Yates: after i steps the first i entries are the sample.
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto j =
        i + static_cast<Eigen::Index>(rng.next_index(rows.size() - i));
    std::swap(rows[i], rows[j]);
  }

  CollocationSet c;
  c.interior.resize(n, 3);
  c.interior_data.resize(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index r = rows[i];
    c.interior(i, 0) = ref.records(r, 1);  // x
    c.interior(i, 1) = ref.records(r, 2);  // y
    c.interior(i, 2) = ref.records(r, 0);  // t
    c.interior_data(i, 0) = ref.records(r, 3);
    c.interior_data(i, 1) = ref.records(r, 4);
  }
  return c;
}

double analytic(const ProblemSpec& problem, double x, double t) {
  Jet2<double> xj = jet_from_value(x, 2);
  Jet2<double> tj = jet_from_value(t, 2);
  return analytic_jet(problem, xj, tj).val;
}

Eigen::Vector3d taylor_green(double x, double y, double t, double nu) {
  const double f = std::exp(-2.0 * nu * t);
  const double u = -std::cos(x) * std::sin(y) * f;
  const double v = std::sin(x) * std::cos(y) * f;
  const double p = -0.25 * (std::cos(2.0 * x) + std::cos(2.0 * y)) * f * f;
  return {u, v, p};
}

void write_taylor_green_csv(const std::string& path, int nx, int ny, int nt,
                            double t_max, double nu) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "t,x,y,u,v,p\n";
  char buf[160];
  for (int k = 0; k < nt; ++k) {
    const double t = t_max * static_cast<double>(k) / (nt - 1);
    for (int i = 0; i < nx; ++i) {
      const double x = 2.0 * kPi * static_cast<double>(i) / nx;
      for (int j = 0; j < ny; ++j) {
        const double y = 2.0 * kPi * static_cast<double>(j) / ny;
        const Eigen::Vector3d uvp = taylor_green(x, y, t, nu);
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                      t, x, y, uvp[0], uvp[1], uvp[2]);
        out << buf;
      }
    }
  }
}

std::vector<Jet2<Scalar>> eval_field_at(Tape& tape, const JetField& field,
                                        const Eigen::RowVectorXd& point) {
  std::vector<Jet2<Scalar>> inputs;
  const int dim = static_cast<int>(point.size());
  inputs.reserve(dim);
  for (int d = 0; d < dim; ++d)
    inputs.push_back(jet_input(tape, point[d], d, dim));
  return field.eval(inputs);
}

std::vector<Scalar> residual(Tape& tape, const ProblemSpec& problem,
                             const JetField& field,
                             const Eigen::RowVectorXd& point) {
  const auto out = eval_field_at(tape, field, point);
  switch (problem.kind) {
    case ProblemKind::Reaction:
      return {reaction_residual(out[0], problem.rho)};
    case ProblemKind::Wave:
      return {wave_residual(out[0], problem.wave_speed_sq)};
    case ProblemKind::Convection:
      return {convection_residual(out[0], problem.convection_beta)};
    case ProblemKind::NavierStokes: {
      auto [ru, rv] =
          ns_residual(out[0], out[1], out[2], problem.lambda1, problem.lambda2);
      return {ru, rv};
    }
  }
  throw std::logic_error("residual: unknown problem kind");
}

IcBcTerms ic_bc_terms(Tape& tape, const ProblemSpec& problem,
                      const JetField& field, const CollocationSet& colloc) {
  IcBcTerms terms;

  if (problem.kind == ProblemKind::NavierStokes) {
    // Data-fit terms on (u, v) at the training records fill the initial slot.
    for (Eigen::Index i = 0; i < colloc.interior.rows(); ++i) {
      const auto out = eval_field_at(tape, field, colloc.interior.row(i));
      Scalar du = out[0].val - colloc.interior_data(i, 0);
      Scalar dv = out[1].val - colloc.interior_data(i, 1);
      terms.initial.push_back(square(du) + square(dv));
    }
    return terms;
  }

  for (Eigen::Index i = 0; i < colloc.initial.rows(); ++i) {
    const auto out = eval_field_at(tape, field, colloc.initial.row(i));
    const double x = colloc.initial(i, 0);
    Scalar term;
    switch (problem.kind) {
      case ProblemKind::Reaction:
        term = square(out[0].val - reaction_ic(x));
        break;
      case ProblemKind::Convection:
        term = square(out[0].val - convection_ic(x));
        break;
      case ProblemKind::Wave:
        // Value mismatch plus the initial-velocity condition u_t(x, 0) = 0.
        term = square(out[0].val - wave_ic(x, problem.wave_beta)) +
               square(out[0].d(1));
        break;
      case ProblemKind::NavierStokes:
        break;
    }
    terms.initial.push_back(term);
  }

  if (colloc.periodic_pairs) {
    for (Eigen::Index i = 0; i + 1 < colloc.boundary.rows(); i += 2) {
      const auto left = eval_field_at(tape, field, colloc.boundary.row(i));
      const auto right =
          eval_field_at(tape, field, colloc.boundary.row(i + 1));
      terms.boundary.push_back(square(left[0].val - right[0].val));
    }
  } else {
    for (Eigen::Index i = 0; i < colloc.boundary.rows(); ++i) {
      const auto out = eval_field_at(tape, field, colloc.boundary.row(i));
      terms.boundary.push_back(square(out[0].val));
    }
  }
  return terms;
}

}  // namespace wavepinn
