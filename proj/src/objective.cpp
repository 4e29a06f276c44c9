#include "wavepinn/objective.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <mutex>
#include <thread>
#include <vector>

namespace wavepinn {

namespace {

// Jet component ids for input dimension D: 0 = value, 1..D = gradient,
// D+1 .. = Hessian upper triangle in row-major order.
int comp_count(int dim) { return 1 + dim + dim * (dim + 1) / 2; }
int grad_comp(int i) { return 1 + i; }
int hess_comp(int dim, int i, int j) {
  if (i > j) std::swap(i, j);
  return 1 + dim + i * dim - i * (i - 1) / 2 + (j - i);
}

// ---------------------------------------------------------------------------
// Recorded programs: a tape compiled down to the nodes its outputs reach.
// ---------------------------------------------------------------------------

struct Program {
  std::vector<Node> nodes;  // operands remapped; Param.c = local param index
  std::vector<std::int32_t> outputs;
  std::vector<Eigen::Index> param_slots;  // local param index -> theta slot
  int n_columns = 0;
};

Program compile_program(const Tape& tape, std::span<const Scalar> outputs,
                        std::span<const Eigen::Index> param_slots,
                        int n_columns) {
  const auto& nodes = tape.nodes();
  std::vector<char> live(nodes.size(), 0);
  for (const Scalar& s : outputs) live[s.node()] = 1;
  for (std::size_t i = nodes.size(); i-- > 0;) {
    if (!live[i]) continue;
    const Node& n = nodes[i];
    switch (n.op) {
      case Op::Const:
      case Op::Param:
      case Op::Input:
        break;
      case Op::AffineDot:
        throw std::logic_error("recorded programs must not contain AffineDot");
      default:
        if (n.a >= 0) live[n.a] = 1;
        if (n.b >= 0) live[n.b] = 1;
        break;
    }
  }
  // Parameters stay addressable even when unreferenced so the slot map is
  // total; a dead parameter simply gets zero adjoint.
  for (std::int32_t pn : tape.param_nodes()) live[pn] = 1;

  Program prog;
  prog.n_columns = n_columns;
  prog.param_slots.assign(param_slots.begin(), param_slots.end());
  std::vector<std::int32_t> remap(nodes.size(), -1);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (!live[i]) continue;
    remap[i] = static_cast<std::int32_t>(prog.nodes.size());
    Node n = nodes[i];
    if (n.op != Op::Const && n.op != Op::Param && n.op != Op::Input) {
      if (n.a >= 0) n.a = remap[n.a];
      if (n.b >= 0) n.b = remap[n.b];
    }
    prog.nodes.push_back(n);
  }
  for (const Scalar& s : outputs) prog.outputs.push_back(remap[s.node()]);
  return prog;
}

// Lane values are one contiguous column per program node.
struct ProgramScratch {
  Eigen::MatrixXd values;
  Eigen::MatrixXd adj;
};

void program_forward(const Program& prog, const Eigen::VectorXd& theta,
                     std::span<const double* const> columns,
                     Eigen::Index lanes, ProgramScratch& scratch) {
  Eigen::MatrixXd& v = scratch.values;
  const auto n_nodes = static_cast<Eigen::Index>(prog.nodes.size());
  if (v.rows() != lanes || v.cols() < n_nodes) v.resize(lanes, n_nodes);

  for (Eigen::Index i = 0; i < n_nodes; ++i) {
    const Node& n = prog.nodes[i];
    auto out = v.col(i);
    switch (n.op) {
      case Op::Const:
        out.setConstant(n.aux);
        break;
      case Op::Param:
        out.setConstant(theta[prog.param_slots[n.c]]);
        break;
      case Op::Input:
        out = Eigen::Map<const Eigen::VectorXd>(columns[n.c], lanes);
        break;
      case Op::Add: out = v.col(n.a) + v.col(n.b); break;
      case Op::Sub: out = v.col(n.a) - v.col(n.b); break;
      case Op::Mul: out = v.col(n.a).cwiseProduct(v.col(n.b)); break;
      case Op::Div: out = v.col(n.a).cwiseQuotient(v.col(n.b)); break;
      case Op::Neg: out = -v.col(n.a); break;
      case Op::Square: out = v.col(n.a).cwiseProduct(v.col(n.a)); break;
      case Op::Powi: {
        const int p = static_cast<int>(n.aux);
        out = v.col(n.a).unaryExpr([p](double x) { return powi_value(x, p); });
        break;
      }
      case Op::Exp: out = v.col(n.a).array().exp(); break;
      case Op::Ln: out = v.col(n.a).array().log(); break;
      case Op::Sin: out = v.col(n.a).array().sin(); break;
      case Op::Cos: out = v.col(n.a).array().cos(); break;
      case Op::Tanh: out = v.col(n.a).array().tanh(); break;
      case Op::Softplus:
        out = v.col(n.a).unaryExpr([](double x) { return softplus_value(x); });
        break;
      case Op::AffineDot:
        break;  // excluded at compile time
    }
  }
}

// Reverse sweep over a program whose forward values sit in scratch.values.
// Output adjoints are seeded either with constants or with per-lane vectors;
// input-column adjoints accumulate into input_adj[column] when non-null and
// parameter adjoints into theta_grad.
void program_backward(const Program& prog,
                      std::span<const std::pair<int, double>> const_seeds,
                      std::span<const double* const> vector_seeds,
                      std::span<double* const> input_adj,
                      Eigen::VectorXd& theta_grad, Eigen::Index lanes,
                      ProgramScratch& scratch) {
  const Eigen::MatrixXd& v = scratch.values;
  Eigen::MatrixXd& adj = scratch.adj;
  const auto n_nodes = static_cast<Eigen::Index>(prog.nodes.size());
  if (adj.rows() != lanes || adj.cols() < n_nodes) adj.resize(lanes, n_nodes);
  adj.leftCols(n_nodes).setZero();

  for (const auto& [out_idx, seed] : const_seeds)
    adj.col(prog.outputs[out_idx]).array() += seed;
  for (std::size_t k = 0; k < vector_seeds.size(); ++k)
    if (vector_seeds[k])
      adj.col(prog.outputs[k]) +=
          Eigen::Map<const Eigen::VectorXd>(vector_seeds[k], lanes);

  for (Eigen::Index i = n_nodes; i-- > 0;) {
    const Node& n = prog.nodes[i];
    const auto w = adj.col(i);
    switch (n.op) {
      case Op::Const:
        break;
      case Op::Param:
        theta_grad[prog.param_slots[n.c]] += w.sum();
        break;
      case Op::Input:
        if (input_adj[n.c])
          Eigen::Map<Eigen::VectorXd>(input_adj[n.c], lanes) += w;
        break;
      case Op::Add:
        adj.col(n.a) += w;
        adj.col(n.b) += w;
        break;
      case Op::Sub:
        adj.col(n.a) += w;
        adj.col(n.b) -= w;
        break;
      case Op::Mul:
        adj.col(n.a) += w.cwiseProduct(v.col(n.b));
        adj.col(n.b) += w.cwiseProduct(v.col(n.a));
        break;
      case Op::Div:
        adj.col(n.a) += w.cwiseQuotient(v.col(n.b));
        adj.col(n.b) -= w.cwiseProduct(v.col(i)).cwiseQuotient(v.col(n.b));
        break;
      case Op::Neg:
        adj.col(n.a) -= w;
        break;
      case Op::Square:
        adj.col(n.a) += 2.0 * w.cwiseProduct(v.col(n.a));
        break;
      case Op::Powi: {
        const int p = static_cast<int>(n.aux);
        adj.col(n.a) += w.cwiseProduct(v.col(n.a).unaryExpr(
            [p](double x) { return p * powi_value(x, p - 1); }));
        break;
      }
      case Op::Exp:
        adj.col(n.a) += w.cwiseProduct(v.col(i));
        break;
      case Op::Ln:
        adj.col(n.a) += w.cwiseQuotient(v.col(n.a));
        break;
      case Op::Sin:
        adj.col(n.a) += w.cwiseProduct(v.col(n.a).array().cos().matrix());
        break;
      case Op::Cos:
        adj.col(n.a) -= w.cwiseProduct(v.col(n.a).array().sin().matrix());
        break;
      case Op::Tanh:
        adj.col(n.a) +=
            w.cwiseProduct((1.0 - v.col(i).array().square()).matrix());
        break;
      case Op::Softplus:
        adj.col(n.a) += w.cwiseProduct(v.col(n.a).unaryExpr(
            [](double x) { return sigmoid_value(x); }));
        break;
      case Op::AffineDot:
        break;
    }
  }
}

enum Slot { kResidual = 0, kBoundary = 1, kInitial = 2, kSlotCount = 3 };

struct BatchKind {
  Eigen::MatrixXd points;  // n x n_raw_cols, coordinates plus data columns
  std::vector<std::vector<int>> pass_coord_cols;  // per forward pass
  Program head;
  std::vector<Slot> head_slots;  // loss slot per head output
  std::vector<int> live_comps;   // sorted live comp ids for the MLP pipeline
  std::vector<Program> act_progs;  // per layout instance, pruned to live_comps
  int n_raw_cols = 0;
  int n_comps_total = 0;
};

}  // namespace

// ---------------------------------------------------------------------------
// Impl
// ---------------------------------------------------------------------------

struct TrainObjective::Impl {
  const MlpModel* model;
  ProblemSpec problem;
  LossWeights weights;
  int threads;
  Eigen::Index block_lanes;

  std::vector<BatchKind> kinds;
  double slot_n[kSlotCount] = {0, 0, 0};

  struct BlockRef {
    int kind;
    Eigen::Index row0;
    Eigen::Index rows;
  };
  std::vector<BlockRef> blocks;

  Impl(const MlpModel& m, const ProblemSpec& p, const CollocationSet& colloc,
       const LossWeights& w, int nthreads)
      : model(&m), problem(p), weights(w), threads(std::max(1, nthreads)) {
    if (m.config().in_dim != p.in_dim() || m.config().out_dim != p.out_dim())
      throw std::invalid_argument("objective: model dims do not match problem");
    const int width = m.config().hidden_width;
    block_lanes = std::clamp<Eigen::Index>(16384 / std::max(1, width), 32, 512);

    build_batch_kinds(colloc);

    for (std::size_t k = 0; k < kinds.size(); ++k) {
      const Eigen::Index n = kinds[k].points.rows();
      for (Eigen::Index r0 = 0; r0 < n; r0 += block_lanes)
        blocks.push_back(
            {static_cast<int>(k), r0, std::min(block_lanes, n - r0)});
    }
  }

  int dim() const { return problem.in_dim(); }
  int out_dim() const { return problem.out_dim(); }

  // Records eval_activation applied to a full symbolic input jet, keeping
  // only the requested output components; the pruning drops every chain the
  // problem never reads (e.g. Hessian components for first-order residuals).
  Program record_activation(std::size_t inst,
                            std::span<const int> live_comps) const {
    Tape tape;
    const auto& layout = model->activation_layouts()[inst];
    ActivationSpec spec = bind_activation(
        tape, layout, model->params().data() + model->coeff_offset(inst));
    std::vector<Eigen::Index> slots;
    for (int k = 0; k < layout.trainable_count(); ++k)
      slots.push_back(model->coeff_offset(inst) + k);

    Jet2<Scalar> z;
    z.dim = dim();
    z.val = tape.input(0.3, 0);
    for (int i = 0; i < dim(); ++i)
      z.grad[i] = tape.input(0.1, grad_comp(i));
    int k = 0;
    for (int i = 0; i < dim(); ++i)
      for (int j = i; j < dim(); ++j, ++k)
        z.hess[k] = tape.input(0.05, hess_comp(dim(), i, j));

    Jet2<Scalar> out = eval_activation(effective_coeffs(spec), z);
    auto comp_of = [&](int c) -> Scalar {
      if (c == 0) return out.val;
      if (c <= dim()) return out.grad[c - 1];
      return out.hess[c - 1 - dim()];
    };
    std::vector<Scalar> outputs;
    for (int c : live_comps) outputs.push_back(comp_of(c));
    return compile_program(tape, outputs, slots, comp_count(dim()));
  }

  template <typename Builder>
  Program record_head(int n_raw_cols, int passes, const Builder& build) const {
    Tape tape;
    const int nc = comp_count(dim());
    auto raw = [&](int c) { return tape.input(0.37 + 0.11 * c, c); };
    auto out_jet = [&](int pass, int o) {
      Jet2<Scalar> u;
      u.dim = dim();
      const int base = n_raw_cols + (pass * out_dim() + o) * nc;
      u.val = tape.input(0.21, base);
      for (int i = 0; i < dim(); ++i)
        u.grad[i] = tape.input(0.13, base + grad_comp(i));
      int k = 0;
      for (int i = 0; i < dim(); ++i)
        for (int j = i; j < dim(); ++j, ++k)
          u.hess[k] = tape.input(0.07, base + hess_comp(dim(), i, j));
      return u;
    };
    std::vector<Scalar> outputs = build(tape, raw, out_jet);
    const int total_cols = n_raw_cols + passes * out_dim() * nc;
    return compile_program(tape, outputs, std::span<const Eigen::Index>(),
                           total_cols);
  }

  // Components the head reads, closed under the jet chain rule (a Hessian
  // component needs the matching gradient components; value is always live).
  std::vector<int> live_comps_of(const Program& head, int n_raw_cols) const {
    const int nc = comp_count(dim());
    std::vector<char> live(static_cast<std::size_t>(nc), 0);
    live[0] = 1;
    for (const Node& n : head.nodes)
      if (n.op == Op::Input && n.c >= n_raw_cols)
        live[(n.c - n_raw_cols) % nc] = 1;
    int k = 0;
    for (int i = 0; i < dim(); ++i)
      for (int j = i; j < dim(); ++j, ++k)
        if (live[1 + dim() + k]) {
          live[grad_comp(i)] = 1;
          live[grad_comp(j)] = 1;
        }
    std::vector<int> comps;
    for (int c = 0; c < nc; ++c)
      if (live[c]) comps.push_back(c);
    return comps;
  }

  void add_kind(Eigen::MatrixXd points,
                std::vector<std::vector<int>> pass_cols, Program head,
                std::vector<Slot> slots, int n_raw_cols) {
    BatchKind kind;
    kind.n_raw_cols = n_raw_cols;
    kind.n_comps_total = comp_count(dim());
    kind.live_comps = live_comps_of(head, n_raw_cols);
    kind.points = std::move(points);
    kind.pass_coord_cols = std::move(pass_cols);
    kind.head = std::move(head);
    kind.head_slots = std::move(slots);
    for (std::size_t inst = 0; inst < model->activation_layouts().size();
         ++inst)
      kind.act_progs.push_back(record_activation(inst, kind.live_comps));
    kinds.push_back(std::move(kind));
  }

  void build_batch_kinds(const CollocationSet& colloc) {
    if (colloc.interior.rows() == 0)
      throw std::invalid_argument("objective: empty interior point set");
    const bool needs_bc = problem.kind != ProblemKind::NavierStokes;
    if (needs_bc && (colloc.initial.rows() == 0 || colloc.boundary.rows() == 0))
      throw std::invalid_argument(
          "objective: empty initial or boundary point set");

    switch (problem.kind) {
      case ProblemKind::Reaction:
      case ProblemKind::Wave:
      case ProblemKind::Convection: {
        Program head = record_head(2, 1, [&](Tape&, auto&, auto& jet) {
          Jet2<Scalar> u = jet(0, 0);
          Scalar r;
          if (problem.kind == ProblemKind::Reaction)
            r = reaction_residual(u, problem.rho);
          else if (problem.kind == ProblemKind::Wave)
            r = wave_residual(u, problem.wave_speed_sq);
          else
            r = convection_residual(u, problem.convection_beta);
          return std::vector<Scalar>{square(r)};
        });
        slot_n[kResidual] = static_cast<double>(colloc.interior.rows());
        add_kind(colloc.interior, {{0, 1}}, std::move(head), {kResidual}, 2);

        Program ic_head = record_head(2, 1, [&](Tape&, auto& raw, auto& jet) {
          Jet2<Scalar> u = jet(0, 0);
          Scalar x = raw(0);
          Scalar term;
          if (problem.kind == ProblemKind::Reaction)
            term = square(u.val - reaction_ic(x));
          else if (problem.kind == ProblemKind::Convection)
            term = square(u.val - convection_ic(x));
          else
            term = square(u.val - wave_ic(x, problem.wave_beta)) +
                   square(u.d(1));
          return std::vector<Scalar>{term};
        });
        slot_n[kInitial] = static_cast<double>(colloc.initial.rows());
        add_kind(colloc.initial, {{0, 1}}, std::move(ic_head), {kInitial}, 2);

        if (colloc.periodic_pairs) {
          const Eigen::Index n_pairs = colloc.boundary.rows() / 2;
          Eigen::MatrixXd pts(n_pairs, 4);
          for (Eigen::Index i = 0; i < n_pairs; ++i) {
            pts(i, 0) = colloc.boundary(2 * i, 0);
            pts(i, 1) = colloc.boundary(2 * i, 1);
            pts(i, 2) = colloc.boundary(2 * i + 1, 0);
            pts(i, 3) = colloc.boundary(2 * i + 1, 1);
          }
          Program bc_head = record_head(4, 2, [&](Tape&, auto&, auto& jet) {
            return std::vector<Scalar>{square(jet(0, 0).val - jet(1, 0).val)};
          });
          slot_n[kBoundary] = static_cast<double>(n_pairs);
          add_kind(std::move(pts), {{0, 1}, {2, 3}}, std::move(bc_head),
                   {kBoundary}, 4);
        } else {
          Program bc_head = record_head(2, 1, [&](Tape&, auto&, auto& jet) {
            return std::vector<Scalar>{square(jet(0, 0).val)};
          });
          slot_n[kBoundary] = static_cast<double>(colloc.boundary.rows());
          add_kind(colloc.boundary, {{0, 1}}, std::move(bc_head), {kBoundary},
                   2);
        }
        break;
      }
      case ProblemKind::NavierStokes: {
        if (colloc.interior_data.rows() != colloc.interior.rows())
          throw std::invalid_argument(
              "objective: navier-stokes needs (u, v) reference data per "
              "collocation point");
        Eigen::MatrixXd pts(colloc.interior.rows(), 5);
        pts.leftCols(3) = colloc.interior;
        pts.rightCols(2) = colloc.interior_data;
        Program head = record_head(5, 1, [&](Tape&, auto& raw, auto& jet) {
          Jet2<Scalar> u = jet(0, 0);
          Jet2<Scalar> v = jet(0, 1);
          Jet2<Scalar> p = jet(0, 2);
          auto [ru, rv] =
              ns_residual(u, v, p, problem.lambda1, problem.lambda2);
          Scalar data = square(u.val - raw(3)) + square(v.val - raw(4));
          return std::vector<Scalar>{square(ru) + square(rv), data};
        });
        slot_n[kResidual] = static_cast<double>(pts.rows());
        slot_n[kInitial] = static_cast<double>(pts.rows());
        add_kind(std::move(pts), {{0, 1, 2}}, std::move(head),
                 {kResidual, kInitial}, 5);
        break;
      }
    }
  }

  // ---- evaluation ----

  struct WorkerScratch {
    ProgramScratch prog;
    std::vector<Eigen::MatrixXd> z, a;  // per (pass, layer)
    Eigen::MatrixXd z0[2], out, dout, dz, da;
    std::vector<Eigen::VectorXd> comp_cols, comp_adj;
    Eigen::VectorXd grad;
    double slot_sum[kSlotCount] = {0, 0, 0};
  };

  using RowMajorMap =
      Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                     Eigen::RowMajor>>;

  void forward_pass(const Eigen::VectorXd& theta, const BatchKind& kind,
                    int pass, Eigen::Index row0, Eigen::Index lanes,
                    WorkerScratch& ws) const {
    const int K = static_cast<int>(kind.live_comps.size());
    const auto& cfg = model->config();

    Eigen::MatrixXd& z0 = ws.z0[pass];
    z0.resize(cfg.in_dim, static_cast<Eigen::Index>(K) * lanes);
    for (int ci = 0; ci < K; ++ci) {
      const int c = kind.live_comps[ci];
      auto block = z0.middleCols(static_cast<Eigen::Index>(ci) * lanes, lanes);
      if (c == 0) {
        for (int d = 0; d < cfg.in_dim; ++d)
          block.row(d) = kind.points.col(kind.pass_coord_cols[pass][d])
                             .segment(row0, lanes)
                             .transpose();
      } else if (c <= dim()) {
        block.setZero();
        block.row(c - 1).setOnes();
      } else {
        block.setZero();
      }
    }

    const auto layers = model->layers();
    const std::size_t n_layers = layers.size();
    if (ws.z.size() < 2 * n_layers) {
      ws.z.resize(2 * n_layers);
      ws.a.resize(2 * n_layers);
    }

    const Eigen::MatrixXd* prev = &z0;
    for (std::size_t l = 0; l < n_layers; ++l) {
      const LayerShape& shape = layers[l];
      const bool is_output = l + 1 == n_layers;
      RowMajorMap w(theta.data() + shape.w_offset, shape.out, shape.in);
      Eigen::Map<const Eigen::VectorXd> b(theta.data() + shape.b_offset,
                                          shape.out);
      Eigen::MatrixXd& zmat = ws.z[pass * n_layers + l];
      zmat.noalias() = w * (*prev);
      for (int ci = 0; ci < K; ++ci)
        if (kind.live_comps[ci] == 0)
          zmat.middleCols(static_cast<Eigen::Index>(ci) * lanes, lanes)
              .colwise() += b;

      if (is_output && !cfg.output_activation) {
        ws.out = zmat;
        return;
      }
      const std::size_t inst =
          is_output ? model->layout_instance(cfg.hidden_layers - 1)
                    : model->layout_instance(static_cast<int>(l));
      Eigen::MatrixXd& amat = ws.a[pass * n_layers + l];
      run_activation_forward(theta, kind, inst, zmat, lanes, amat, ws);
      if (is_output) {
        ws.out = amat;
        return;
      }
      prev = &amat;
    }
  }

  void run_activation_forward(const Eigen::VectorXd& theta,
                              const BatchKind& kind, std::size_t inst,
                              const Eigen::MatrixXd& zmat, Eigen::Index lanes,
                              Eigen::MatrixXd& amat, WorkerScratch& ws) const {
    const int K = static_cast<int>(kind.live_comps.size());
    const Eigen::Index width = zmat.rows();
    const Eigen::Index plane = width * lanes;
    const Program& prog = kind.act_progs[inst];

    std::vector<const double*> cols(
        static_cast<std::size_t>(kind.n_comps_total), nullptr);
    for (int ci = 0; ci < K; ++ci)
      cols[kind.live_comps[ci]] =
          zmat.data() + static_cast<Eigen::Index>(ci) * plane;
    program_forward(prog, theta, cols, plane, ws.prog);

    amat.resize(width, static_cast<Eigen::Index>(K) * lanes);
    for (int ci = 0; ci < K; ++ci)
      Eigen::Map<Eigen::VectorXd>(
          amat.data() + static_cast<Eigen::Index>(ci) * plane, plane) =
          ws.prog.values.col(prog.outputs[ci]);
  }

  // Pulls ws.dout back through one pass, adding this block's contribution to
  // ws.grad.
  void backward_pass(const Eigen::VectorXd& theta, const BatchKind& kind,
                     int pass, Eigen::Index lanes, WorkerScratch& ws) const {
    const int K = static_cast<int>(kind.live_comps.size());
    const auto& cfg = model->config();
    const auto layers = model->layers();
    const std::size_t n_layers = layers.size();

    for (std::size_t l = n_layers; l-- > 0;) {
      const LayerShape& shape = layers[l];
      const bool is_output = l + 1 == n_layers;
      const Eigen::MatrixXd& zmat = ws.z[pass * n_layers + l];
      const Eigen::Index width = zmat.rows();
      const Eigen::Index plane = width * lanes;

      if (is_output && !cfg.output_activation) {
        ws.dz = ws.dout;
      } else {
        // Recompute this layer's activation program forward, then pull the
        // upstream adjoint through it.
        const std::size_t inst =
            is_output ? model->layout_instance(cfg.hidden_layers - 1)
                      : model->layout_instance(static_cast<int>(l));
        const Program& prog = kind.act_progs[inst];
        std::vector<const double*> cols(
            static_cast<std::size_t>(kind.n_comps_total), nullptr);
        for (int ci = 0; ci < K; ++ci)
          cols[kind.live_comps[ci]] =
              zmat.data() + static_cast<Eigen::Index>(ci) * plane;
        program_forward(prog, theta, cols, plane, ws.prog);

        ws.dz.setZero(width, static_cast<Eigen::Index>(K) * lanes);
        std::vector<const double*> seeds(static_cast<std::size_t>(K));
        std::vector<double*> in_adj(
            static_cast<std::size_t>(kind.n_comps_total), nullptr);
        for (int ci = 0; ci < K; ++ci) {
          seeds[ci] = ws.dout.data() + static_cast<Eigen::Index>(ci) * plane;
          in_adj[kind.live_comps[ci]] =
              ws.dz.data() + static_cast<Eigen::Index>(ci) * plane;
        }
        program_backward(prog, {}, seeds, in_adj, ws.grad, plane, ws.prog);
      }

      const Eigen::MatrixXd& prev =
          l == 0 ? ws.z0[pass] : ws.a[pass * n_layers + (l - 1)];
      Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                               Eigen::RowMajor>>
          dw(ws.grad.data() + shape.w_offset, shape.out, shape.in);
      dw.noalias() += ws.dz * prev.transpose();
      Eigen::Map<Eigen::VectorXd> db(ws.grad.data() + shape.b_offset,
                                     shape.out);
      for (int ci = 0; ci < K; ++ci)
        if (kind.live_comps[ci] == 0)
          db += ws.dz.middleCols(static_cast<Eigen::Index>(ci) * lanes, lanes)
                    .rowwise()
                    .sum();

      if (l > 0) {
        RowMajorMap w(theta.data() + shape.w_offset, shape.out, shape.in);
        ws.da.noalias() = w.transpose() * ws.dz;
        ws.dout = ws.da;
      }
    }
  }

  void process_block(const Eigen::VectorXd& theta, const BlockRef& block,
                     bool want_grad, const double* seed_scale,
                     WorkerScratch& ws) const {
    const BatchKind& kind = kinds[block.kind];
    const int K = static_cast<int>(kind.live_comps.size());
    const int passes = static_cast<int>(kind.pass_coord_cols.size());
    const Eigen::Index lanes = block.rows;
    const int nc = kind.n_comps_total;

    std::vector<Eigen::MatrixXd> outs(static_cast<std::size_t>(passes));
    for (int p = 0; p < passes; ++p) {
      forward_pass(theta, kind, p, block.row0, lanes, ws);
      outs[p] = ws.out;
    }

    const auto total_cols = static_cast<std::size_t>(kind.head.n_columns);
    std::vector<const double*> cols(total_cols, nullptr);
    for (int c = 0; c < kind.n_raw_cols; ++c)
      cols[c] = kind.points.data() +
                static_cast<Eigen::Index>(c) * kind.points.rows() + block.row0;

    ws.comp_cols.resize(static_cast<std::size_t>(passes) * out_dim() * K);
    std::size_t buf = 0;
    for (int p = 0; p < passes; ++p)
      for (int o = 0; o < out_dim(); ++o)
        for (int ci = 0; ci < K; ++ci, ++buf) {
          Eigen::VectorXd& col = ws.comp_cols[buf];
          col = outs[p]
                    .row(o)
                    .segment(static_cast<Eigen::Index>(ci) * lanes, lanes)
                    .transpose();
          cols[kind.n_raw_cols + (p * out_dim() + o) * nc +
               kind.live_comps[ci]] = col.data();
        }

    program_forward(kind.head, theta, cols, lanes, ws.prog);
    for (std::size_t k = 0; k < kind.head_slots.size(); ++k)
      ws.slot_sum[kind.head_slots[k]] +=
          ws.prog.values.col(kind.head.outputs[k]).sum();

    if (!want_grad) return;

    // Seeds carry lambda / N, so block gradients are final once merged.
    std::vector<std::pair<int, double>> seeds;
    for (std::size_t k = 0; k < kind.head_slots.size(); ++k)
      seeds.emplace_back(static_cast<int>(k), seed_scale[kind.head_slots[k]]);

    ws.comp_adj.resize(ws.comp_cols.size());
    std::vector<double*> in_adj(total_cols, nullptr);
    buf = 0;
    for (int p = 0; p < passes; ++p)
      for (int o = 0; o < out_dim(); ++o)
        for (int ci = 0; ci < K; ++ci, ++buf) {
          ws.comp_adj[buf].setZero(lanes);
          in_adj[kind.n_raw_cols + (p * out_dim() + o) * nc +
                 kind.live_comps[ci]] = ws.comp_adj[buf].data();
        }
    program_backward(kind.head, seeds, {}, in_adj, ws.grad, lanes, ws.prog);

    for (int p = 0; p < passes; ++p) {
      ws.dout.resize(out_dim(), static_cast<Eigen::Index>(K) * lanes);
      buf = static_cast<std::size_t>(p) * out_dim() * K;
      for (int o = 0; o < out_dim(); ++o)
        for (int ci = 0; ci < K; ++ci)
          ws.dout.row(o).segment(static_cast<Eigen::Index>(ci) * lanes,
                                 lanes) =
              ws.comp_adj[buf + static_cast<std::size_t>(o) * K + ci]
                  .transpose();
      backward_pass(theta, kind, p, lanes, ws);
    }
  }

  double run(const Eigen::VectorXd& theta, Eigen::VectorXd* grad,
             LossBreakdown* breakdown) const {
    if (theta.size() != model->parameter_count())
      throw std::invalid_argument("objective: theta size mismatch");
    double seed_scale[kSlotCount] = {0, 0, 0};
    const double lambdas[kSlotCount] = {weights.lambda_r, weights.lambda_b,
                                        weights.lambda_i};
    for (int s = 0; s < kSlotCount; ++s)
      if (slot_n[s] > 0) seed_scale[s] = lambdas[s] / slot_n[s];

    double slot_total[kSlotCount] = {0, 0, 0};
    if (grad) grad->setZero(theta.size());

    std::atomic<std::size_t> next{0};
    std::mutex commit_mutex;
    std::condition_variable commit_cv;
    std::size_t turn = 0;
    std::exception_ptr error;

    // Blocks are processed in parallel but committed strictly in block order,
    // so the reduction tree is fixed no matter how many threads run.
    auto worker = [&]() {
      WorkerScratch ws;
      ws.grad.setZero(theta.size());
      while (true) {
        const std::size_t b = next.fetch_add(1);
        if (b >= blocks.size()) break;
        std::exception_ptr block_error;
        for (double& s : ws.slot_sum) s = 0.0;
        if (grad) ws.grad.setZero();
        try {
          process_block(theta, blocks[b], grad != nullptr, seed_scale, ws);
        } catch (...) {
          block_error = std::current_exception();
        }
        std::unique_lock<std::mutex> lock(commit_mutex);
        commit_cv.wait(lock, [&] { return turn == b; });
        if (block_error && !error) error = block_error;
        if (!error) {
          for (int s = 0; s < kSlotCount; ++s) slot_total[s] += ws.slot_sum[s];
          if (grad) *grad += ws.grad;
        }
        ++turn;
        commit_cv.notify_all();
      }
    };

    if (threads <= 1 || blocks.size() <= 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      const int n = std::min<int>(threads, static_cast<int>(blocks.size()));
      pool.reserve(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) pool.emplace_back(worker);
      for (auto& t : pool) t.join();
    }
    if (error) std::rethrow_exception(error);

    LossBreakdown bd;
    bd.residual_mse =
        slot_n[kResidual] > 0 ? slot_total[kResidual] / slot_n[kResidual] : 0.0;
    bd.boundary_mse =
        slot_n[kBoundary] > 0 ? slot_total[kBoundary] / slot_n[kBoundary] : 0.0;
    bd.initial_mse =
        slot_n[kInitial] > 0 ? slot_total[kInitial] / slot_n[kInitial] : 0.0;
    bd.total = weights.lambda_r * bd.residual_mse +
               weights.lambda_b * bd.boundary_mse +
               weights.lambda_i * bd.initial_mse;
    if (breakdown) *breakdown = bd;
    return bd.total;
  }
};

TrainObjective::TrainObjective(const MlpModel& model,
                               const ProblemSpec& problem,
                               const CollocationSet& colloc,
                               const LossWeights& weights, int threads)
    : impl_(std::make_unique<Impl>(model, problem, colloc, weights, threads)) {}

TrainObjective::~TrainObjective() = default;

double TrainObjective::eval(const Eigen::VectorXd& theta,
                            Eigen::VectorXd* grad,
                            LossBreakdown* breakdown) const {
  return impl_->run(theta, grad, breakdown);
}

Objective TrainObjective::as_objective() const {
  return [this](const Eigen::VectorXd& theta, Eigen::VectorXd& grad) {
    return eval(theta, &grad, nullptr);
  };
}

}  // namespace wavepinn
