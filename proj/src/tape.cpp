#include "wavepinn/tape.hpp"

#include <cmath>

namespace wavepinn {

const char* op_name(Op op) {
  switch (op) {
    case Op::Const: return "const";
    case Op::Param: return "param";
    case Op::Input: return "input";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::Div: return "div";
    case Op::Neg: return "neg";
    case Op::Square: return "square";
    case Op::Powi: return "powi";
    case Op::Exp: return "exp";
    case Op::Ln: return "ln";
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Tanh: return "tanh";
    case Op::Softplus: return "softplus";
    case Op::AffineDot: return "affine_dot";
  }
  return "?";
}

double Scalar::value() const { return tape_->value_at(node_); }

Scalar Tape::emit(Op op, std::int32_t a, std::int32_t b, std::int32_t c,
                  double aux, double primal) {
  const auto idx = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(Node{op, a, b, c, aux});
  primal_.push_back(primal);
  return Scalar(this, idx);
}

Scalar Tape::param(double value) {
  const auto slot = static_cast<std::int32_t>(param_nodes_.size());
  Scalar s = emit(Op::Param, -1, -1, slot, value, value);
  param_nodes_.push_back(s.node());
  return s;
}

Scalar Tape::constant(double value) {
  return emit(Op::Const, -1, -1, -1, value, value);
}

Scalar Tape::input(double value, std::int32_t column) {
  return emit(Op::Input, -1, -1, column, value, value);
}

Scalar Tape::emit_affine_dot(
    std::span<const std::pair<std::int32_t, std::int32_t>> terms,
    std::int32_t bias, double primal) {
  const auto start = static_cast<std::int32_t>(dot_terms_.size());
  dot_terms_.insert(dot_terms_.end(), terms.begin(), terms.end());
  return emit(Op::AffineDot, start, static_cast<std::int32_t>(terms.size()),
              bias, 0.0, primal);
}

void Tape::rewind(const Mark& m) {
  if (m.nodes > nodes_.size() || m.dot_terms > dot_terms_.size())
    throw std::logic_error("tape rewind past the end");
  if (!param_nodes_.empty() &&
      static_cast<std::size_t>(param_nodes_.back()) >= m.nodes)
    throw std::logic_error("tape rewind would drop registered parameters");
  nodes_.resize(m.nodes);
  primal_.resize(m.nodes);
  dot_terms_.resize(m.dot_terms);
}

namespace {

[[noreturn]] void domain_error(const char* op, std::int32_t node,
                               const char* what) {
  throw std::domain_error(std::string(op) + ": " + what + " at node " +
                          std::to_string(node));
}

void check_same_tape(const Scalar& a, const Scalar& b) {
  if (a.tape() != b.tape())
    throw std::invalid_argument("scalar operands live on different tapes");
}

}  // namespace

double softplus_value(double x) {
  if (x > 30.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double sigmoid_value(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double powi_value(double x, int n) {
  if (n < 0) return 1.0 / powi_value(x, -n);
  double r = 1.0, base = x;
  for (int k = n; k > 0; k >>= 1) {
    if (k & 1) r *= base;
    base *= base;
  }
  return r;
}

Scalar operator+(const Scalar& a, const Scalar& b) {
  check_same_tape(a, b);
  return a.tape()->emit(Op::Add, a.node(), b.node(), -1, 0.0,
                        a.value() + b.value());
}

Scalar operator-(const Scalar& a, const Scalar& b) {
  check_same_tape(a, b);
  return a.tape()->emit(Op::Sub, a.node(), b.node(), -1, 0.0,
                        a.value() - b.value());
}

Scalar operator*(const Scalar& a, const Scalar& b) {
  check_same_tape(a, b);
  return a.tape()->emit(Op::Mul, a.node(), b.node(), -1, 0.0,
                        a.value() * b.value());
}

Scalar operator/(const Scalar& a, const Scalar& b) {
  check_same_tape(a, b);
  if (b.value() == 0.0) domain_error("div", b.node(), "division by zero");
  return a.tape()->emit(Op::Div, a.node(), b.node(), -1, 0.0,
                        a.value() / b.value());
}

Scalar operator-(const Scalar& a) {
  return a.tape()->emit(Op::Neg, a.node(), -1, -1, 0.0, -a.value());
}

Scalar operator+(const Scalar& a, double b) { return a + a.tape()->constant(b); }
Scalar operator+(double a, const Scalar& b) { return b.tape()->constant(a) + b; }
Scalar operator-(const Scalar& a, double b) { return a - a.tape()->constant(b); }
Scalar operator-(double a, const Scalar& b) { return b.tape()->constant(a) - b; }
Scalar operator*(const Scalar& a, double b) { return a * a.tape()->constant(b); }
Scalar operator*(double a, const Scalar& b) { return b.tape()->constant(a) * b; }
Scalar operator/(const Scalar& a, double b) { return a / a.tape()->constant(b); }
Scalar operator/(double a, const Scalar& b) { return b.tape()->constant(a) / b; }

Scalar square(const Scalar& x) {
  return x.tape()->emit(Op::Square, x.node(), -1, -1, 0.0,
                        x.value() * x.value());
}

Scalar powi(const Scalar& x, int n) {
  return x.tape()->emit(Op::Powi, x.node(), -1, -1, static_cast<double>(n),
                        powi_value(x.value(), n));
}

Scalar exp(const Scalar& x) {
  return x.tape()->emit(Op::Exp, x.node(), -1, -1, 0.0, std::exp(x.value()));
}

Scalar ln(const Scalar& x) {
  if (!(x.value() > 0.0)) domain_error("ln", x.node(), "non-positive operand");
  return x.tape()->emit(Op::Ln, x.node(), -1, -1, 0.0, std::log(x.value()));
}

Scalar sin(const Scalar& x) {
  return x.tape()->emit(Op::Sin, x.node(), -1, -1, 0.0, std::sin(x.value()));
}

Scalar cos(const Scalar& x) {
  return x.tape()->emit(Op::Cos, x.node(), -1, -1, 0.0, std::cos(x.value()));
}

Scalar tanh(const Scalar& x) {
  return x.tape()->emit(Op::Tanh, x.node(), -1, -1, 0.0, std::tanh(x.value()));
}

Scalar softplus(const Scalar& x) {
  return x.tape()->emit(Op::Softplus, x.node(), -1, -1, 0.0,
                        softplus_value(x.value()));
}

GradientVector Tape::backward(const Scalar& loss) const {
  if (loss.tape() != this || loss.node() < 0 ||
      static_cast<std::size_t>(loss.node()) >= nodes_.size())
    throw std::invalid_argument("backward: loss is not a node of this tape");

  std::vector<double> adj(static_cast<std::size_t>(loss.node()) + 1, 0.0);
  adj[loss.node()] = 1.0;

  for (std::int32_t i = loss.node(); i >= 0; --i) {
    const double w = adj[i];
    if (w == 0.0) continue;
    const Node& n = nodes_[i];
    switch (n.op) {
      case Op::Const:
      case Op::Param:
      case Op::Input:
        break;
      case Op::Add:
        adj[n.a] += w;
        adj[n.b] += w;
        break;
      case Op::Sub:
        adj[n.a] += w;
        adj[n.b] -= w;
        break;
      case Op::Mul:
        adj[n.a] += w * primal_[n.b];
        adj[n.b] += w * primal_[n.a];
        break;
      case Op::Div:
        adj[n.a] += w / primal_[n.b];
        adj[n.b] -= w * primal_[i] / primal_[n.b];
        break;
      case Op::Neg:
        adj[n.a] -= w;
        break;
      case Op::Square:
        adj[n.a] += w * 2.0 * primal_[n.a];
        break;
      case Op::Powi: {
        const int p = static_cast<int>(n.aux);
        adj[n.a] += w * p * powi_value(primal_[n.a], p - 1);
        break;
      }
      case Op::Exp:
        adj[n.a] += w * primal_[i];
        break;
      case Op::Ln:
        adj[n.a] += w / primal_[n.a];
        break;
      case Op::Sin:
        adj[n.a] += w * std::cos(primal_[n.a]);
        break;
      case Op::Cos:
        adj[n.a] -= w * std::sin(primal_[n.a]);
        break;
      case Op::Tanh:
        adj[n.a] += w * (1.0 - primal_[i] * primal_[i]);
        break;
      case Op::Softplus:
        adj[n.a] += w * sigmoid_value(primal_[n.a]);
        break;
      case Op::AffineDot: {
        for (std::int32_t k = 0; k < n.b; ++k) {
          const auto& [cn, xn] = dot_terms_[n.a + k];
          adj[cn] += w * primal_[xn];
          adj[xn] += w * primal_[cn];
        }
        if (n.c >= 0) adj[n.c] += w;
        break;
      }
    }
  }

  GradientVector grad = GradientVector::Zero(
      static_cast<Eigen::Index>(param_nodes_.size()));
  for (std::size_t s = 0; s < param_nodes_.size(); ++s) {
    const std::int32_t pn = param_nodes_[s];
    if (pn <= loss.node()) grad[static_cast<Eigen::Index>(s)] = adj[pn];
  }
  return grad;
}

std::vector<double> Tape::recompute_primals() const {
  std::vector<double> v(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    switch (n.op) {
      case Op::Const:
      case Op::Param:
      case Op::Input:
        v[i] = n.aux;
        break;
      case Op::Add: v[i] = v[n.a] + v[n.b]; break;
      case Op::Sub: v[i] = v[n.a] - v[n.b]; break;
      case Op::Mul: v[i] = v[n.a] * v[n.b]; break;
      case Op::Div: v[i] = v[n.a] / v[n.b]; break;
      case Op::Neg: v[i] = -v[n.a]; break;
      case Op::Square: v[i] = v[n.a] * v[n.a]; break;
      case Op::Powi: v[i] = powi_value(v[n.a], static_cast<int>(n.aux)); break;
      case Op::Exp: v[i] = std::exp(v[n.a]); break;
      case Op::Ln: v[i] = std::log(v[n.a]); break;
      case Op::Sin: v[i] = std::sin(v[n.a]); break;
      case Op::Cos: v[i] = std::cos(v[n.a]); break;
      case Op::Tanh: v[i] = std::tanh(v[n.a]); break;
      case Op::Softplus: v[i] = softplus_value(v[n.a]); break;
      case Op::AffineDot: {
        double acc = n.c >= 0 ? v[n.c] : 0.0;
        for (std::int32_t k = 0; k < n.b; ++k) {
          const auto& [cn, xn] = dot_terms_[n.a + k];
          acc += v[cn] * v[xn];
        }
        v[i] = acc;
        break;
      }
    }
  }
  return v;
}

double grad_check(
    const std::function<std::pair<double, GradientVector>(
        const Eigen::VectorXd&)>& objective,
    const Eigen::VectorXd& theta, double step) {
  const auto [f0, grad] = objective(theta);
  (void)f0;
  double worst = 0.0;
  Eigen::VectorXd bumped = theta;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    bumped[i] = theta[i] + step;
    const double fp = objective(bumped).first;
    bumped[i] = theta[i] - step;
    const double fm = objective(bumped).first;
    bumped[i] = theta[i];
    const double fd = (fp - fm) / (2.0 * step);
    const double err =
        std::abs(grad[i] - fd) / std::max(1.0, std::abs(grad[i]));
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace wavepinn
