#pragma once

// Scalar reverse-mode tape.
//
// Every differentiable quantity in the library is a node on a Tape: trainable
// parameter leaves, constants, per-point input leaves, and the primitive
// operations combining them. A single reverse sweep from any node yields the
// gradient with respect to all trainable leaves. Second-order input
// derivatives are layered on top by jet.hpp, whose components are themselves
// tape nodes, so parameter gradients of derivative quantities fall out of the
// same sweep.
//
// The tape is rebuilt per loss evaluation; there is no retained graph.

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace wavepinn {

// One entry per trainable parameter, aligned to registration order.
using GradientVector = Eigen::VectorXd;

enum class Op : std::uint8_t {
  Const,
  Param,
  Input,
  Add,
  Sub,
  Mul,
  Div,
  Neg,
  Square,
  Powi,
  Exp,
  Ln,
  Sin,
  Cos,
  Tanh,
  Softplus,
  AffineDot,
};

const char* op_name(Op op);

struct Node {
  Op op;
  std::int32_t a = -1;  // first operand
  std::int32_t b = -1;  // second operand / AffineDot: term count
  // Param: slot; Input: column; AffineDot: bias node (-1 for none).
  std::int32_t c = -1;
  double aux = 0.0;  // Const/Param/Input: stored leaf value; Powi: exponent
};

class Tape;

// Handle to one tape node. Valid only for the tape that created it.
class Scalar {
 public:
  Scalar() = default;
  Scalar(Tape* tape, std::int32_t node) : tape_(tape), node_(node) {}

  Tape* tape() const { return tape_; }
  std::int32_t node() const { return node_; }
  double value() const;
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  std::int32_t node_ = -1;
};

class Tape {
 public:
  struct Mark {
    std::size_t nodes = 0;
    std::size_t dot_terms = 0;
  };

  // Registers a trainable leaf; increments parameter_count.
  Scalar param(double value);
  // Non-trainable leaf.
  Scalar constant(double value);
  // Per-point data leaf for recorded programs; `column` names the data column
  // it binds to when the recording is replayed over a batch of points.
  Scalar input(double value, std::int32_t column);

  std::size_t size() const { return nodes_.size(); }
  std::size_t parameter_count() const { return param_nodes_.size(); }

  double value_at(std::int32_t node) const { return primal_[node]; }

  Mark mark() const { return {nodes_.size(), dot_terms_.size()}; }
  void rewind(const Mark& m);

  // dLoss/dtheta for every trainable leaf via one reverse sweep. Parameters
  // the loss does not reach get gradient 0.
  GradientVector backward(const Scalar& loss) const;

  // Re-executes every node from the leaves; used to check that the recorded
  // primals are reproduced bit-exactly.
  std::vector<double> recompute_primals() const;

  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<double>& primals() const { return primal_; }
  std::span<const std::int32_t> param_nodes() const { return param_nodes_; }
  std::span<const std::pair<std::int32_t, std::int32_t>> dot_terms() const {
    return dot_terms_;
  }

  // Low-level append used by the scalar operators and by jet affine fusion.
  Scalar emit(Op op, std::int32_t a, std::int32_t b, std::int32_t c,
              double aux, double primal);
  Scalar emit_affine_dot(std::span<const std::pair<std::int32_t, std::int32_t>>
                             terms,
                         std::int32_t bias, double primal);

 private:
  std::vector<Node> nodes_;
  std::vector<double> primal_;
  std::vector<std::int32_t> param_nodes_;
  // Interleaved (coefficient node, value node) pairs for AffineDot nodes.
  std::vector<std::pair<std::int32_t, std::int32_t>> dot_terms_;
};

// ---------------------------------------------------------------------------
// Scalar primitives. Operands must live on the same tape. Division by zero
// and ln of a non-positive value raise std::domain_error naming the opcode
// and node index.
// ---------------------------------------------------------------------------

Scalar operator+(const Scalar& a, const Scalar& b);
Scalar operator-(const Scalar& a, const Scalar& b);
Scalar operator*(const Scalar& a, const Scalar& b);
Scalar operator/(const Scalar& a, const Scalar& b);
Scalar operator-(const Scalar& a);

Scalar operator+(const Scalar& a, double b);
Scalar operator+(double a, const Scalar& b);
Scalar operator-(const Scalar& a, double b);
Scalar operator-(double a, const Scalar& b);
Scalar operator*(const Scalar& a, double b);
Scalar operator*(double a, const Scalar& b);
Scalar operator/(const Scalar& a, double b);
Scalar operator/(double a, const Scalar& b);

Scalar square(const Scalar& x);
Scalar powi(const Scalar& x, int n);
Scalar exp(const Scalar& x);
Scalar ln(const Scalar& x);
Scalar sin(const Scalar& x);
Scalar cos(const Scalar& x);
Scalar tanh(const Scalar& x);
// ln(1 + exp(x)), evaluated in an overflow-safe branch for large |x|. May
// underflow to exactly 0 in floating point for x below about -745 even though
// the exact value is positive.
Scalar softplus(const Scalar& x);

// scalar_param of the module contract.
inline Scalar scalar_param(Tape& tape, double value) { return tape.param(value); }

// Plain-double counterparts used by replay kernels and double-jet code.
double softplus_value(double x);
double sigmoid_value(double x);
double powi_value(double x, int n);

// Max over parameters of |analytic - central difference| / max(1, |analytic|).
// The objective returns (loss, gradient); only the loss is used for the
// finite-difference bumps. Frozen leaves are not part of theta and are
// therefore skipped by construction.
double grad_check(
    const std::function<std::pair<double, GradientVector>(
        const Eigen::VectorXd&)>& objective,
    const Eigen::VectorXd& theta, double step = 1e-5);

}  // namespace wavepinn
