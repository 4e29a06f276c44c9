#include "wavepinn/jet.hpp"

#include <vector>

namespace wavepinn {

Jet2<Scalar> affine_combination(std::span<const Scalar> weights,
                                std::span<const Jet2<Scalar>> xs,
                                const Scalar& bias) {
  if (weights.size() != xs.size() || xs.empty())
    throw std::invalid_argument("affine_combination: size mismatch");
  Tape* tape = bias.tape();
  const int dim = xs[0].dim;
  const int hn = Jet2<Scalar>::hess_count(dim);

  std::vector<std::pair<std::int32_t, std::int32_t>> terms(weights.size());
  auto fuse = [&](auto component, std::int32_t bias_node) {
    double primal = bias_node >= 0 ? tape->value_at(bias_node) : 0.0;
    for (std::size_t k = 0; k < weights.size(); ++k) {
      const Scalar& x = component(xs[k]);
      terms[k] = {weights[k].node(), x.node()};
      primal += weights[k].value() * x.value();
    }
    return tape->emit_affine_dot(terms, bias_node, primal);
  };

  Jet2<Scalar> r;
  r.dim = dim;
  r.val = fuse([](const Jet2<Scalar>& x) { return x.val; }, bias.node());
  for (int i = 0; i < dim; ++i)
    r.grad[i] = fuse([i](const Jet2<Scalar>& x) { return x.grad[i]; }, -1);
  for (int h = 0; h < hn; ++h)
    r.hess[h] = fuse([h](const Jet2<Scalar>& x) { return x.hess[h]; }, -1);
  return r;
}

}  // namespace wavepinn
