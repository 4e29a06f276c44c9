#include "wavepinn/activations.hpp"

#include <cmath>

namespace wavepinn {

std::string activation_name(const ActivationKind& kind) {
  std::string base;
  switch (kind.family) {
    case ActivationFamily::Tanh: return "tanh";
    case ActivationFamily::SoftMexTanh: base = "softmextanh"; break;
    case ActivationFamily::SoftMorTanh: base = "softmortanh"; break;
    case ActivationFamily::SoftGaussTanh: base = "softgausstanh"; break;
    case ActivationFamily::SoftGaborTanh: base = "softgabortanh"; break;
    case ActivationFamily::SoftHerTanh:
      base = "softher" + std::to_string(kind.hermite_order) + "tanh";
      break;
  }
  if (kind.w_variant) base += 'w';
  return base;
}

std::optional<ActivationKind> parse_activation_name(std::string_view name) {
  ActivationKind kind;
  if (name == "tanh") return kind;

  std::string_view body = name;
  if (!body.empty() && body.back() == 'w') {
    kind.w_variant = true;
    body.remove_suffix(1);
  }
  if (body == "softmextanh")
    kind.family = ActivationFamily::SoftMexTanh;
  else if (body == "softmortanh")
    kind.family = ActivationFamily::SoftMorTanh;
  else if (body == "softgausstanh")
    kind.family = ActivationFamily::SoftGaussTanh;
  else if (body == "softgabortanh")
    kind.family = ActivationFamily::SoftGaborTanh;
  else if (body.size() == 12 && body.starts_with("softher") &&
           body.ends_with("tanh") && body[7] >= '1' && body[7] <= '4') {
    kind.family = ActivationFamily::SoftHerTanh;
    kind.hermite_order = body[7] - '0';
  } else {
    return std::nullopt;
  }
  return kind;
}

std::vector<ActivationKind> all_activation_kinds(bool include_w_variants) {
  std::vector<ActivationKind> kinds;
  kinds.push_back({ActivationFamily::Tanh, 0, false});
  auto add = [&](ActivationFamily family, int order) {
    kinds.push_back({family, order, false});
    if (include_w_variants) kinds.push_back({family, order, true});
  };
  add(ActivationFamily::SoftMexTanh, 0);
  add(ActivationFamily::SoftMorTanh, 0);
  add(ActivationFamily::SoftGaussTanh, 0);
  add(ActivationFamily::SoftGaborTanh, 0);
  for (int n = 1; n <= 4; ++n) add(ActivationFamily::SoftHerTanh, n);
  return kinds;
}

int ActivationLayout::trainable_count() const {
  int n = 0;
  for (const auto& c : coeffs) n += c.trainable ? 1 : 0;
  return n;
}

ActivationLayout ActivationLayout::make(const ActivationKind& kind,
                                        double gabor_omega_init,
                                        CoeffInit mode) {
  if (gabor_omega_init != 3.0 && gabor_omega_init != 5.0)
    throw std::invalid_argument("gabor_omega_init must be 3 or 5");

  // softplus(raw) = v  <=>  raw = ln(e^v - 1)
  const auto raw_for = [mode](double v) {
    return mode == CoeffInit::RawOne ? v : std::log(std::expm1(v));
  };
  const double one = raw_for(1.0);
  const double omega_init = raw_for(gabor_omega_init);
  const double beta_init = one;
  const bool beta_trainable = !kind.w_variant;

  ActivationLayout layout;
  layout.kind = kind;
  switch (kind.family) {
    case ActivationFamily::Tanh:
      break;
    case ActivationFamily::SoftMexTanh:
      layout.coeffs = {{'a', one, true},
                       {'b', beta_init, beta_trainable},
                       {'g', one, true}};
      break;
    case ActivationFamily::SoftMorTanh:
      layout.coeffs = {{'w', one, true},
                       {'s', one, true},
                       {'b', beta_init, beta_trainable}};
      break;
    case ActivationFamily::SoftGaussTanh:
      layout.coeffs = {{'a', one, true}, {'b', beta_init, beta_trainable}};
      break;
    case ActivationFamily::SoftGaborTanh:
      layout.coeffs = {{'s', one, true},
                       {'w', omega_init, true},
                       {'b', beta_init, beta_trainable}};
      break;
    case ActivationFamily::SoftHerTanh:
      layout.coeffs = {{'a', one, true}, {'b', beta_init, beta_trainable}};
      break;
  }
  return layout;
}

ActivationSpec bind_activation(Tape& tape, const ActivationLayout& layout,
                               const double* trainable_raw) {
  ActivationSpec spec;
  spec.kind = layout.kind;
  std::size_t next = 0;
  for (const auto& c : layout.coeffs) {
    Scalar s;
    if (c.trainable) {
      const double v = trainable_raw ? trainable_raw[next] : c.raw_init;
      ++next;
      s = tape.param(v);
    } else {
      s = tape.constant(c.raw_init);
    }
    switch (c.name) {
      case 'a': spec.raw_alpha = s; break;
      case 'b': spec.raw_beta = s; break;
      case 'g': spec.raw_gamma = s; break;
      case 'w': spec.raw_omega = s; break;
      case 's': spec.raw_sigma = s; break;
    }
  }
  return spec;
}

ActivationSpec init_activation(Tape& tape, const ActivationKind& kind,
                               double gabor_omega_init, CoeffInit mode) {
  return bind_activation(
      tape, ActivationLayout::make(kind, gabor_omega_init, mode), nullptr);
}

ActivationCoeffs<Scalar> effective_coeffs(const ActivationSpec& spec) {
  ActivationCoeffs<Scalar> c;
  c.kind = spec.kind;
  if (spec.raw_alpha) c.alpha = softplus_map(*spec.raw_alpha);
  if (spec.raw_beta) c.beta = softplus_map(*spec.raw_beta);
  if (spec.raw_gamma) c.gamma = softplus_map(*spec.raw_gamma);
  if (spec.raw_omega) c.omega = softplus_map(*spec.raw_omega);
  if (spec.raw_sigma) c.sigma = softplus_map(*spec.raw_sigma);
  return c;
}

ActivationCoeffs<double> effective_coeffs_value(const ActivationLayout& layout,
                                                const double* trainable_raw) {
  ActivationCoeffs<double> c;
  c.kind = layout.kind;
  std::size_t next = 0;
  for (const auto& coeff : layout.coeffs) {
    const double raw = coeff.trainable && trainable_raw ? trainable_raw[next]
                                                        : coeff.raw_init;
    if (coeff.trainable) ++next;
    const double v = softplus_value(raw);
    switch (coeff.name) {
      case 'a': c.alpha = v; break;
      case 'b': c.beta = v; break;
      case 'g': c.gamma = v; break;
      case 'w': c.omega = v; break;
      case 's': c.sigma = v; break;
    }
  }
  return c;
}

Jet2<Scalar> eval_activation(const ActivationSpec& spec,
                             const Jet2<Scalar>& x) {
  return eval_activation(effective_coeffs(spec), x);
}

}  // namespace wavepinn
