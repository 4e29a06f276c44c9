#pragma once

// The adaptive wavelet-based activation family: a tanh carrier modulated by a
// trainable wavelet envelope (Mexican hat, Morlet, Gaussian, Gabor, Hermite).
// Raw coefficients are mapped through softplus so every effective coefficient
// stays strictly positive; W-variants freeze the tanh scaling for the whole
// run while the wavelet coefficients remain trainable.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wavepinn/jet.hpp"
#include "wavepinn/tape.hpp"

namespace wavepinn {

enum class ActivationFamily {
  Tanh,
  SoftMexTanh,
  SoftMorTanh,
  SoftGaussTanh,
  SoftGaborTanh,
  SoftHerTanh,
};

struct ActivationKind {
  ActivationFamily family = ActivationFamily::Tanh;
  int hermite_order = 0;  // 1..4, SoftHerTanh only
  bool w_variant = false; // fixed beta; meaningful for the Soft* kinds only

  bool operator==(const ActivationKind&) const = default;
};

// Exact lowercase external names: tanh, softmextanh, softmortanh,
// softgausstanh, softgabortanh, softher1tanh..softher4tanh, with suffix `w`
// for W-variants.
std::string activation_name(const ActivationKind& kind);
std::optional<ActivationKind> parse_activation_name(std::string_view name);
std::vector<ActivationKind> all_activation_kinds(bool include_w_variants);

// How "initial trainable parameters are set to 1" is interpreted: as the raw
// (pre-softplus) values, giving effective coefficients softplus(1) ~ 1.313, or
// as the effective values, via raw = softplus^-1(1).
enum class CoeffInit { RawOne, EffectiveOne };

// Which coefficients a kind owns, their initial raw values, and whether each
// is trainable. Canonical order follows the defining formulas:
// Mex (alpha, beta, gamma); Mor (omega, sigma, beta); Gauss (alpha, beta);
// Gabor (sigma, omega, beta); Her (alpha, beta).
struct ActivationLayout {
  struct Coeff {
    char name;        // 'a','b','g','w','s'
    double raw_init;
    bool trainable;
  };

  ActivationKind kind;
  std::vector<Coeff> coeffs;

  int trainable_count() const;

  // gabor_omega_init must be 3 or 5 and applies to Gabor kinds only.
  static ActivationLayout make(const ActivationKind& kind,
                               double gabor_omega_init,
                               CoeffInit mode = CoeffInit::RawOne);
};

// Raw (pre-softplus) coefficients registered on a tape. Frozen coefficients
// are constant nodes, so they never receive gradient and their value is
// bit-identical across any number of optimizer steps.
struct ActivationSpec {
  ActivationKind kind;
  std::optional<Scalar> raw_alpha, raw_beta, raw_gamma, raw_omega, raw_sigma;
};

ActivationSpec init_activation(Tape& tape, const ActivationKind& kind,
                               double gabor_omega_init = 3.0,
                               CoeffInit mode = CoeffInit::RawOne);

// Binds a layout with explicit raw values for the trainable coefficients (in
// canonical order); frozen coefficients keep their layout values as constants.
// Passing nullptr uses the layout's initial values for everything.
ActivationSpec bind_activation(Tape& tape, const ActivationLayout& layout,
                               const double* trainable_raw);

inline Scalar softplus_map(const Scalar& raw) { return softplus(raw); }

// Effective (post-softplus) coefficients, in whatever scalar algebra the
// evaluation runs in.
template <typename T>
struct ActivationCoeffs {
  ActivationKind kind;
  T alpha{}, beta{}, gamma{}, omega{}, sigma{};
};

ActivationCoeffs<Scalar> effective_coeffs(const ActivationSpec& spec);
ActivationCoeffs<double> effective_coeffs_value(
    const ActivationLayout& layout, const double* trainable_raw);

namespace detail {

template <typename T>
Jet2<T> gaussian_envelope_alpha(const T& alpha, const Jet2<T>& x) {
  // exp(-alpha x^2)
  return exp(-scale(square(x), alpha));
}

template <typename T>
Jet2<T> gaussian_envelope_sigma(const T& sigma, const Jet2<T>& x) {
  // exp(-x^2 / (2 sigma^2))
  T q = detail::constant_like(sigma, 1.0) / (2.0 * (sigma * sigma));
  return exp(-scale(square(x), q));
}

}  // namespace detail

template <typename T>
Jet2<T> hermite_poly(int n, const Jet2<T>& x) {
  switch (n) {
    case 1: return scale(x, 2.0);
    case 2: return scale(square(x), 4.0) - 2.0;
    case 3: return scale(powi(x, 3), 8.0) - scale(x, 12.0);
    case 4:
      return (scale(powi(x, 4), 16.0) - scale(square(x), 48.0)) + 12.0;
    default:
      throw std::invalid_argument("hermite_poly: unsupported order " +
                                  std::to_string(n));
  }
}

template <typename T>
Jet2<T> eval_activation(const ActivationCoeffs<T>& c, const Jet2<T>& x) {
  switch (c.kind.family) {
    case ActivationFamily::Tanh:
      return tanh(x);
    case ActivationFamily::SoftMexTanh: {
      Jet2<T> t = tanh(scale(x, c.beta));
      Jet2<T> mex = 1.0 - scale(square(x), c.gamma);
      return t * mex * detail::gaussian_envelope_alpha(c.alpha, x);
    }
    case ActivationFamily::SoftMorTanh: {
      Jet2<T> carrier = cos(scale(x, c.omega));
      return carrier * detail::gaussian_envelope_sigma(c.sigma, x) *
             tanh(scale(x, c.beta));
    }
    case ActivationFamily::SoftGaussTanh:
      return tanh(scale(x, c.beta)) *
             detail::gaussian_envelope_alpha(c.alpha, x);
    case ActivationFamily::SoftGaborTanh:
      return tanh(scale(x, c.beta)) *
             detail::gaussian_envelope_sigma(c.sigma, x) *
             cos(scale(x, c.omega));
    case ActivationFamily::SoftHerTanh:
      return tanh(scale(x, c.beta)) * hermite_poly(c.kind.hermite_order, x) *
             detail::gaussian_envelope_alpha(c.alpha, x);
  }
  throw std::logic_error("eval_activation: unknown activation family");
}

// Convenience overload used by the tape route.
Jet2<Scalar> eval_activation(const ActivationSpec& spec,
                             const Jet2<Scalar>& x);

}  // namespace wavepinn
