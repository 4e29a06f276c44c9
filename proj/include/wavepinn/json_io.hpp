#pragma once

#include <json.hpp>

#include "wavepinn/network.hpp"

namespace wavepinn {

inline void to_json(nlohmann::json& j, const ActivationKind& kind) {
  j = activation_name(kind);
}

inline void from_json(const nlohmann::json& j, ActivationKind& kind) {
  const auto parsed = parse_activation_name(j.get<std::string>());
  if (!parsed)
    throw std::invalid_argument("unknown activation name: " +
                                j.get<std::string>());
  kind = *parsed;
}

inline void to_json(nlohmann::json& j, const CoeffInit& mode) {
  j = mode == CoeffInit::RawOne ? "raw_one" : "effective_one";
}

inline void from_json(const nlohmann::json& j, CoeffInit& mode) {
  const auto s = j.get<std::string>();
  if (s == "raw_one")
    mode = CoeffInit::RawOne;
  else if (s == "effective_one")
    mode = CoeffInit::EffectiveOne;
  else
    throw std::invalid_argument("unknown coeff_init mode: " + s);
}

inline void to_json(nlohmann::json& j, const MlpConfig& c) {
  j = nlohmann::json{{"in_dim", c.in_dim},
                     {"out_dim", c.out_dim},
                     {"hidden_layers", c.hidden_layers},
                     {"hidden_width", c.hidden_width},
                     {"activation", c.activation},
                     {"gabor_omega_init", c.gabor_omega_init},
                     {"coeff_init", c.coeff_init},
                     {"per_layer_coeffs", c.per_layer_coeffs},
                     {"output_activation", c.output_activation},
                     {"seed", c.seed}};
}

inline void from_json(const nlohmann::json& j, MlpConfig& c) {
  j.at("in_dim").get_to(c.in_dim);
  j.at("out_dim").get_to(c.out_dim);
  j.at("hidden_layers").get_to(c.hidden_layers);
  j.at("hidden_width").get_to(c.hidden_width);
  j.at("activation").get_to(c.activation);
  j.at("gabor_omega_init").get_to(c.gabor_omega_init);
  j.at("coeff_init").get_to(c.coeff_init);
  j.at("per_layer_coeffs").get_to(c.per_layer_coeffs);
  j.at("output_activation").get_to(c.output_activation);
  j.at("seed").get_to(c.seed);
}

}  // namespace wavepinn
