#pragma once

// MLP approximator evaluated in jet arithmetic, so PDE residuals can read
// input derivatives straight off the network output. Parameters live in one
// flat vector in a stable registration order: each layer's weight matrix
// (row-major, out x in) then its bias, layer by layer from the input, followed
// by the trainable activation coefficients.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "wavepinn/activations.hpp"
#include "wavepinn/jet.hpp"
#include "wavepinn/tape.hpp"

namespace wavepinn {

struct MlpConfig {
  int in_dim = 2;
  int out_dim = 1;
  int hidden_layers = 4;
  int hidden_width = 512;
  ActivationKind activation;
  double gabor_omega_init = 3.0;
  CoeffInit coeff_init = CoeffInit::RawOne;
  // One coefficient set shared by all hidden layers by default; per-layer
  // copies behind this flag.
  bool per_layer_coeffs = false;
  // Applies the activation to the output layer as well (the literal recursion
  // reading); default is a linear output layer.
  bool output_activation = false;
  std::uint64_t seed = 5;

  bool operator==(const MlpConfig&) const = default;
};

struct LayerShape {
  int in = 0;
  int out = 0;
  Eigen::Index w_offset = 0;  // theta offset of the row-major weight block
  Eigen::Index b_offset = 0;  // theta offset of the bias block
};

class MlpModel {
 public:
  // Weights Glorot-uniform, biases zero, activation coefficients per
  // init_activation; deterministic given config.seed.
  static MlpModel init(const MlpConfig& config);

  const MlpConfig& config() const { return config_; }
  std::span<const LayerShape> layers() const { return layers_; }

  Eigen::Index parameter_count() const { return theta_.size(); }
  const Eigen::VectorXd& params() const { return theta_; }
  Eigen::VectorXd& params() { return theta_; }

  // Activation coefficient layouts: one entry when shared, one per hidden
  // layer otherwise. coeff_offset(i) is the theta offset of instance i's
  // trainable raw coefficients.
  std::span<const ActivationLayout> activation_layouts() const {
    return activation_layouts_;
  }
  Eigen::Index coeff_offset(std::size_t instance) const {
    return coeff_offsets_[instance];
  }
  // Layout instance used by hidden layer `layer`.
  std::size_t layout_instance(int layer) const {
    return config_.per_layer_coeffs ? static_cast<std::size_t>(layer) : 0u;
  }

  ActivationCoeffs<double> coeffs_value(std::size_t instance) const;

 private:
  MlpConfig config_;
  Eigen::VectorXd theta_;
  std::vector<LayerShape> layers_;
  std::vector<ActivationLayout> activation_layouts_;
  std::vector<Eigen::Index> coeff_offsets_;
};

// Model bound to a tape: every trainable parameter registered as a tape leaf
// in theta order, frozen activation coefficients as constants.
struct BoundMlp {
  const MlpModel* model = nullptr;
  Tape* tape = nullptr;
  std::vector<Scalar> theta;  // one Scalar per theta slot, in order
  std::vector<ActivationCoeffs<Scalar>> coeffs;  // per layout instance

  std::vector<Jet2<Scalar>> forward(std::span<const Jet2<Scalar>> in) const;
};

BoundMlp bind_model(Tape& tape, const MlpModel& model);

// Plain-double forward pass for prediction: rows of `points` are inputs.
Eigen::MatrixXd predict(const MlpModel& model, const Eigen::MatrixXd& points);

// Checkpoint: JSON document with magic "WAVEPINN1", the MlpConfig, and the
// parameter values in registration order.
void save_checkpoint(const MlpModel& model, const std::string& path);
MlpModel load_checkpoint(const std::string& path);

}  // namespace wavepinn
