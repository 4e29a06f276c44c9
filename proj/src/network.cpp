#include "wavepinn/network.hpp"

#include <cmath>
#include <fstream>

#include "wavepinn/json_io.hpp"
#include "wavepinn/rng.hpp"

namespace wavepinn {

namespace {

void validate(const MlpConfig& c) {
  if (c.in_dim < 1 || c.out_dim < 1)
    throw std::invalid_argument("mlp config: in_dim/out_dim must be >= 1");
  if (c.hidden_layers < 1 || c.hidden_width < 1)
    throw std::invalid_argument(
        "mlp config: hidden_layers and hidden_width must be >= 1");
}

using RowMajorMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                   Eigen::RowMajor>>;

}  // namespace

MlpModel MlpModel::init(const MlpConfig& config) {
  validate(config);
  MlpModel m;
  m.config_ = config;

  Eigen::Index offset = 0;
  auto add_layer = [&](int in, int out) {
    LayerShape s{in, out, offset, offset + static_cast<Eigen::Index>(in) * out};
    offset = s.b_offset + out;
    m.layers_.push_back(s);
  };
  add_layer(config.in_dim, config.hidden_width);
  for (int l = 1; l < config.hidden_layers; ++l)
    add_layer(config.hidden_width, config.hidden_width);
  add_layer(config.hidden_width, config.out_dim);

  const std::size_t instances =
      config.per_layer_coeffs ? static_cast<std::size_t>(config.hidden_layers)
                              : 1u;
  for (std::size_t i = 0; i < instances; ++i) {
    m.activation_layouts_.push_back(ActivationLayout::make(
        config.activation, config.gabor_omega_init, config.coeff_init));
    m.coeff_offsets_.push_back(offset);
    offset += m.activation_layouts_.back().trainable_count();
  }

  m.theta_ = Eigen::VectorXd::Zero(offset);
  UniformBits rng(config.seed);
  for (const auto& layer : m.layers_) {
    const double limit = std::sqrt(6.0 / (layer.in + layer.out));
    for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(layer.in) * layer.out;
         ++k)
      m.theta_[layer.w_offset + k] = (2.0 * rng.next() - 1.0) * limit;
    // biases stay zero
  }
  for (std::size_t i = 0; i < instances; ++i) {
    Eigen::Index slot = m.coeff_offsets_[i];
    for (const auto& coeff : m.activation_layouts_[i].coeffs)
      if (coeff.trainable) m.theta_[slot++] = coeff.raw_init;
  }
  return m;
}

ActivationCoeffs<double> MlpModel::coeffs_value(std::size_t instance) const {
  return effective_coeffs_value(activation_layouts_[instance],
                                theta_.data() + coeff_offsets_[instance]);
}

BoundMlp bind_model(Tape& tape, const MlpModel& model) {
  BoundMlp bound;
  bound.model = &model;
  bound.tape = &tape;
  bound.theta.reserve(static_cast<std::size_t>(model.parameter_count()));

  const Eigen::VectorXd& theta = model.params();
  Eigen::Index slot = 0;
  for (const auto& layer : model.layers()) {
    const Eigen::Index n = static_cast<Eigen::Index>(layer.in) * layer.out +
                           layer.out;
    for (Eigen::Index k = 0; k < n; ++k, ++slot)
      bound.theta.push_back(tape.param(theta[slot]));
  }
  for (std::size_t i = 0; i < model.activation_layouts().size(); ++i) {
    const auto& layout = model.activation_layouts()[i];
    // Trainable raws come from theta (registered as params, in order); frozen
    // raws are emitted by bind_activation as constants.
    ActivationSpec spec =
        bind_activation(tape, layout, theta.data() + model.coeff_offset(i));
    for (const auto& coeff : layout.coeffs)
      if (coeff.trainable) bound.theta.push_back(*([&]() -> const Scalar* {
            switch (coeff.name) {
              case 'a': return &*spec.raw_alpha;
              case 'b': return &*spec.raw_beta;
              case 'g': return &*spec.raw_gamma;
              case 'w': return &*spec.raw_omega;
              default: return &*spec.raw_sigma;
            }
          }()));
    bound.coeffs.push_back(effective_coeffs(spec));
  }
  return bound;
}

std::vector<Jet2<Scalar>> BoundMlp::forward(
    std::span<const Jet2<Scalar>> in) const {
  const MlpConfig& cfg = model->config();
  if (static_cast<int>(in.size()) != cfg.in_dim)
    throw std::invalid_argument("forward: input dimension mismatch");

  std::vector<Jet2<Scalar>> h(in.begin(), in.end());
  std::vector<Jet2<Scalar>> z;
  const auto layers = model->layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const LayerShape& shape = layers[l];
    const bool is_output = l + 1 == layers.size();
    z.clear();
    z.reserve(shape.out);
    for (int j = 0; j < shape.out; ++j) {
      std::span<const Scalar> row(theta.data() + shape.w_offset +
                                      static_cast<Eigen::Index>(j) * shape.in,
                                  static_cast<std::size_t>(shape.in));
      z.push_back(affine_combination(
          row, std::span<const Jet2<Scalar>>(h),
          theta[static_cast<std::size_t>(shape.b_offset) + j]));
    }
    if (!is_output || cfg.output_activation) {
      const std::size_t instance =
          is_output ? model->layout_instance(cfg.hidden_layers - 1)
                    : model->layout_instance(static_cast<int>(l));
      h.clear();
      h.reserve(z.size());
      for (const auto& zj : z) h.push_back(eval_activation(coeffs[instance], zj));
    } else {
      h = z;
    }
  }
  return h;
}

Eigen::MatrixXd predict(const MlpModel& model, const Eigen::MatrixXd& points) {
  const MlpConfig& cfg = model.config();
  if (points.cols() != cfg.in_dim)
    throw std::invalid_argument("predict: input dimension mismatch");

  std::vector<ActivationCoeffs<double>> coeffs;
  for (std::size_t i = 0; i < model.activation_layouts().size(); ++i)
    coeffs.push_back(model.coeffs_value(i));
  auto psi = [&](std::size_t instance, double zv) {
    return eval_activation(coeffs[instance], jet_from_value(zv, 1)).val;
  };

  const Eigen::VectorXd& theta = model.params();
  Eigen::MatrixXd h = points.transpose();
  const auto layers = model.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const LayerShape& shape = layers[l];
    RowMajorMap w(theta.data() + shape.w_offset, shape.out, shape.in);
    Eigen::Map<const Eigen::VectorXd> b(theta.data() + shape.b_offset,
                                        shape.out);
    Eigen::MatrixXd zmat = w * h;
    zmat.colwise() += b;
    const bool is_output = l + 1 == layers.size();
    if (!is_output || cfg.output_activation) {
      const std::size_t instance =
          is_output ? model.layout_instance(cfg.hidden_layers - 1)
                    : model.layout_instance(static_cast<int>(l));
      for (Eigen::Index c = 0; c < zmat.cols(); ++c)
        for (Eigen::Index r = 0; r < zmat.rows(); ++r)
          zmat(r, c) = psi(instance, zmat(r, c));
    }
    h = std::move(zmat);
  }
  return h.transpose();
}

void save_checkpoint(const MlpModel& model, const std::string& path) {
  nlohmann::json j;
  j["magic"] = "WAVEPINN1";
  j["config"] = model.config();
  j["params"] = std::vector<double>(
      model.params().data(), model.params().data() + model.params().size());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out << j.dump(2) << '\n';
}

MlpModel load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read checkpoint: " + path);
  nlohmann::json j;
  in >> j;
  if (j.value("magic", std::string()) != "WAVEPINN1")
    throw std::runtime_error("checkpoint magic mismatch (want WAVEPINN1): " +
                             path);
  MlpModel model = MlpModel::init(j.at("config").get<MlpConfig>());
  const auto params = j.at("params").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(params.size()) != model.parameter_count())
    throw std::runtime_error("checkpoint parameter count mismatch");
  model.params() = Eigen::Map<const Eigen::VectorXd>(
      params.data(), static_cast<Eigen::Index>(params.size()));
  return model;
}

}  // namespace wavepinn
