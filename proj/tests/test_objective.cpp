#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "support.hpp"
#include "wavepinn/objective.hpp"

using namespace wavepinn;

namespace {

struct ModelField final : JetField {
  const BoundMlp* bound;
  explicit ModelField(const BoundMlp& b) : bound(&b) {}
  std::vector<Jet2<Scalar>> eval(
      std::span<const Jet2<Scalar>> in) const override {
    return bound->forward(in);
  }
};

struct Setup {
  ProblemSpec spec;
  CollocationSet colloc;
  MlpModel model;
};

Setup make_setup(ProblemKind kind, ActivationKind act) {
  Setup s{ProblemSpec::make(kind), {}, {}};
  if (kind == ProblemKind::NavierStokes) {
    const std::string path =
        (std::filesystem::temp_directory_path() / "wavepinn_obj_tg.csv")
            .string();
    write_taylor_green_csv(path, 6, 6, 3, 2.0, 0.01);
    s.colloc = sample_random(s.spec, 40, 5, load_reference_csv(path));
  } else {
    s.colloc = sample_uniform(s.spec, 6, 5);
  }
  MlpConfig cfg;
  cfg.in_dim = s.spec.in_dim();
  cfg.out_dim = s.spec.out_dim();
  cfg.hidden_layers = 2;
  cfg.hidden_width = 6;
  cfg.activation = act;
  cfg.seed = 5;
  s.model = MlpModel::init(cfg);
  return s;
}

// Reference loss and gradient through the scalar tape route.
std::pair<double, Eigen::VectorXd> tape_route(const Setup& s,
                                              const Eigen::VectorXd& theta,
                                              const LossWeights& weights,
                                              LossBreakdown* bd_out = nullptr) {
  MlpModel m = s.model;
  m.params() = theta;
  Tape tape;
  BoundMlp bound = bind_model(tape, m);
  ModelField field(bound);
  auto [loss, bd] = total_loss(tape, s.spec, field, s.colloc, weights);
  if (bd_out) *bd_out = bd;
  return {loss.value(), tape.backward(loss)};
}

}  // namespace

TEST_CASE("batched objective matches the tape route on all four problems") {
  const ActivationKind acts[] = {
      ActivationKind{},  // tanh
      {ActivationFamily::SoftGaborTanh, 0, false},
      {ActivationFamily::SoftHerTanh, 2, false},
      {ActivationFamily::SoftMorTanh, 0, true},
  };
  const ProblemKind kinds[] = {ProblemKind::Reaction, ProblemKind::Wave,
                               ProblemKind::Convection,
                               ProblemKind::NavierStokes};
  int i = 0;
  for (ProblemKind kind : kinds) {
    const ActivationKind act = acts[i++ % 4];
    CAPTURE(problem_name(kind));
    CAPTURE(activation_name(act));
    Setup s = make_setup(kind, act);
    const LossWeights weights{1.0, 1.0, 1.0};

    TrainObjective objective(s.model, s.spec, s.colloc, weights);
    Eigen::VectorXd grad(s.model.parameter_count());
    LossBreakdown bd_fast;
    const double loss_fast = objective.eval(s.model.params(), &grad, &bd_fast);

    LossBreakdown bd_ref;
    const auto [loss_ref, grad_ref] =
        tape_route(s, s.model.params(), weights, &bd_ref);

    CHECK(std::abs(loss_fast - loss_ref) / std::max(1e-12, std::abs(loss_ref)) <
          1e-12);
    CHECK(std::abs(bd_fast.residual_mse - bd_ref.residual_mse) <
          1e-12 * std::max(1.0, bd_ref.residual_mse));
    CHECK(std::abs(bd_fast.boundary_mse - bd_ref.boundary_mse) <
          1e-12 * std::max(1.0, bd_ref.boundary_mse));
    CHECK(std::abs(bd_fast.initial_mse - bd_ref.initial_mse) <
          1e-12 * std::max(1.0, bd_ref.initial_mse));
    REQUIRE(grad.size() == grad_ref.size());
    const double scale = std::max(1e-12, grad_ref.norm());
    CHECK((grad - grad_ref).norm() / scale < 1e-10);
  }
}

TEST_CASE("equivalence holds under non-uniform loss weights") {
  Setup s = make_setup(ProblemKind::Wave,
                       {ActivationFamily::SoftGaussTanh, 0, false});
  const LossWeights weights{0.5, 2.0, 3.0};
  TrainObjective objective(s.model, s.spec, s.colloc, weights);
  Eigen::VectorXd grad;
  const double loss_fast = objective.eval(s.model.params(), &grad);
  const auto [loss_ref, grad_ref] = tape_route(s, s.model.params(), weights);
  CHECK(std::abs(loss_fast - loss_ref) < 1e-12 * std::max(1.0, loss_ref));
  CHECK((grad - grad_ref).norm() / std::max(1e-12, grad_ref.norm()) < 1e-10);
}

TEST_CASE("evaluation is deterministic and thread-count independent") {
  Setup s = make_setup(ProblemKind::Convection,
                       {ActivationFamily::SoftGaborTanh, 0, true});
  const LossWeights weights{1.0, 1.0, 1.0};

  TrainObjective one(s.model, s.spec, s.colloc, weights, 1);
  TrainObjective two(s.model, s.spec, s.colloc, weights, 2);

  Eigen::VectorXd g1, g1b, g2;
  const double l1 = one.eval(s.model.params(), &g1);
  const double l1b = one.eval(s.model.params(), &g1b);
  const double l2 = two.eval(s.model.params(), &g2);

  CHECK(l1 == l1b);
  CHECK(g1 == g1b);
  CHECK(l1 == l2);
  CHECK(g1 == g2);
}

TEST_CASE("value-only evaluation matches the gradient evaluation") {
  Setup s = make_setup(ProblemKind::Reaction, ActivationKind{});
  TrainObjective objective(s.model, s.spec, s.colloc, {});
  Eigen::VectorXd grad;
  const double with_grad = objective.eval(s.model.params(), &grad);
  const double value_only = objective.eval(s.model.params(), nullptr);
  CHECK(with_grad == value_only);
}

TEST_CASE("activation coefficient gradients reach theta") {
  Setup s = make_setup(ProblemKind::Reaction,
                       {ActivationFamily::SoftGaborTanh, 0, false});
  TrainObjective objective(s.model, s.spec, s.colloc, {});
  Eigen::VectorXd grad;
  objective.eval(s.model.params(), &grad);
  // The gabor coefficients are the last three slots (sigma, omega, beta).
  CHECK(grad.tail(3).norm() > 0.0);
}

TEST_CASE("objective gradient passes grad_check") {
  Setup s = make_setup(ProblemKind::Wave,
                       {ActivationFamily::SoftHerTanh, 1, false});
  TrainObjective objective(s.model, s.spec, s.colloc, {});
  auto fn = [&](const Eigen::VectorXd& theta) {
    Eigen::VectorXd grad;
    const double loss = objective.eval(theta, &grad);
    return std::make_pair(loss, grad);
  };
  CHECK(grad_check(fn, s.model.params()) < 1e-4);
}

TEST_CASE("per-layer coefficients keep the two routes equivalent") {
  Setup s = make_setup(ProblemKind::Wave, ActivationKind{});
  MlpConfig cfg = s.model.config();
  cfg.activation = {ActivationFamily::SoftGaborTanh, 0, false};
  cfg.per_layer_coeffs = true;
  s.model = MlpModel::init(cfg);

  TrainObjective objective(s.model, s.spec, s.colloc, {});
  Eigen::VectorXd grad;
  const double loss_fast = objective.eval(s.model.params(), &grad);
  const auto [loss_ref, grad_ref] = tape_route(s, s.model.params(), {});
  CHECK(std::abs(loss_fast - loss_ref) < 1e-12 * std::max(1.0, loss_ref));
  CHECK((grad - grad_ref).norm() / std::max(1e-12, grad_ref.norm()) < 1e-10);
  // Each layer's coefficient block receives its own gradient.
  for (std::size_t inst = 0; inst < s.model.activation_layouts().size();
       ++inst)
    CHECK(grad.segment(s.model.coeff_offset(inst), 3).norm() > 0.0);
}

TEST_CASE("output-layer activation keeps the two routes equivalent") {
  Setup s = make_setup(ProblemKind::Convection,
                       {ActivationFamily::SoftGaussTanh, 0, false});
  MlpConfig cfg = s.model.config();
  cfg.output_activation = true;
  s.model = MlpModel::init(cfg);

  TrainObjective objective(s.model, s.spec, s.colloc, {});
  Eigen::VectorXd grad;
  const double loss_fast = objective.eval(s.model.params(), &grad);
  const auto [loss_ref, grad_ref] = tape_route(s, s.model.params(), {});
  CHECK(std::abs(loss_fast - loss_ref) < 1e-12 * std::max(1.0, loss_ref));
  CHECK((grad - grad_ref).norm() / std::max(1e-12, grad_ref.norm()) < 1e-10);
}

TEST_CASE("model/problem dimension mismatch is rejected") {
  Setup s = make_setup(ProblemKind::Reaction, ActivationKind{});
  ProblemSpec ns = ProblemSpec::make(ProblemKind::NavierStokes);
  CHECK_THROWS_AS(TrainObjective(s.model, ns, s.colloc, {}),
                  std::invalid_argument);
}
