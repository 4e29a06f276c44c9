#include <doctest.h>

#include <cmath>
#include <random>

#include "support.hpp"
#include "wavepinn/jet.hpp"

using namespace wavepinn;
using test_support::fd_first;
using test_support::fd_second;
using test_support::rel_err;

TEST_CASE("seeding rule") {
  Tape t;
  Jet2<Scalar> j = jet_input(t, 2.0, 0, 2);
  CHECK(j.val.value() == 2.0);
  CHECK(j.grad[0].value() == 1.0);
  CHECK(j.grad[1].value() == 0.0);
  for (int k = 0; k < Jet2<Scalar>::hess_count(2); ++k)
    CHECK(j.hess[k].value() == 0.0);

  Jet2<Scalar> j2 = jet_input(t, -1.5, 1, 2);
  CHECK(j2.grad[0].value() == 0.0);
  CHECK(j2.grad[1].value() == 1.0);

  Jet2<Scalar> j3 = jet_input(t, 0.5, 2, 3);
  CHECK(j3.dim == 3);
  CHECK(j3.grad[2].value() == 1.0);

  CHECK_THROWS_AS(jet_input(t, 0.0, 2, 2), std::out_of_range);
  CHECK_THROWS_AS(jet_input(t, 0.0, -1, 2), std::out_of_range);
}

TEST_CASE("dimension mismatch raises") {
  Jet2<double> a = jet_seed(1.0, 0, 1);
  Jet2<double> b = jet_seed(1.0, 0, 2);
  CHECK_THROWS_AS(a + b, std::invalid_argument);
  CHECK_THROWS_AS(a * b, std::invalid_argument);
}

TEST_CASE("polynomial calculus: x^2 at x=3") {
  Jet2<double> x = jet_seed(3.0, 0, 1);
  Jet2<double> y = square(x);
  CHECK(y.val == 9.0);
  CHECK(y.grad[0] == 6.0);
  CHECK(y.hess[0] == 2.0);
}

TEST_CASE("sin jet at zero") {
  Jet2<double> x = jet_seed(0.0, 0, 1);
  Jet2<double> y = sin(x);
  CHECK(y.val == 0.0);
  CHECK(y.grad[0] == 1.0);
  CHECK(y.hess[0] == 0.0);
}

TEST_CASE("hessian symmetry shares the node") {
  Tape t;
  Jet2<Scalar> x = jet_input(t, 0.3, 0, 2);
  Jet2<Scalar> y = jet_input(t, -0.2, 1, 2);
  Jet2<Scalar> f = exp(x * y);
  CHECK(f.d2(0, 1).node() == f.d2(1, 0).node());
}

TEST_CASE("tanh(x)*exp(-x^2/2) jet derivative matches finite differences") {
  auto closed = [](double x) { return std::tanh(x) * std::exp(-x * x / 2.0); };
  Jet2<double> x = jet_seed(1.0, 0, 1);
  Jet2<double> f = tanh(x) * exp(-scale(square(x), 0.5));
  CHECK(rel_err(f.val, closed(1.0)) < 1e-15);
  CHECK(std::abs(f.grad[0] - test_support::fd_central(closed, 1.0, 1e-5)) /
            std::abs(f.grad[0]) <
        1e-7);
  CHECK(rel_err(f.hess[0], fd_second(closed, 1.0)) < 1e-8);
}

TEST_CASE("powi and division jets match finite differences") {
  auto closed = [](double x) {
    return (std::pow(x, 5) - 2.0 * x) / (1.0 + x * x);
  };
  const double x0 = 0.8;
  Jet2<double> x = jet_seed(x0, 0, 1);
  Jet2<double> f = (powi(x, 5) - scale(x, 2.0)) / (square(x) + 1.0);
  CHECK(rel_err(f.val, closed(x0)) < 1e-14);
  CHECK(rel_err(f.grad[0], fd_first(closed, x0)) < 1e-8);
  CHECK(rel_err(f.hess[0], fd_second(closed, x0)) < 1e-7);
}

TEST_CASE("powi(0) and powi(1)") {
  Jet2<double> x = jet_seed(1.7, 0, 1);
  CHECK(powi(x, 0).val == 1.0);
  CHECK(powi(x, 0).grad[0] == 0.0);
  CHECK(powi(x, 1).grad[0] == 1.0);
}

TEST_CASE("sin(x)exp(-t) field: all four derivatives at random points") {
  std::mt19937_64 eng(42);
  auto uniform = [&](double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(eng() >> 11) * 0x1.0p-53);
  };
  for (int trial = 0; trial < 100; ++trial) {
    const double xv = uniform(-3.0, 3.0);
    const double tv = uniform(0.0, 2.0);
    Jet2<double> x = jet_seed(xv, 0, 2);
    Jet2<double> t = jet_seed(tv, 1, 2);
    Jet2<double> u = sin(x) * exp(-t);
    const double e = std::exp(-tv);
    CHECK(rel_err(u.d(0), std::cos(xv) * e) < 1e-10);
    CHECK(rel_err(u.d2(0, 0), -std::sin(xv) * e) < 1e-10);
    CHECK(rel_err(u.d(1), -std::sin(xv) * e) < 1e-10);
    CHECK(rel_err(u.d2(1, 1), std::sin(xv) * e) < 1e-10);
    CHECK(rel_err(u.d2(0, 1), -std::cos(xv) * e) < 1e-10);
  }
}

TEST_CASE("affine combination fuses on the tape and differentiates") {
  Tape t;
  std::vector<Scalar> w = {t.param(0.5), t.param(-1.5)};
  std::vector<Jet2<Scalar>> xs = {jet_input(t, 0.3, 0, 2),
                                  jet_input(t, 0.9, 1, 2)};
  Scalar b = t.param(0.25);
  Jet2<Scalar> y = affine_combination(std::span<const Scalar>(w),
                                      std::span<const Jet2<Scalar>>(xs), b);
  CHECK(y.val.value() == doctest::Approx(0.5 * 0.3 - 1.5 * 0.9 + 0.25));
  CHECK(y.grad[0].value() == 0.5);
  CHECK(y.grad[1].value() == -1.5);
  GradientVector g = t.backward(y.val);
  CHECK(g[0] == 0.3);   // dw0
  CHECK(g[1] == 0.9);   // dw1
  CHECK(g[2] == 1.0);   // db
}

TEST_CASE("parameter gradients flow through jet components") {
  // d/dtheta of the first input derivative of f = tanh(theta * x), checked
  // against a finite difference in theta.
  auto dfdx_at = [](double theta) {
    Tape t;
    Scalar th = t.param(theta);
    Jet2<Scalar> x = jet_input(t, 0.7, 0, 1);
    Jet2<Scalar> f = tanh(scale(x, th));
    return std::make_pair(f.grad[0].value(), t.backward(f.grad[0]));
  };
  auto objective = [&](const Eigen::VectorXd& th) { return dfdx_at(th[0]); };
  Eigen::VectorXd theta(1);
  theta << 0.9;
  CHECK(grad_check(objective, theta) < 1e-8);
}
