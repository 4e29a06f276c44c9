#include <doctest.h>

#include <cmath>

#include "wavepinn/metrics.hpp"

using namespace wavepinn;

TEST_CASE("identical prediction gives zero error") {
  Eigen::VectorXd ref(3);
  ref << 1.0, -2.0, 3.5;
  CHECK(rmae(ref, ref) == 0.0);
  CHECK(rrmse(ref, ref) == 0.0);
}

TEST_CASE("homogeneity: pred = 1.1 ref gives 0.1") {
  Eigen::VectorXd ref(4);
  ref << 1.0, -2.0, 3.5, 0.25;
  const Eigen::VectorXd pred = 1.1 * ref;
  CHECK(std::abs(rmae(pred, ref) - 0.1) < 1e-14);
  CHECK(std::abs(rrmse(pred, ref) - 0.1) < 1e-14);
}

TEST_CASE("hand-computed rmae") {
  Eigen::VectorXd pred(2), ref(2);
  pred << 1.0, 1.0;
  ref << 1.0, 3.0;
  CHECK(rmae(pred, ref) == 0.5);
}

TEST_CASE("zero predictor has rrmse exactly one") {
  Eigen::VectorXd ref(2), zero(2);
  ref << 3.0, 4.0;
  zero.setZero();
  CHECK(rrmse(zero, ref) == 1.0);

  Eigen::VectorXd big(5);
  big << 0.1, -7.0, 2.5, 1e-8, 42.0;
  CHECK(rrmse(Eigen::VectorXd::Zero(5), big) == 1.0);
}

TEST_CASE("scale invariance") {
  Eigen::VectorXd pred(3), ref(3);
  pred << 1.1, -0.4, 2.0;
  ref << 1.0, -0.5, 2.5;
  // Power-of-two scaling is exact in floating point.
  CHECK(rmae(-2.0 * pred, -2.0 * ref) == rmae(pred, ref));
  CHECK(rrmse(4.0 * pred, 4.0 * ref) == rrmse(pred, ref));
  CHECK(rmae(0.3 * pred, 0.3 * ref) ==
        doctest::Approx(rmae(pred, ref)).epsilon(1e-13));
}

TEST_CASE("error paths") {
  Eigen::VectorXd a(2), b(3);
  a.setOnes();
  b.setOnes();
  CHECK_THROWS_AS(rmae(a, b), std::invalid_argument);
  Eigen::VectorXd zeros = Eigen::VectorXd::Zero(2);
  CHECK_THROWS_AS(rmae(a, zeros), std::invalid_argument);
  CHECK_THROWS_AS(rrmse(a, zeros), std::invalid_argument);
  Eigen::VectorXd empty;
  CHECK_THROWS_AS(rmae(empty, empty), std::invalid_argument);
}

TEST_CASE("evaluate_errors bundles both metrics") {
  Eigen::VectorXd pred(2), ref(2);
  pred << 0.0, 0.0;
  ref << 3.0, 4.0;
  EvalResult r = evaluate_errors(pred, ref);
  CHECK(r.rrmse == 1.0);
  CHECK(r.rmae == 1.0);
  CHECK(r.n_points == 2);
}
