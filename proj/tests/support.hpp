#pragma once

// Shared test oracles: high-order central finite differences, independent of
// every code path they are used to check.

#include <cmath>
#include <functional>

namespace test_support {

// 5-point first derivative, O(h^4) truncation.
inline double fd_first(const std::function<double(double)>& f, double x,
                       double h = 1e-2) {
  return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) /
         (12 * h);
}

// 5-point second derivative, O(h^4) truncation.
inline double fd_second(const std::function<double(double)>& f, double x,
                        double h = 1e-2) {
  return (-f(x + 2 * h) + 16 * f(x + h) - 30 * f(x) + 16 * f(x - h) -
          f(x - 2 * h)) /
         (12 * h * h);
}

// Plain central difference with the contract's default step.
inline double fd_central(const std::function<double(double)>& f, double x,
                         double h = 1e-5) {
  return (f(x + h) - f(x - h)) / (2 * h);
}

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(1.0, std::abs(want));
}

}  // namespace test_support
