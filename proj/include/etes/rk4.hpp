#pragma once

#include <cstddef>

namespace etes {

/// One classical fourth-order Runge-Kutta step of dx/dt = f(t, x).
///
/// `State` is any random-access container of doubles with value semantics
/// (std::array, std::vector). `f` returns a State of the same size.
template <class State, class Rhs>
State rk4_step(const State& x, double t, double h, Rhs&& f) {
  const std::size_t n = x.size();
  auto shifted = [&](const State& k, double c) {
    State y = x;
    for (std::size_t i = 0; i < n; ++i) y[i] += c * h * k[i];
    return y;
  };
  const State k1 = f(t, x);
  const State k2 = f(t + 0.5 * h, shifted(k1, 0.5));
  const State k3 = f(t + 0.5 * h, shifted(k2, 0.5));
  const State k4 = f(t + h, shifted(k3, 1.0));
  State out = x;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  return out;
}

}  // namespace etes
