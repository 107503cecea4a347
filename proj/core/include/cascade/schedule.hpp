// Copyright (c) 2026 the cascade authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

namespace cascade {

// Normalized quintic time schedule. With q(s) = a s^2 + b s + d,
//   F(t) = integral_0^t q(s)^2 ds
//        = a^2/5 t^5 + ab/2 t^4 + (b^2 + 2ad)/3 t^3 + bd t^2 + d^2 t,
//   gamma(t) = F(t) / F(1),  gamma_dot(t) = q(t)^2 / F(1).
// The derivative being a perfect square is what makes gamma monotone; d > 0
// keeps F(1) > 0. gamma(0) = 0 and gamma(1) = 1 hold exactly.
struct QuinticSchedule {
  double a = 0.0;
  double b = 0.0;
  double d = 1.0;

  double antiderivative(double t) const;

  struct Value {
    double gamma;
    double gamma_dot;
  };
  Value evaluate(double t) const;

  // Closed-form partial derivatives of gamma and gamma_dot with respect to
  // (a, b, d) at time t.
  struct Partials {
    double gamma_a, gamma_b, gamma_d;
    double gdot_a, gdot_b, gdot_d;
  };
  Partials partials(double t) const;
};

}  // namespace cascade
