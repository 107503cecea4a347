// Copyright (c) 2026 the cascade authors
// SPDX-License-Identifier: Apache-2.0

#include "cascade/schedule.hpp"

namespace cascade {

double QuinticSchedule::antiderivative(double t) const {
  const double t2 = t * t;
  const double t3 = t2 * t;
  const double t4 = t3 * t;
  const double t5 = t4 * t;
  return a * a / 5.0 * t5 + a * b / 2.0 * t4 + (b * b + 2.0 * a * d) / 3.0 * t3 +
         b * d * t2 + d * d * t;
}

QuinticSchedule::Value QuinticSchedule::evaluate(double t) const {
  const double f1 = antiderivative(1.0);
  const double q = a * t * t + b * t + d;
  return {antiderivative(t) / f1, q * q / f1};
}

QuinticSchedule::Partials QuinticSchedule::partials(double t) const {
  const auto df = [this](double tau, double* fa, double* fb, double* fd) {
    const double t2 = tau * tau;
    const double t3 = t2 * tau;
    const double t4 = t3 * tau;
    const double t5 = t4 * tau;
    *fa = 2.0 * a / 5.0 * t5 + b / 2.0 * t4 + 2.0 * d / 3.0 * t3;
    *fb = a / 2.0 * t4 + 2.0 * b / 3.0 * t3 + d * t2;
    *fd = 2.0 * a / 3.0 * t3 + b * t2 + 2.0 * d * tau;
  };

  const double f_t = antiderivative(t);
  const double f_1 = antiderivative(1.0);
  double ft_a, ft_b, ft_d, f1_a, f1_b, f1_d;
  df(t, &ft_a, &ft_b, &ft_d);
  df(1.0, &f1_a, &f1_b, &f1_d);

  const double q = a * t * t + b * t + d;
  const double g = q * q;
  const double g_a = 2.0 * q * t * t;
  const double g_b = 2.0 * q * t;
  const double g_d = 2.0 * q;

  const double inv = 1.0 / (f_1 * f_1);
  Partials p;
  p.gamma_a = (ft_a * f_1 - f_t * f1_a) * inv;
  p.gamma_b = (ft_b * f_1 - f_t * f1_b) * inv;
  p.gamma_d = (ft_d * f_1 - f_t * f1_d) * inv;
  p.gdot_a = (g_a * f_1 - g * f1_a) * inv;
  p.gdot_b = (g_b * f_1 - g * f1_b) * inv;
  p.gdot_d = (g_d * f_1 - g * f1_d) * inv;
  return p;
}

}  // namespace cascade
