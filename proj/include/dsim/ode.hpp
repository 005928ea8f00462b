#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>

namespace dsim::ode {

struct StepControl {
  double rel_tol = 1e-10;
  double abs_tol = 1e-10;
  double initial_step = 1e-3;
  double safety = 0.9;
  double max_shrink = 0.2;  // lower clamp on the step-size ratio
  double max_grow = 5.0;    // upper clamp on the step-size ratio
  // A controller step below this fraction of the interval aborts the drive.
  double underflow_fraction = 1e-12;
};

struct DriveReport {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  double t_reached = 0.0;
  bool step_underflow = false;
};

/// Adaptive Dormand-Prince 5(4) embedded pair.
///
/// `rhs(t, y, dydt)` fills dydt in place; `on_accept(t, y)` runs after every
/// accepted step and may mutate y (renormalization hooks use this). The error
/// norm is a scaled RMS over components; steps are accepted when it is <= 1.
template <class Vec, class Rhs, class OnAccept>
DriveReport integrate(Vec& y, double t0, double t1, Rhs&& rhs,
                      const StepControl& ctl, OnAccept&& on_accept) {
  DriveReport rep;
  rep.t_reached = t0;
  const double span = t1 - t0;
  if (span <= 0.0) return rep;

  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                   a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                   a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                   b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  // Difference between the 5th- and 4th-order weights.
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                   e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  Vec k1 = y, k2 = y, k3 = y, k4 = y, k5 = y, k6 = y, k7 = y;
  Vec ytmp = y, ynew = y, evec = y;

  double t = t0;
  double h = std::min(ctl.initial_step, span);
  const double h_floor = ctl.underflow_fraction * span;

  while (t < t1) {
    const double remaining = t1 - t;
    const bool final_stretch = remaining <= h_floor;
    const double h_step = final_stretch ? remaining : std::min(h, remaining);

    rhs(t, y, k1);
    ytmp = y + h_step * (a21 * k1);
    rhs(t + c2 * h_step, ytmp, k2);
    ytmp = y + h_step * (a31 * k1 + a32 * k2);
    rhs(t + c3 * h_step, ytmp, k3);
    ytmp = y + h_step * (a41 * k1 + a42 * k2 + a43 * k3);
    rhs(t + c4 * h_step, ytmp, k4);
    ytmp = y + h_step * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    rhs(t + c5 * h_step, ytmp, k5);
    ytmp = y + h_step * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    rhs(t + h_step, ytmp, k6);
    ynew = y + h_step * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    rhs(t + h_step, ynew, k7);
    evec = h_step * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    double err = 0.0;
    for (auto i = decltype(y.size()){0}; i < y.size(); ++i) {
      using std::abs;
      const double scale =
          ctl.abs_tol + ctl.rel_tol * std::max(abs(y[i]), abs(ynew[i]));
      const double q = abs(evec[i]) / scale;
      err += q * q;
    }
    err = std::sqrt(err / static_cast<double>(y.size()));

    if (err <= 1.0) {
      t = (h_step == remaining) ? t1 : t + h_step;
      y = ynew;
      ++rep.accepted;
      rep.t_reached = t;
      on_accept(t, y);
    } else {
      ++rep.rejected;
    }

    double factor = ctl.max_shrink;
    if (err == 0.0)
      factor = ctl.max_grow;
    else if (std::isfinite(err))
      factor = std::clamp(ctl.safety * std::pow(err, -0.2), ctl.max_shrink,
                          ctl.max_grow);
    h = h_step * factor;

    if (t < t1 && h < h_floor && (t1 - t) > h_floor) {
      rep.step_underflow = true;
      break;
    }
  }
  return rep;
}

}  // namespace dsim::ode
