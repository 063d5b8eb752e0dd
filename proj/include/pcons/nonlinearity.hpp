#pragma once

#include <vector>

#include "pcons/matrix_analysis.hpp"

namespace pcons {

/// Scalar input nonlinearity applied componentwise to the control vector.
///   identity:   sec(u) = u
///   sine_ripple: sec(u) = u * (gain - ripple * |sin(u)|), slope oscillating
///               in [gain - ripple, gain]
///   table:      piecewise-linear interpolation through (u, value) knots
struct SectorNonlinearity {
  enum class Kind { identity, sine_ripple, table };

  Kind kind = Kind::identity;
  double m_l = 1.0;  // declared sector bounds
  double m_h = 1.0;
  double gain = 1.2;    // sine_ripple
  double ripple = 0.3;  // sine_ripple
  std::vector<double> knots_u;  // table, strictly increasing, must cover 0 -> 0
  std::vector<double> knots_v;

  double scalar(double u) const;
};

void validate_sector(const SectorNonlinearity& nl);

Vector sector_eval(const SectorNonlinearity& nl, const Vector& u);

struct SectorBoundsReport {
  bool pass = true;
  double worst_slack = 0.0;  // min over the grid of the two sector slacks
  double worst_u = 0.0;
  long points = 0;
};

/// Checks m_l u^2 <= u sec(u) <= m_h u^2 on the grid [lo, hi] at the given
/// step. Violations are report content, not exceptions.
SectorBoundsReport sector_bounds_check(const SectorNonlinearity& nl, double lo, double hi,
                                       double step);

/// Agent drift nonlinearity g(t, x).
///   zero:       g = 0
///   state_trig: g_k = x_k sin(rate x_k t) for even k, x_k cos(rate x_k t)
///               for odd k (0-based)
///   bounded_sine: g_k = amplitude * sin(frequency * x_k), time-invariant
struct AgentNonlinearity {
  enum class Kind { zero, state_trig, bounded_sine };

  Kind kind = Kind::zero;
  double rate = 0.31;
  double amplitude = 1.0;
  double frequency = 1.0;
  double beta = 1.0;  // declared Lipschitz constant

  Vector eval(double t, const Vector& x) const;
};

}  // namespace pcons
