#include "pcons/nonlinearity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pcons {

double SectorNonlinearity::scalar(double u) const {
  switch (kind) {
    case Kind::identity:
      return u;
    case Kind::sine_ripple:
      return u * (gain - ripple * std::abs(std::sin(u)));
    case Kind::table: {
      const auto& xs = knots_u;
      const auto& ys = knots_v;
      if (u <= xs.front()) {
        double slope = (ys[1] - ys[0]) / (xs[1] - xs[0]);
        return ys.front() + slope * (u - xs.front());
      }
      if (u >= xs.back()) {
        std::size_t k = xs.size() - 1;
        double slope = (ys[k] - ys[k - 1]) / (xs[k] - xs[k - 1]);
        return ys.back() + slope * (u - xs.back());
      }
      auto it = std::upper_bound(xs.begin(), xs.end(), u);
      std::size_t k = static_cast<std::size_t>(it - xs.begin());
      double w = (u - xs[k - 1]) / (xs[k] - xs[k - 1]);
      return ys[k - 1] + w * (ys[k] - ys[k - 1]);
    }
  }
  return u;
}

void validate_sector(const SectorNonlinearity& nl) {
  if (!(nl.m_l >= 0.0 && nl.m_l <= nl.m_h) || !std::isfinite(nl.m_h)) {
    throw InvariantError("sector: declared bounds must satisfy 0 <= m_l <= m_h < inf");
  }
  if (nl.kind == SectorNonlinearity::Kind::table) {
    if (nl.knots_u.size() < 2 || nl.knots_u.size() != nl.knots_v.size()) {
      throw InvariantError("sector table: need matching u/value knots (>= 2)");
    }
    for (std::size_t k = 1; k < nl.knots_u.size(); ++k) {
      if (nl.knots_u[k] <= nl.knots_u[k - 1]) {
        throw InvariantError("sector table: u knots must be strictly increasing");
      }
    }
    if (std::abs(nl.scalar(0.0)) > 1e-12) {
      throw InvariantError("sector table: sec(0) must be 0");
    }
  }
}

Vector sector_eval(const SectorNonlinearity& nl, const Vector& u) {
  Vector out(u.size());
  for (Eigen::Index k = 0; k < u.size(); ++k) out(k) = nl.scalar(u(k));
  return out;
}

SectorBoundsReport sector_bounds_check(const SectorNonlinearity& nl, double lo, double hi,
                                       double step) {
  if (step <= 0.0 || hi < lo) throw ParameterError("sector_bounds_check: bad grid");
  SectorBoundsReport report;
  report.worst_slack = std::numeric_limits<double>::infinity();
  for (double u = lo; u <= hi + 0.5 * step; u += step) {
    double s = nl.scalar(u);
    double usq = u * u;
    double lower = u * s - nl.m_l * usq;  // >= 0 when inside the sector
    double upper = nl.m_h * usq - u * s;
    double slack = std::min(lower, upper);
    if (slack < report.worst_slack) {
      report.worst_slack = slack;
      report.worst_u = u;
    }
    ++report.points;
  }
  report.pass = report.worst_slack >= -1e-12;
  return report;
}

Vector AgentNonlinearity::eval(double t, const Vector& x) const {
  switch (kind) {
    case Kind::zero:
      return Vector::Zero(x.size());
    case Kind::state_trig: {
      Vector g(x.size());
      for (Eigen::Index k = 0; k < x.size(); ++k) {
        double phase = rate * x(k) * t;
        g(k) = (k % 2 == 0) ? x(k) * std::sin(phase) : x(k) * std::cos(phase);
      }
      return g;
    }
    case Kind::bounded_sine: {
      Vector g(x.size());
      for (Eigen::Index k = 0; k < x.size(); ++k) g(k) = amplitude * std::sin(frequency * x(k));
      return g;
    }
  }
  return Vector::Zero(x.size());
}

}  // namespace pcons
