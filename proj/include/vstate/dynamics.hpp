#pragma once

// Lagrangian contour dynamics in the unit disc, used to check that computed
// V-states rotate rigidly.
//
// Velocity of a point z, per boundary (sign +1 outer, -1 inner):
//   v(z) = -(1/4pi) oint log|z - xi|^2 dxi + (1/4pi) oint |xi|^2 / (1 - conj(z) xi) dxi.
// Integrating the logarithmic term by parts gives
//   -(1/4pi) oint log|z - xi|^2 dxi = (1/4pi) oint (xi - z) / conj(xi - z) conj(dxi),
// whose integrand is smooth along the curve (diagonal limit xi'/conj(xi')), so the
// trapezoidal rule stays spectrally accurate at the nodes.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <string>
#include <vector>

#include <boost/math/tools/minima.hpp>
#include <unsupported/Eigen/FFT>

#include "vstate/contour.hpp"
#include "vstate/errors.hpp"

namespace vstate {

struct EvolutionState {
  std::vector<std::vector<Complex>> nodes;     // one array per boundary, outer first
  std::vector<std::vector<Complex>> initial;
  double time = 0.0;
  int fold = 1;

  static EvolutionState from_contours(const std::vector<FourierContour>& cs, const SpectralGrid& g) {
    if (cs.empty() || cs.size() > 2) throw ConfigurationError("need one or two boundaries");
    EvolutionState s;
    s.fold = cs[0].m;
    for (const auto& c : cs) {
      if (c.m != s.fold) throw ConfigurationError("boundaries need the same fold");
      s.nodes.push_back(sample(c, g).z);
    }
    s.initial = s.nodes;
    return s;
  }

  int node_count() const { return static_cast<int>(nodes[0].size()); }
};

/// d/dphi of periodic samples on an equispaced label grid.
inline std::vector<Complex> spectral_derivative(const std::vector<Complex>& z) {
  const int n = static_cast<int>(z.size());
  Eigen::FFT<double> fft;
  std::vector<Complex> hat;
  fft.fwd(hat, z);
  for (int k = 0; k < n; ++k) {
    int freq = k <= n / 2 ? k : k - n;
    if (2 * k == n) freq = 0;   // Nyquist mode carries no derivative
    hat[k] *= Complex(0.0, static_cast<double>(freq));
  }
  std::vector<Complex> out;
  fft.inv(out, hat);
  return out;
}

namespace detail {

inline double orientation_sign(std::size_t which) { return which == 0 ? 1.0 : -1.0; }

// Contribution of one boundary (samples xi, derivative dxi) at z; `self` is the
// index of z on this boundary, or -1.
inline Complex velocity_from(const std::vector<Complex>& xi, const std::vector<Complex>& dxi,
                             Complex z, int self) {
  const int n = static_cast<int>(xi.size());
  const Complex zc = std::conj(z);
  Complex log_part(0.0, 0.0), disc_part(0.0, 0.0);
  for (int j = 0; j < n; ++j) {
    const Complex d = xi[j] - z;
    if (j == self) {
      log_part += dxi[j];
    } else {
      const double d2 = std::norm(d);
      log_part += (d * d / d2) * std::conj(dxi[j]);   // d / conj(d) = d^2 / |d|^2
    }
    disc_part += std::norm(xi[j]) * dxi[j] / (1.0 - zc * xi[j]);
  }
  return (log_part + disc_part) * (1.0 / (2.0 * n));   // (1/4pi) * (2pi/n)
}

inline void require_in_disc(Complex z) {
  if (!(std::norm(z) < 1.0)) throw DomainViolation("velocity target is not inside the unit disc");
}

}  // namespace detail

/// Velocity at an arbitrary point of the disc. A target that coincides with a
/// boundary node uses that node's diagonal limit.
inline Complex boundary_velocity(const EvolutionState& s, Complex target) {
  detail::require_in_disc(target);
  Complex v(0.0, 0.0);
  for (std::size_t b = 0; b < s.nodes.size(); ++b) {
    const auto dxi = spectral_derivative(s.nodes[b]);
    int self = -1;
    for (int j = 0; j < static_cast<int>(s.nodes[b].size()); ++j)
      if (std::abs(s.nodes[b][j] - target) < 1e-14) self = j;
    v += detail::orientation_sign(b) * detail::velocity_from(s.nodes[b], dxi, target, self);
  }
  return v;
}

/// Velocities at every node. With `fold` > 1 only the first N/fold nodes are
/// evaluated; the rest follow from v(e^{2 pi i/m} z) = e^{2 pi i/m} v(z).
inline std::vector<std::vector<Complex>> node_velocities(
    const std::vector<std::vector<Complex>>& nodes, int fold) {
  std::vector<std::vector<Complex>> deriv;
  for (const auto& c : nodes) {
    for (const Complex& z : c) detail::require_in_disc(z);
    deriv.push_back(spectral_derivative(c));
  }
  std::vector<std::vector<Complex>> out(nodes.size());
  for (std::size_t t = 0; t < nodes.size(); ++t) {
    const int n = static_cast<int>(nodes[t].size());
    const bool reduce = fold > 1 && n % fold == 0;
    const int period = reduce ? n / fold : n;
    out[t].resize(n);
    for (int i = 0; i < period; ++i) {
      Complex v(0.0, 0.0);
      for (std::size_t b = 0; b < nodes.size(); ++b)
        v += detail::orientation_sign(b) *
             detail::velocity_from(nodes[b], deriv[b], nodes[t][i], b == t ? i : -1);
      out[t][i] = v;
    }
    if (reduce) {
      const Complex rot = std::polar(1.0, kTwoPi / fold);
      for (int i = period; i < n; ++i) out[t][i] = rot * out[t][i - period];
    }
  }
  return out;
}

/// Enclosed area from node samples: outer minus inner.
inline double patch_area(const std::vector<std::vector<Complex>>& nodes) {
  double area = 0.0;
  for (std::size_t b = 0; b < nodes.size(); ++b) {
    const auto dz = spectral_derivative(nodes[b]);
    double acc = 0.0;
    for (std::size_t i = 0; i < dz.size(); ++i) acc += std::imag(std::conj(nodes[b][i]) * dz[i]);
    area += detail::orientation_sign(b) * 0.5 * acc * kTwoPi / static_cast<double>(dz.size());
  }
  return area;
}

/// Distance from w to the star-shaped curve c: Brent search around arg(w),
/// then Newton on the orthogonality condition Re{conj(z - w) z'} = 0 for full
/// precision (the minimized distance has a kink when w lies on the curve).
inline double distance_to_curve(const FourierContour& c, Complex w, double window = 0.1) {
  const double t0 = std::arg(w);
  double t = boost::math::tools::brent_find_minima(
                 [&](double s) { return std::norm(eval_boundary(c, s) - w); }, t0 - window,
                 t0 + window, 40)
                 .first;
  const auto derivs = [&](double s, Complex& z, Complex& dz, Complex& ddz) {
    double r = c.b, dr = 0.0, ddr = 0.0;
    for (int k = 1; k <= c.size(); ++k) {
      const double n = static_cast<double>(c.m) * k;
      r += c.coeffs[k - 1] * std::cos(n * s);
      dr -= c.coeffs[k - 1] * n * std::sin(n * s);
      ddr -= c.coeffs[k - 1] * n * n * std::cos(n * s);
    }
    const Complex e = std::polar(1.0, s);
    z = r * e;
    dz = e * Complex(dr, r);
    ddz = e * Complex(ddr - r, 2.0 * dr);
  };
  for (int it = 0; it < 4; ++it) {
    Complex z, dz, ddz;
    derivs(t, z, dz, ddz);
    const double f = std::real(std::conj(z - w) * dz);
    const double fp = std::norm(dz) + std::real(std::conj(z - w) * ddz);
    if (!(fp > 0.0)) break;
    t -= f / fp;
  }
  return std::abs(eval_boundary(c, t) - w);
}

struct RigidCheckReport {
  double max_set_deviation = 0.0;   // distance of evolved nodes to the rotated initial curve
  double max_node_drift = 0.0;      // |gamma_i(t) - e^{i Omega t} gamma_i(0)|
  double area_drift = 0.0;          // relative
  double final_time = 0.0;
  int steps = 0;
};

/// One classical RK4 step of the node ODE.
inline void rk4_step(EvolutionState& s, double dt) {
  const auto axpy = [](const std::vector<std::vector<Complex>>& x,
                       const std::vector<std::vector<Complex>>& k, double a) {
    auto y = x;
    for (std::size_t b = 0; b < y.size(); ++b)
      for (std::size_t i = 0; i < y[b].size(); ++i) y[b][i] += a * k[b][i];
    return y;
  };
  const auto k1 = node_velocities(s.nodes, s.fold);
  const auto k2 = node_velocities(axpy(s.nodes, k1, 0.5 * dt), s.fold);
  const auto k3 = node_velocities(axpy(s.nodes, k2, 0.5 * dt), s.fold);
  const auto k4 = node_velocities(axpy(s.nodes, k3, dt), s.fold);
  for (std::size_t b = 0; b < s.nodes.size(); ++b)
    for (std::size_t i = 0; i < s.nodes[b].size(); ++i)
      s.nodes[b][i] += dt / 6.0 * (k1[b][i] + 2.0 * k2[b][i] + 2.0 * k3[b][i] + k4[b][i]);
  s.time += dt;
}

/// Integrates the boundaries over [0, T] and measures how far they are from
/// the initial curves rotated by Omega t. Deviations are sampled at
/// `samples` evenly spaced step indices (always including the last).
inline RigidCheckReport evolve_rigid_check(const std::vector<FourierContour>& contours,
                                           double omega, double duration, int steps,
                                           const SpectralGrid& g, int samples = 20,
                                           const std::function<void(const EvolutionState&)>& observer = {}) {
  if (steps < 1 || !(duration > 0.0)) throw ConfigurationError("need steps >= 1 and T > 0");
  EvolutionState s = EvolutionState::from_contours(contours, g);
  const double dt = duration / steps;
  const double area0 = patch_area(s.nodes);
  RigidCheckReport rep;
  rep.steps = steps;
  const int every = std::max(1, steps / std::max(1, samples));

  const auto measure = [&] {
    const Complex back = std::polar(1.0, -omega * s.time);
    for (std::size_t b = 0; b < s.nodes.size(); ++b) {
      const int n = static_cast<int>(s.nodes[b].size());
      // deviations share the m-fold symmetry: one period suffices
      const int period = n % s.fold == 0 ? n / s.fold : n;
      for (int i = 0; i < period; ++i) {
        const Complex w = back * s.nodes[b][i];
        rep.max_node_drift = std::max(rep.max_node_drift, std::abs(w - s.initial[b][i]));
        rep.max_set_deviation = std::max(rep.max_set_deviation, distance_to_curve(contours[b], w));
      }
    }
    rep.area_drift = std::max(rep.area_drift, std::abs(patch_area(s.nodes) - area0) / std::abs(area0));
  };

  if (observer) observer(s);
  for (int k = 1; k <= steps; ++k) {
    try {
      rk4_step(s, dt);
    } catch (const DomainViolation&) {
      // an intermediate stage already left the disc
      throw InstabilityError("a boundary node left the disc at t=" + std::to_string(s.time + dt),
                             s.time + dt);
    }
    for (const auto& c : s.nodes)
      for (const Complex& z : c)
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag()) || !(std::norm(z) < 1.0))
          throw InstabilityError("a boundary node left the disc at t=" + std::to_string(s.time),
                                 s.time);
    const bool sample_now = k % every == 0 || k == steps;
    if (sample_now) {
      measure();
      if (observer) observer(s);
    }
  }
  rep.final_time = s.time;
  return rep;
}

/// Node positions after integrating over [0, T] with a fixed number of steps.
inline EvolutionState evolve(const std::vector<FourierContour>& contours, double duration, int steps,
                             const SpectralGrid& g) {
  if (steps < 1 || !(duration > 0.0)) throw ConfigurationError("need steps >= 1 and T > 0");
  EvolutionState s = EvolutionState::from_contours(contours, g);
  const double dt = duration / steps;
  for (int k = 1; k <= steps; ++k) {
    try {
      rk4_step(s, dt);
    } catch (const DomainViolation&) {
      throw InstabilityError("a boundary node left the disc at t=" + std::to_string(s.time + dt),
                             s.time + dt);
    }
  }
  return s;
}

/// Self-convergence of the time stepping: |X_s - X_2s| / |X_2s - X_4s| at time T,
/// in the max norm over nodes. The spatial error is common to all three runs
/// and cancels, so the ratio tends to 16 for RK4 on a smooth state.
inline double step_halving_ratio(const std::vector<FourierContour>& contours, double duration, int steps,
                                 const SpectralGrid& g) {
  const EvolutionState a = evolve(contours, duration, steps, g);
  const EvolutionState b = evolve(contours, duration, 2 * steps, g);
  const EvolutionState c = evolve(contours, duration, 4 * steps, g);
  double ab = 0.0, bc = 0.0;
  for (std::size_t k = 0; k < a.nodes.size(); ++k)
    for (std::size_t i = 0; i < a.nodes[k].size(); ++i) {
      ab = std::max(ab, std::abs(a.nodes[k][i] - b.nodes[k][i]));
      bc = std::max(bc, std::abs(b.nodes[k][i] - c.nodes[k][i]));
    }
  return ab / bc;
}

}  // namespace vstate
