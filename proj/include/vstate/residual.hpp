#pragma once

// Node residuals of the V-state boundary equation in the unit disc
//
//   Re{ (2 Omega conj(z) + C(z) - D(z)) z_theta } = 0,
//
// with C the Cauchy-type self-interaction integral and D the image (disc
// correction) integral with kernel |zeta|^2 / (1 - z zeta). Both integrals
// are evaluated with the N-point trapezoidal rule; the removable diagonal of
// C is replaced by its limit conj(z_theta).

#include <algorithm>
#include <cmath>
#include <complex>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "vstate/contour.hpp"
#include "vstate/errors.hpp"

namespace vstate {

struct SimplyConnected {
  double b;
};

struct DoublyConnected {
  double b1;   // outer mean radius
  double b2;   // inner mean radius
};

struct Problem {
  std::variant<SimplyConnected, DoublyConnected> geometry;
  int fold = 1;
  double omega = 0.0;

  static Problem simply(double b, int fold, double omega) {
    Problem p{SimplyConnected{b}, fold, omega};
    p.validate();
    return p;
  }
  static Problem doubly(double b1, double b2, int fold, double omega) {
    Problem p{DoublyConnected{b1, b2}, fold, omega};
    p.validate();
    return p;
  }

  bool is_doubly() const { return std::holds_alternative<DoublyConnected>(geometry); }
  int boundary_count() const { return is_doubly() ? 2 : 1; }

  void validate() const {
    if (fold < 1) throw PreconditionError("fold must be >= 1");
    if (const auto* s = std::get_if<SimplyConnected>(&geometry)) {
      if (!(s->b > 0.0 && s->b < 1.0)) throw PreconditionError("need 0 < b < 1");
    } else {
      const auto& d = std::get<DoublyConnected>(geometry);
      if (!(d.b2 > 0.0 && d.b2 < d.b1 && d.b1 < 1.0))
        throw PreconditionError("need 0 < b2 < b1 < 1");
    }
  }

  /// Mean radius of boundary `which` (0 = outer / only, 1 = inner).
  double mean_radius(int which) const {
    if (const auto* s = std::get_if<SimplyConnected>(&geometry)) return s->b;
    const auto& d = std::get<DoublyConnected>(geometry);
    return which == 0 ? d.b1 : d.b2;
  }
};

struct ResidualSpectrum {
  int fold = 1;
  std::vector<double> coeffs;   // sine coefficients b_1..b_M
  double sup_norm = 0.0;        // max node |value|
};

/// Node loops either cover all N nodes or one half period (the residual of an
/// x-axis symmetric m-fold contour is odd and 2 pi/m periodic) and unfold.
enum class NodeEvaluation { symmetric, full };

namespace detail {

inline constexpr double kDiscMargin = 1e-12;

struct CurveView {
  std::span<const Complex> z;
  std::span<const Complex> dz;
  std::vector<Complex> wdz;   // |z|^2 z_theta

  explicit CurveView(const SampledCurve& s) : z(s.z), dz(s.dz), wdz(s.z.size()) {
    for (std::size_t j = 0; j < s.z.size(); ++j) wdz[j] = std::norm(s.z[j]) * s.dz[j];
  }
};

inline void require_inside_disc(const SampledCurve& s, const char* label) {
  for (int i = 0; i < s.size(); ++i) {
    if (!(std::norm(s.z[i]) < (1.0 - kDiscMargin) * (1.0 - kDiscMargin)))
      throw DomainViolation(std::string(label) + " node " + std::to_string(i) +
                            " is not strictly inside the unit disc (|z| = " +
                            std::to_string(std::abs(s.z[i])) + ")");
  }
}

// sum_j conj(zt - z_j) / (zt - z_j) * dz_j, skipping j == skip.
// Tracks the smallest squared distance seen.
inline Complex cauchy_sum(Complex zt, const CurveView& src, int skip, double& min_d2) {
  const double xt = zt.real(), yt = zt.imag();
  double re = 0.0, im = 0.0;
  const int n = static_cast<int>(src.z.size());
  for (int j = 0; j < n; ++j) {
    if (j == skip) continue;
    const double dx = xt - src.z[j].real();
    const double dy = yt - src.z[j].imag();
    const double d2 = dx * dx + dy * dy;
    min_d2 = std::min(min_d2, d2);
    const double a = dx * dx - dy * dy;
    const double c = 2.0 * dx * dy;
    const double p = src.dz[j].real(), q = src.dz[j].imag();
    const double inv = 1.0 / d2;
    re += (a * p + c * q) * inv;
    im += (a * q - c * p) * inv;
  }
  return {re, im};
}

// sum_j |z_j|^2 dz_j / (1 - zt z_j)
inline Complex disc_sum(Complex zt, const CurveView& src) {
  const double xt = zt.real(), yt = zt.imag();
  double re = 0.0, im = 0.0;
  const int n = static_cast<int>(src.z.size());
  for (int j = 0; j < n; ++j) {
    const double xj = src.z[j].real(), yj = src.z[j].imag();
    const double qr = 1.0 - (xt * xj - yt * yj);
    const double qi = -(xt * yj + yt * xj);
    const double inv = 1.0 / (qr * qr + qi * qi);
    const double p = src.wdz[j].real(), q = src.wdz[j].imag();
    re += (p * qr + q * qi) * inv;
    im += (q * qr - p * qi) * inv;
  }
  return {re, im};
}

inline Complex times_minus_i(Complex v) { return {v.imag(), -v.real()}; }

inline void check_collision(double min_d2, const char* label) {
  if (!(min_d2 > 1e-28))
    throw DegenerateContour(std::string(label) + ": two boundary nodes coincide");
}

// Indices to evaluate and the unfolding that fills the rest.
inline std::vector<int> target_nodes(int n, int fold, NodeEvaluation mode) {
  std::vector<int> t;
  if (mode == NodeEvaluation::full || n % fold != 0) {
    t.resize(n);
    for (int i = 0; i < n; ++i) t[i] = i;
    return t;
  }
  const int period = n / fold;
  for (int i = 0; i <= period / 2; ++i) t.push_back(i);
  return t;
}

inline void unfold(std::vector<double>& r, int fold, NodeEvaluation mode) {
  const int n = static_cast<int>(r.size());
  if (mode == NodeEvaluation::full || n % fold != 0) return;
  const int period = n / fold;
  for (int i = 1; i < (period + 1) / 2; ++i) r[period - i] = -r[i];
  for (int i = period; i < n; ++i) r[i] = r[i - period];
}

}  // namespace detail

/// Simply-connected residual at every grid node.
inline std::vector<double> sc_residual_nodes(const FourierContour& c, double omega,
                                             const SpectralGrid& g,
                                             NodeEvaluation mode = NodeEvaluation::symmetric) {
  const SampledCurve s = sample(c, g);
  detail::require_inside_disc(s, "boundary");
  const detail::CurveView v(s);
  const int n = s.size();
  const double inv_n = 1.0 / n;
  std::vector<double> r(n, 0.0);
  double min_d2 = std::numeric_limits<double>::infinity();
  for (int i : detail::target_nodes(n, c.m, mode)) {
    const Complex zi = s.z[i];
    const Complex self = detail::cauchy_sum(zi, v, i, min_d2) + std::conj(s.dz[i]);
    const Complex disc = detail::disc_sum(zi, v);
    const Complex bracket =
        2.0 * omega * std::conj(zi) + detail::times_minus_i(self - disc) * inv_n;
    r[i] = std::real(bracket * s.dz[i]);
  }
  detail::check_collision(min_d2, "boundary");
  detail::unfold(r, c.m, mode);
  return r;
}

struct DcResidual {
  std::vector<double> outer;
  std::vector<double> inner;
};

/// Doubly-connected residuals (outer boundary c1, inner boundary c2), both
/// counterclockwise. Outer equation: +self1 - cross2 - disc1 + disc2; inner
/// equation: +cross1 - self2 - disc1 + disc2.
inline DcResidual dc_residual_nodes(const FourierContour& c1, const FourierContour& c2,
                                    double omega, const SpectralGrid& g,
                                    NodeEvaluation mode = NodeEvaluation::symmetric) {
  if (c1.m != c2.m) throw ConfigurationError("outer and inner boundaries need the same fold");
  const SampledCurve s1 = sample(c1, g);
  const SampledCurve s2 = sample(c2, g);
  detail::require_inside_disc(s1, "outer boundary");
  detail::require_inside_disc(s2, "inner boundary");
  const int n = s1.size();
  for (int i = 0; i < n; ++i) {
    if (!(s2.r[i] < s1.r[i]))
      throw GeometryError("inner boundary is not inside the outer boundary at node " +
                          std::to_string(i));
  }
  const detail::CurveView v1(s1), v2(s2);
  const double inv_n = 1.0 / n;
  DcResidual out{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  double self_d2 = std::numeric_limits<double>::infinity();
  double cross_d2 = std::numeric_limits<double>::infinity();
  for (int i : detail::target_nodes(n, c1.m, mode)) {
    {
      const Complex zi = s1.z[i];
      const Complex self = detail::cauchy_sum(zi, v1, i, self_d2) + std::conj(s1.dz[i]);
      const Complex cross = detail::cauchy_sum(zi, v2, -1, cross_d2);
      const Complex disc = detail::disc_sum(zi, v1) - detail::disc_sum(zi, v2);
      const Complex bracket =
          2.0 * omega * std::conj(zi) + detail::times_minus_i(self - cross - disc) * inv_n;
      out.outer[i] = std::real(bracket * s1.dz[i]);
    }
    {
      const Complex zi = s2.z[i];
      const Complex cross = detail::cauchy_sum(zi, v1, -1, cross_d2);
      const Complex self = detail::cauchy_sum(zi, v2, i, self_d2) + std::conj(s2.dz[i]);
      const Complex disc = detail::disc_sum(zi, v1) - detail::disc_sum(zi, v2);
      const Complex bracket =
          2.0 * omega * std::conj(zi) + detail::times_minus_i(cross - self - disc) * inv_n;
      out.inner[i] = std::real(bracket * s2.dz[i]);
    }
  }
  detail::check_collision(self_d2, "boundary");
  if (!(cross_d2 > 1e-28)) throw GeometryError("outer and inner boundaries touch");
  detail::unfold(out.outer, c1.m, mode);
  detail::unfold(out.inner, c1.m, mode);
  return out;
}

/// d(residual)/d(Omega) at the nodes: 2 Re{conj(z) z_theta}. The residual is
/// affine in Omega, so this is exact.
inline std::vector<double> omega_derivative_nodes(const FourierContour& c, const SpectralGrid& g) {
  const SampledCurve s = sample(c, g);
  std::vector<double> d(s.size());
  for (int i = 0; i < s.size(); ++i) d[i] = 2.0 * std::real(std::conj(s.z[i]) * s.dz[i]);
  return d;
}

/// b_k = (2/N) sum_i values_i sin(m k theta_i), k = 1..M.
inline ResidualSpectrum sine_project(std::span<const double> values, int m, int count,
                                     const SpectralGrid& g) {
  const int n = g.node_count();
  if (static_cast<int>(values.size()) != n)
    throw ConfigurationError("value count " + std::to_string(values.size()) +
                             " does not match grid size " + std::to_string(n));
  g.require_compatible(m, count);
  ResidualSpectrum out;
  out.fold = m;
  out.coeffs.assign(count, 0.0);
  for (int k = 1; k <= count; ++k) {
    double acc = 0.0;
    const long step = static_cast<long>(m) * k;
    for (int i = 0; i < n; ++i) acc += values[i] * g.sin_index(step * i);
    out.coeffs[k - 1] = 2.0 * acc / n;
  }
  double sup = 0.0;
  for (double v : values) sup = std::max(sup, std::abs(v));
  out.sup_norm = sup;
  return out;
}

inline ResidualSpectrum sine_project(std::span<const double> values, int m, int count) {
  return sine_project(values, m, count, SpectralGrid(static_cast<int>(values.size())));
}

/// max_i |sum_k b_k sin(m k theta_i)| over the grid nodes.
inline double reconstructed_sup(std::span<const double> coeffs, int m, const SpectralGrid& g) {
  const int n = g.node_count();
  double sup = 0.0;
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t k = 1; k <= coeffs.size(); ++k)
      acc += coeffs[k - 1] * g.sin_index(static_cast<long>(m) * static_cast<long>(k) * i);
    sup = std::max(sup, std::abs(acc));
  }
  return sup;
}

}  // namespace vstate
