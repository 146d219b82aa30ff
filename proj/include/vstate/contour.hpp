#pragma once

// m-fold symmetric boundaries z(theta) = e^{i theta} [b + sum_k a_k cos(m k theta)]
// and the grid they are sampled on.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "vstate/errors.hpp"

namespace vstate {

using Complex = std::complex<double>;
inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct FourierContour {
  double b = 0.5;               // mean radius
  int m = 1;                    // fold
  std::vector<double> coeffs;   // a_1 .. a_M

  FourierContour() = default;
  FourierContour(double mean_radius, int fold, std::vector<double> a)
      : b(mean_radius), m(fold), coeffs(std::move(a)) {
    validate();
  }

  static FourierContour circle(double mean_radius, int fold, int count) {
    return {mean_radius, fold, std::vector<double>(static_cast<std::size_t>(count), 0.0)};
  }

  int size() const { return static_cast<int>(coeffs.size()); }

  void validate() const {
    if (!(b > 0.0 && b < 1.0))
      throw PreconditionError("mean radius must lie in (0,1), got " + std::to_string(b));
    if (m < 1) throw PreconditionError("fold must be >= 1");
    if (coeffs.empty()) throw PreconditionError("coefficient vector must be non-empty");
  }

  /// Radial profile r(theta) = b + sum a_k cos(m k theta).
  double radius(double theta) const {
    double r = b;
    for (int k = 1; k <= size(); ++k) r += coeffs[k - 1] * std::cos(m * k * theta);
    return r;
  }

  double radius_derivative(double theta) const {
    double dr = 0.0;
    for (int k = 1; k <= size(); ++k)
      dr -= coeffs[k - 1] * (m * k) * std::sin(m * k * theta);
    return dr;
  }
};

/// Equispaced nodes theta_i = 2 pi i / N with cached trigonometric tables.
class SpectralGrid {
public:
  SpectralGrid() = default;
  explicit SpectralGrid(int node_count) : n_(node_count) {
    if (n_ < 1) throw ConfigurationError("grid needs at least one node");
    cos_.resize(n_);
    sin_.resize(n_);
    for (int j = 0; j < n_; ++j) {
      const double t = kTwoPi * j / n_;
      cos_[j] = std::cos(t);
      sin_[j] = std::sin(t);
    }
  }

  /// N = m 2^r, the layout used for m-fold states.
  static SpectralGrid for_fold(int fold, int r) {
    if (fold < 1 || r < 2) throw ConfigurationError("need fold >= 1 and r >= 2");
    return SpectralGrid(fold << r);
  }

  int node_count() const { return n_; }
  double theta(int i) const { return kTwoPi * i / n_; }

  /// Largest M with N >= 2 m M + 1.
  int coeff_count(int fold) const { return (n_ - 1) / (2 * fold); }

  bool compatible(int fold, int count) const {
    return fold >= 1 && n_ % fold == 0 && n_ >= 2 * fold * count + 1;
  }

  void require_compatible(int fold, int count) const {
    if (n_ % fold != 0)
      throw ConfigurationError("grid size " + std::to_string(n_) +
                               " is not a multiple of fold " + std::to_string(fold));
    if (n_ < 2 * fold * count + 1)
      throw ConfigurationError("grid size " + std::to_string(n_) +
                               " violates N >= 2mM+1 for M=" + std::to_string(count));
  }

  // cos / sin of 2 pi j / N, j taken modulo N
  double cos_index(long j) const { return cos_[static_cast<std::size_t>(j % n_)]; }
  double sin_index(long j) const { return sin_[static_cast<std::size_t>(j % n_)]; }

private:
  int n_ = 0;
  std::vector<double> cos_, sin_;
};

inline Complex eval_boundary(const FourierContour& c, double theta) {
  return std::polar(c.radius(theta), theta);
}

/// Exact derivative dz/dtheta = e^{i theta} (i r + r').
inline Complex eval_tangent(const FourierContour& c, double theta) {
  const Complex e = std::polar(1.0, theta);
  return e * Complex(c.radius_derivative(theta), c.radius(theta));
}

struct SampledCurve {
  std::vector<Complex> z;    // z(theta_i)
  std::vector<Complex> dz;   // z_theta(theta_i)
  std::vector<double> r;     // sampled radius

  int size() const { return static_cast<int>(z.size()); }
};

/// Samples z and z_theta on the grid. Rejects contours whose radius is not
/// strictly positive at some node.
inline SampledCurve sample(const FourierContour& c, const SpectralGrid& g) {
  const int n = g.node_count();
  if (n % c.m != 0)
    throw ConfigurationError("grid size " + std::to_string(n) + " is not a multiple of fold " +
                             std::to_string(c.m));
  SampledCurve s;
  s.z.resize(n);
  s.dz.resize(n);
  s.r.resize(n);
  const int count = c.size();
  for (int i = 0; i < n; ++i) {
    double r = c.b, dr = 0.0;
    const long step = static_cast<long>(c.m) * i;
    for (int k = 1; k <= count; ++k) {
      const long idx = step * k;
      r += c.coeffs[k - 1] * g.cos_index(idx);
      dr -= c.coeffs[k - 1] * (c.m * k) * g.sin_index(idx);
    }
    if (!(r > 0.0))
      throw DegenerateContour("sampled radius " + std::to_string(r) + " at node " +
                              std::to_string(i) + " is not positive");
    const Complex e(g.cos_index(i), g.sin_index(i));
    s.r[i] = r;
    s.z[i] = r * e;
    s.dz[i] = e * Complex(dr, r);
  }
  return s;
}

namespace detail {

inline double wrap_angle(double t) {
  t = std::fmod(t, kTwoPi);
  return t < 0 ? t + kTwoPi : t;
}

}  // namespace detail

/// Minimum distance between two closed parametric curves theta -> complex.
/// Grid search over n x n node pairs followed by alternating Brent
/// refinement in each parameter.
template <class CurveA, class CurveB>
double min_separation_curves(const CurveA& fa, const CurveB& fb, int n, double theta_tol = 1e-10) {
  std::vector<Complex> za(n), zb(n);
  for (int i = 0; i < n; ++i) {
    za[i] = fa(kTwoPi * i / n);
    zb[i] = fb(kTwoPi * i / n);
  }
  // best few candidate pairs, one per source node on curve A
  std::vector<std::pair<double, std::pair<int, int>>> cand;
  cand.reserve(n);
  for (int i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    int bj = 0;
    for (int j = 0; j < n; ++j) {
      const double d = std::norm(za[i] - zb[j]);
      if (d < best) {
        best = d;
        bj = j;
      }
    }
    cand.push_back({best, {i, bj}});
  }
  const int keep = std::min<int>(8, n);
  std::partial_sort(cand.begin(), cand.begin() + keep, cand.end());

  const double h = kTwoPi / n;
  const int bits = std::max(20, static_cast<int>(-std::log2(theta_tol)));
  double result = std::sqrt(cand.front().first);
  for (int c = 0; c < keep; ++c) {
    double ta = kTwoPi * cand[c].second.first / n;
    double tb = kTwoPi * cand[c].second.second / n;
    double dist = std::abs(fa(ta) - fb(tb));
    for (int round = 0; round < 200; ++round) {
      const double prev = dist;
      const Complex pb = fb(tb);
      auto ra = boost::math::tools::brent_find_minima(
          [&](double t) { return std::abs(fa(t) - pb); }, ta - h, ta + h, bits);
      ta = ra.first;
      const Complex pa = fa(ta);
      auto rb = boost::math::tools::brent_find_minima(
          [&](double t) { return std::abs(pa - fb(t)); }, tb - h, tb + h, bits);
      tb = rb.first;
      dist = rb.second;
      if (prev - dist <= 1e-16) break;
    }
    result = std::min(result, dist);
  }
  return result;
}

inline double min_separation(const FourierContour& c1, const FourierContour& c2,
                             const SpectralGrid& g) {
  return min_separation_curves([&](double t) { return eval_boundary(c1, t); },
                               [&](double t) { return eval_boundary(c2, t); },
                               g.node_count());
}

/// Green's theorem area, (1/2) oint Im(conj(z) z') dtheta, by the trapezoidal rule.
inline double enclosed_area(const FourierContour& c, const SpectralGrid& g) {
  const SampledCurve s = sample(c, g);
  double acc = 0.0;
  for (int i = 0; i < s.size(); ++i) acc += std::imag(std::conj(s.z[i]) * s.dz[i]);
  return 0.5 * acc * kTwoPi / s.size();
}

/// max_theta |z(theta)|, refined around the largest node.
inline double max_modulus(const FourierContour& c, const SpectralGrid& g) {
  const SampledCurve s = sample(c, g);
  const auto it = std::max_element(s.r.begin(), s.r.end());
  const double t0 = g.theta(static_cast<int>(it - s.r.begin()));
  const double h = kTwoPi / g.node_count();
  auto res = boost::math::tools::brent_find_minima([&](double t) { return -c.radius(t); },
                                                   t0 - h, t0 + h, 40);
  return std::max(*it, -res.second);
}

inline double gap_to_unit_circle(const FourierContour& c, const SpectralGrid& g) {
  return 1.0 - max_modulus(c, g);
}

}  // namespace vstate
