#pragma once

// Closed-form bifurcation spectrum around the disc (simply connected) and the
// annulus b2 < |z| < b1 (doubly connected), written in lambda = 1 - 2 Omega.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "vstate/errors.hpp"

namespace vstate {

using Mat2 = std::array<std::array<double, 2>, 2>;

enum class BranchSide { plus, minus };

inline const char* to_string(BranchSide s) { return s == BranchSide::plus ? "plus" : "minus"; }

/// Omega = (1 - lambda) / 2.
inline double omega_from_lambda(double lambda) { return 0.5 * (1.0 - lambda); }
inline double lambda_from_omega(double omega) { return 1.0 - 2.0 * omega; }

struct OmegaPair {
  double plus;
  double minus;
};

/// The larger angular velocity comes from the smaller eigenvalue:
/// Omega^+ = (1 - lambda^-)/2, Omega^- = (1 - lambda^+)/2.
inline OmegaPair omega_pair(double lambda_minus, double lambda_plus) {
  return {omega_from_lambda(lambda_minus), omega_from_lambda(lambda_plus)};
}

namespace detail {

inline void require_radius(double b) {
  if (!(b > 0.0 && b < 1.0)) throw PreconditionError("radius must lie in (0,1)");
}

inline void require_radii(double b1, double b2) {
  if (!(b2 > 0.0 && b2 < b1 && b1 < 1.0))
    throw PreconditionError("need 0 < b2 < b1 < 1, got b1=" + std::to_string(b1) +
                            " b2=" + std::to_string(b2));
}

inline void require_mode(int n, int lowest = 1) {
  if (n < lowest) throw PreconditionError("mode must be >= " + std::to_string(lowest));
}

// Bisection on [lo, hi] for a function with f(lo) and f(hi) of opposite sign.
template <class F>
double bisect_root(F f, double lo, double hi, double tol) {
  const auto stop = [tol](double a, double b) { return std::abs(b - a) <= tol; };
  std::uintmax_t iters = 400;
  const auto r = boost::math::tools::bisect(f, lo, hi, stop, iters);
  const double left = f(r.first), right = f(r.second);
  return std::abs(left) <= std::abs(right) ? r.first : r.second;
}

}  // namespace detail

// ---------------------------------------------------------------- simply connected

struct ScEigen {
  double lambda;
  double omega;
};

/// lambda_m = (1 - b^{2m})/m, Omega_m = (m - 1 + b^{2m})/(2m).
inline ScEigen sc_eigen(int m, double b) {
  detail::require_mode(m);
  detail::require_radius(b);
  const double lambda = (1.0 - std::pow(b, 2 * m)) / m;
  return {lambda, omega_from_lambda(lambda)};
}

// ---------------------------------------------------------------- doubly connected

/// Mode-n linearization matrix around the annulus, b = b2/b1.
inline Mat2 dc_matrix(int n, double lambda, double b1, double b2) {
  detail::require_mode(n);
  detail::require_radii(b1, b2);
  const double b = b2 / b1;
  const double bn = std::pow(b, n);
  const double coupling = bn - std::pow(b1 * b2, n);
  return {{{b1 * (n * lambda - 1.0 + std::pow(b1, 2 * n) - n * b * b), b2 * coupling},
           {-b1 * coupling, b2 * (n * lambda - n + 1.0 - std::pow(b2, 2 * n))}}};
}

inline double det2(const Mat2& a) { return a[0][0] * a[1][1] - a[0][1] * a[1][0]; }

/// Monic characteristic polynomial P_n(lambda) = det M_n / (n^2 b1 b2).
inline double dc_polynomial(int n, double lambda, double b1, double b2) {
  const double b = b2 / b1;
  const double b_2 = b * b;
  const double b_2n = std::pow(b, 2 * n);
  const double p1 = std::pow(b1, 2 * n), p2 = std::pow(b2, 2 * n);
  const double nn = static_cast<double>(n);
  return lambda * lambda - (1.0 + b_2 - (p1 - p2) / nn) * lambda + b_2 -
         (1.0 - b_2n) / (nn * nn) + (1.0 - b_2) / nn - (p1 - p2 * b_2) / nn +
         (p1 - p2) / (nn * nn);
}

/// Reduced discriminant of P_n, in the factored form (A - B)(A + B).
inline double dc_discriminant(double n, double b1, double b2) {
  const double b = b2 / b1;
  const double p1 = std::pow(b1, 2 * n), p2 = std::pow(b2, 2 * n);
  const double a = 0.5 * (1.0 - b * b) - (2.0 - p2 - p1) / (2.0 * n);
  const double c = std::pow(b, n) * (1.0 - p1) / n;
  return (a - c) * (a + c);
}

/// |Delta| below this is a double root.
inline constexpr double kDiscriminantTol = 1e-12;

struct DcSpectrum {
  int n = 1;
  double b1 = 0.0, b2 = 0.0;
  double discriminant = 0.0;
  std::optional<double> lambda_plus, lambda_minus;
  std::optional<double> omega_plus, omega_minus;

  bool real() const { return lambda_plus.has_value(); }
};

inline DcSpectrum dc_spectrum(int n, double b1, double b2) {
  detail::require_mode(n);
  detail::require_radii(b1, b2);
  DcSpectrum s;
  s.n = n;
  s.b1 = b1;
  s.b2 = b2;
  s.discriminant = dc_discriminant(n, b1, b2);
  if (s.discriminant < -kDiscriminantTol) return s;
  const double b = b2 / b1;
  const double mid =
      0.5 * (1.0 + b * b) - (std::pow(b1, 2 * n) - std::pow(b2, 2 * n)) / (2.0 * n);
  const double root = s.discriminant > kDiscriminantTol ? std::sqrt(s.discriminant) : 0.0;
  s.lambda_plus = mid + root;
  s.lambda_minus = mid - root;
  const OmegaPair w = omega_pair(*s.lambda_minus, *s.lambda_plus);
  s.omega_plus = w.plus;
  s.omega_minus = w.minus;
  return s;
}

/// Right-hand side g_x(b1,b2) of the mode condition x >= g_x, valid for x >= 2.
inline double mode_condition_bound(double x, double b1, double b2) {
  const double b = b2 / b1;
  const double s = std::pow(b1, x) + std::pow(b2, x);
  return (2.0 + 2.0 * std::pow(b, x) - s * s) / (1.0 - b * b);
}

struct OnefoldEigen {
  double lambda_minus;   // (b2/b1)^2
  double lambda_plus;    // 1 + b2^2 - b1^2
  double omega;          // (b1^2 - b2^2)/2, from lambda_plus
};

inline OnefoldEigen onefold_eigen(double b1, double b2) {
  detail::require_radii(b1, b2);
  const double b = b2 / b1;
  const double lp = 1.0 + b2 * b2 - b1 * b1;
  return {b * b, lp, 0.5 * (b1 * b1 - b2 * b2)};
}

/// Fold radius b_m^*: the root in (0, b1) of
/// h(x) = m(1 - (x/b1)^2) - 2 - 2(x/b1)^m + (b1^m + x^m)^2.
inline double b_star(int m, double b1, double tol = 1e-12) {
  detail::require_mode(m, 2);
  detail::require_radius(b1);
  const auto h = [m, b1](double x) {
    const double t = x / b1;
    const double s = std::pow(b1, m) + std::pow(x, m);
    return m * (1.0 - t * t) - 2.0 - 2.0 * std::pow(t, m) + s * s;
  };
  return detail::bisect_root(h, 0.0, b1, tol);
}

/// The constant alpha with e^{-alpha} + 1 = alpha, governing
/// b_m^* ~ b1 (1 - alpha/m) for large m.
inline double fold_asymptotic_constant(double tol = 1e-15) {
  return detail::bisect_root([](double a) { return std::exp(-a) + 1.0 - a; }, 1.0, 2.0, tol);
}

/// Inner radii x_n where the 1-fold curve lambda_1^+(b2) meets the mode-n
/// curves, for 2 <= n <= n_max with n >= 1/b1^2.
inline std::vector<std::pair<int, double>> onefold_intersections(double b1, int n_max,
                                                                 double tol = 1e-14) {
  detail::require_radius(b1);
  if (n_max < 2) throw PreconditionError("n_max must be >= 2");
  std::vector<std::pair<int, double>> out;
  for (int n = 2; n <= n_max; ++n) {
    if (n * b1 * b1 < 1.0) continue;
    // at n = 1/b1^2 the curves meet at the degenerate end b2 = 0
    if (n * b1 * b1 - 1.0 < 1e-12) {
      out.emplace_back(n, 0.0);
      continue;
    }
    const double top = b_star(n, b1);
    const auto g = [&](double x) { return dc_polynomial(n, 1.0 + x * x - b1 * b1, b1, x); };
    // locate the sign change on a scan, then bisect
    constexpr int kScan = 400;
    double prev_x = top * 1e-6, prev = g(prev_x);
    for (int j = 1; j <= kScan; ++j) {
      const double x = top * j / kScan;
      const double v = g(x);
      if (v == 0.0) {
        out.emplace_back(n, x);
        break;
      }
      if ((prev < 0.0) != (v < 0.0)) {
        out.emplace_back(n, detail::bisect_root(g, prev_x, x, tol));
        break;
      }
      prev_x = x;
      prev = v;
    }
  }
  return out;
}

/// Distance from b2 to the nearest exceptional radius x_n (n <= n_max).
inline double distance_to_exceptional(double b1, double b2, int n_max = 200) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& [n, x] : onefold_intersections(b1, n_max)) best = std::min(best, std::abs(x - b2));
  return best;
}

struct KernelVector {
  int mode = 1;
  double lambda = 0.0;
  std::array<double, 2> v{};
};

inline double eigenvalue(int m, BranchSide side, double b1, double b2) {
  const DcSpectrum s = dc_spectrum(m, b1, b2);
  if (!s.real())
    throw NoBifurcationError(
        "mode " + std::to_string(m) + " has no real eigenvalue at b1=" + std::to_string(b1) +
        " b2=" + std::to_string(b2) + ": the mode condition m >= g_m(b1,b2) = " +
        std::to_string(mode_condition_bound(m, b1, b2)) + " fails");
  return side == BranchSide::plus ? *s.lambda_plus : *s.lambda_minus;
}

/// Kernel of M_m(lambda_m^{+/-}), generated by
/// (b2[m lambda - m + 1 - b2^{2m}], b1[b^m - (b1 b2)^m]); unit length, first
/// nonzero component positive.
inline KernelVector kernel_vector(int m, BranchSide side, double b1, double b2) {
  const double lambda = eigenvalue(m, side, b1, b2);
  const Mat2 a = dc_matrix(m, lambda, b1, b2);
  std::array<double, 2> v{a[1][1], -a[1][0]};
  double len = std::hypot(v[0], v[1]);
  if (len < 1e-14) {
    v = {a[0][1], -a[0][0]};
    len = std::hypot(v[0], v[1]);
  }
  if (len < 1e-14) {
    v = {1.0, 0.0};
    len = 1.0;
  }
  v[0] /= len;
  v[1] /= len;
  const double lead = std::abs(v[0]) > 1e-15 ? v[0] : v[1];
  if (lead < 0.0) {
    v[0] = -v[0];
    v[1] = -v[1];
  }
  return {m, lambda, v};
}

/// Strict transversality: Delta_m > 0.
inline bool transversality_ok(int m, double b1, double b2) {
  detail::require_mode(m, 2);
  detail::require_radii(b1, b2);
  return dc_discriminant(m, b1, b2) > kDiscriminantTol;
}

}  // namespace vstate
