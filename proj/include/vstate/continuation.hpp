#pragma once

// Branch tracing from the trivial solution: two amplitude-fixed solves start
// the branch, then pseudo-arclength steps in (coefficients, Omega) follow it
// through folds.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "vstate/contour.hpp"
#include "vstate/errors.hpp"
#include "vstate/residual.hpp"
#include "vstate/solver.hpp"
#include "vstate/spectra.hpp"

namespace vstate {

/// Which bifurcation point a branch leaves from.
enum class SeedKind { simply, plus, minus };

inline const char* to_string(SeedKind k) {
  switch (k) {
    case SeedKind::simply: return "sc";
    case SeedKind::plus: return "plus";
    case SeedKind::minus: return "minus";
  }
  return "?";
}

struct Seed {
  Problem problem;               // omega = starting guess
  SeedKind kind = SeedKind::simply;
  double bifurcation_omega = 0.0;
  double epsilon = 1e-3;
  std::vector<double> coeffs;    // epsilon * direction
  std::vector<double> direction; // unit vector on the first harmonic(s)
  std::string warning;
};

/// Starting data at Omega_m (one boundary) or Omega_m^{+/-} (two boundaries).
/// `count` is the number of coefficients per boundary.
inline Seed seed_from_bifurcation(const Problem& family, SeedKind kind, int count,
                                  double epsilon = 1e-3, double delta_omega = 1e-3) {
  family.validate();
  if (count < 1) throw ConfigurationError("need at least one coefficient");
  Seed s;
  s.problem = family;
  s.kind = kind;
  s.epsilon = epsilon;
  const int m = family.fold;
  if (const auto* sc = std::get_if<SimplyConnected>(&family.geometry)) {
    if (kind != SeedKind::simply)
      throw ConfigurationError("a simply-connected problem is seeded with kind 'sc'");
    s.bifurcation_omega = sc_eigen(m, sc->b).omega;
    s.direction.assign(count, 0.0);
    s.direction[0] = 1.0;
  } else {
    if (kind == SeedKind::simply)
      throw ConfigurationError("a doubly-connected problem is seeded with 'plus' or 'minus'");
    const auto& d = std::get<DoublyConnected>(family.geometry);
    // Omega^+ comes from lambda^- and vice versa
    const BranchSide side = kind == SeedKind::plus ? BranchSide::minus : BranchSide::plus;
    const KernelVector kv = kernel_vector(m, side, d.b1, d.b2);
    s.bifurcation_omega = omega_from_lambda(kv.lambda);
    s.direction.assign(2 * count, 0.0);
    s.direction[0] = kv.v[0];
    s.direction[count] = kv.v[1];
    if (m == 1 && side == BranchSide::minus)
      s.warning = "lambda_1^- has a range of infinite codimension; bifurcation is not expected";
    if (m >= 2 && distance_to_exceptional(d.b1, d.b2) < 1e-6)
      s.warning = "b2 is within 1e-6 of an exceptional radius: the kernel may be two-dimensional";
  }
  s.problem.omega = s.bifurcation_omega + delta_omega;
  s.coeffs = s.direction;
  for (double& v : s.coeffs) v *= epsilon;
  return s;
}

enum class Termination { limiting_proximity, step_floor, max_points, solver_failure, reconnected };

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::limiting_proximity: return "limiting-proximity";
    case Termination::step_floor: return "step-floor";
    case Termination::max_points: return "max-points";
    case Termination::solver_failure: return "solver-failure";
    case Termination::reconnected: return "reconnected";
  }
  return "?";
}

struct ContinuationConfig {
  double ds_initial = 0.0;   // 0: taken from the first two points
  double ds_min = 1e-6;
  double ds_max = 5e-2;
  double gap_floor = 5e-3;
  int max_points = 2000;
  double tol = 1e-12;        // corrector tolerance on the residual sup-norm
  int max_corrector_iter = 10;
  int fast_iterations = 3;
  double fd_step = 0.0;      // 0: problem default
  bool escalate = true;
  double tail_fraction = 1e-10;
  int max_node_count = 2048;
  bool stop_at_reconnection = true;
};

struct BranchPoint {
  double omega = 0.0;
  std::vector<double> coeffs;
  int node_count = 0;
  double sup_residual = 0.0;
  double a_first = 0.0;                 // a_1 or a_{1,1}
  std::optional<double> a_inner_first;  // a_{2,1}
  double gap_unit_circle = 0.0;
  std::optional<double> gap_boundaries;
  int iterations = 0;
};

struct Branch {
  Problem problem;
  SeedKind kind = SeedKind::simply;
  double bifurcation_omega = 0.0;
  std::vector<BranchPoint> points;
  std::vector<int> fold_indices;
  Termination termination = Termination::max_points;
  bool unresolved_tail = false;   // stopped because the spectrum outgrew the largest grid
  std::string message;
};

namespace detail {

struct AugmentedResult {
  std::vector<double> x;
  double omega = 0.0;
  double sup = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Newton on F(x, Omega) = 0 plus one linear constraint w . (x, Omega) = target.
inline AugmentedResult augmented_newton(const Problem& family, std::vector<double> x,
                                        double omega, std::span<const double> w, double target,
                                        const SpectralGrid& g, double h, double tol,
                                        int max_iter) {
  AugmentedResult r;
  const int n = static_cast<int>(x.size());
  Problem p = family;
  p.omega = omega;
  std::vector<double> f = assemble_F(p, x, g);
  double sup = residual_sup(p, f, g);
  const auto constraint = [&] {
    double c = w[n] * p.omega - target;
    for (int i = 0; i < n; ++i) c += w[i] * x[i];
    return c;
  };
  double prev = std::numeric_limits<double>::infinity();
  while (r.iterations < max_iter) {
    const double c = constraint();
    if (sup < tol && std::abs(c) < 1e-14) break;
    const double size = std::max(sup, std::abs(c));
    if (r.iterations >= 2 && size > 2.0 * prev) break;   // diverging
    prev = size;
    Eigen::MatrixXd a(n + 1, n + 1);
    a.topLeftCorner(n, n) = fd_jacobian(p, x, g, h, &f);
    const std::vector<double> fo = assemble_F_omega(p, x, g);
    for (int i = 0; i < n; ++i) a(i, n) = fo[i];
    for (int j = 0; j <= n; ++j) a(n, j) = w[j];
    Eigen::VectorXd rhs(n + 1);
    for (int i = 0; i < n; ++i) rhs(i) = f[i];
    rhs(n) = c;
    const Eigen::VectorXd d = a.partialPivLu().solve(rhs);
    if (!d.allFinite()) break;
    for (int i = 0; i < n; ++i) x[i] -= d(i);
    p.omega -= d(n);
    f = assemble_F(p, x, g);   // geometry errors propagate to the caller
    sup = residual_sup(p, f, g);
    ++r.iterations;
  }
  r.sup = sup;
  r.converged = sup < tol && std::abs(constraint()) < 1e-12;
  r.x = std::move(x);
  r.omega = p.omega;
  return r;
}

// Zero-pads each boundary block from `from` to `to` coefficients.
inline std::vector<double> pad_coeffs(std::span<const double> x, int blocks, int from, int to) {
  std::vector<double> out(static_cast<std::size_t>(blocks) * to, 0.0);
  for (int b = 0; b < blocks; ++b)
    for (int k = 0; k < std::min(from, to); ++k) out[b * to + k] = x[b * from + k];
  return out;
}

}  // namespace detail

/// Energy in the last tenth of each boundary's modes relative to the total.
inline double tail_energy_fraction(std::span<const double> x, int blocks) {
  const int count = static_cast<int>(x.size()) / blocks;
  const int tail = std::max(1, count / 10);
  double total = 0.0, end = 0.0;
  for (int b = 0; b < blocks; ++b)
    for (int k = 0; k < count; ++k) {
      const double e = x[b * count + k] * x[b * count + k];
      total += e;
      if (k >= count - tail) end += e;
    }
  return total > 0.0 ? end / total : 0.0;
}

/// Least-squares slope of log|a_k| against log k over the upper half of the
/// modes, ignoring coefficients below 1e-13 of the largest. Returns -inf when
/// fewer than three coefficients remain (fully resolved spectrum).
inline double spectral_decay_slope(std::span<const double> a) {
  const int count = static_cast<int>(a.size());
  const double peak = max_abs(a);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int used = 0;
  for (int k = count / 2 + 1; k <= count; ++k) {
    const double v = std::abs(a[k - 1]);
    if (!(v > 1e-13 * peak)) continue;
    const double lx = std::log(static_cast<double>(k)), ly = std::log(v);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++used;
  }
  if (used < 3) return -std::numeric_limits<double>::infinity();
  return (used * sxy - sx * sy) / (used * sxx - sx * sx);
}

inline BranchPoint make_point(const Problem& p, std::vector<double> x, double sup,
                              const SpectralGrid& g, int iterations) {
  BranchPoint pt;
  pt.omega = p.omega;
  pt.node_count = g.node_count();
  pt.sup_residual = sup;
  pt.iterations = iterations;
  const auto cs = contours_from_unknowns(p, x);
  pt.a_first = cs[0].coeffs[0];
  pt.gap_unit_circle = gap_to_unit_circle(cs[0], g);
  if (p.is_doubly()) {
    pt.a_inner_first = cs[1].coeffs[0];
    pt.gap_boundaries = min_separation(cs[0], cs[1], g);
  }
  pt.coeffs = std::move(x);
  return pt;
}

/// Pseudo-arclength continuation from a seed on grid g.
inline Branch trace_branch(const Seed& seed, const SpectralGrid& grid,
                           const ContinuationConfig& cfg = {}) {
  const Problem& family = seed.problem;
  const int blocks = family.boundary_count();
  const double h = cfg.fd_step > 0.0 ? cfg.fd_step : NewtonConfig::for_problem(family).fd_step;
  SpectralGrid g = grid;
  int count = static_cast<int>(seed.coeffs.size()) / blocks;
  g.require_compatible(family.fold, count);

  Branch br;
  br.problem = family;
  br.problem.omega = seed.bifurcation_omega;
  br.kind = seed.kind;
  br.bifurcation_omega = seed.bifurcation_omega;
  br.message = seed.warning;

  const auto with_omega = [&](double w) {
    Problem p = family;
    p.omega = w;
    return p;
  };

  // first two points: amplitude along the kernel direction fixed at eps, 2 eps
  std::vector<std::vector<double>> ys;   // (x, Omega) of accepted points
  {
    std::vector<double> w(seed.direction);
    w.push_back(0.0);
    std::vector<double> x = seed.coeffs;
    double omega = family.omega;
    for (int j = 1; j <= 2; ++j) {
      detail::AugmentedResult r;
      try {
        r = detail::augmented_newton(family, x, omega, w, j * seed.epsilon, g, h, cfg.tol,
                                     4 * cfg.max_corrector_iter);
      } catch (const std::exception& e) {
        if (!is_geometry_failure(e)) throw;
        r.converged = false;
      }
      if (!r.converged)
        throw SeedError("could not converge the first branch point near Omega=" +
                        std::to_string(seed.bifurcation_omega) +
                        "; try a smaller epsilon or Omega offset");
      br.points.push_back(make_point(with_omega(r.omega), r.x, r.sup, g, r.iterations));
      std::vector<double> y = r.x;
      y.push_back(r.omega);
      ys.push_back(std::move(y));
      x = r.x;
      for (std::size_t i = 0; i < x.size(); ++i) x[i] *= 2.0;
      omega = r.omega + (r.omega - seed.bifurcation_omega) * 3.0;
    }
  }

  const auto distance = [](std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
  };
  double ds = cfg.ds_initial > 0.0 ? cfg.ds_initial : distance(ys[0], ys[1]);
  ds = std::clamp(ds, cfg.ds_min, cfg.ds_max);
  double peak = 0.0;
  int fast_streak = 0;

  while (true) {
    if (static_cast<int>(br.points.size()) >= cfg.max_points) {
      br.termination = Termination::max_points;
      break;
    }
    const BranchPoint& last = br.points.back();
    if (last.gap_unit_circle < cfg.gap_floor ||
        (last.gap_boundaries && *last.gap_boundaries < cfg.gap_floor)) {
      br.termination = Termination::limiting_proximity;
      break;
    }
    if (ds < cfg.ds_min) {
      br.termination = Termination::step_floor;
      break;
    }
    const auto& y1 = ys[ys.size() - 1];
    const auto& y0 = ys[ys.size() - 2];
    std::vector<double> t(y1.size());
    const double len = distance(y1, y0);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = (y1[i] - y0[i]) / len;
    double target = ds;
    for (std::size_t i = 0; i < t.size(); ++i) target += t[i] * y1[i];
    std::vector<double> x(y1.begin(), y1.end() - 1);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += ds * t[i];
    const double omega = y1.back() + ds * t.back();

    detail::AugmentedResult r;
    bool ok = false;
    try {
      r = detail::augmented_newton(family, x, omega, t, target, g, h, cfg.tol,
                                   cfg.max_corrector_iter);
      ok = r.converged;
    } catch (const std::exception& e) {
      if (!is_geometry_failure(e)) throw;
    }
    // passing through the trivial state onto the mirrored branch
    if (ok && cfg.stop_at_reconnection && peak > 20.0 * seed.epsilon) {
      double dot = 0.0;
      for (std::size_t i = 0; i < r.x.size(); ++i) dot += r.x[i] * y1[i];
      if (dot <= 0.0) ok = false;
    }
    if (!ok) {
      ds *= 0.5;
      fast_streak = 0;
      if (peak > 20.0 * seed.epsilon && max_abs(std::span<const double>(y1.data(), y1.size() - 1)) <
                                            2.0 * seed.epsilon) {
        br.termination = Termination::reconnected;
        break;
      }
      continue;
    }

    // resolution escalation: re-converge this point on the doubled grid
    if (cfg.escalate && tail_energy_fraction(r.x, blocks) > cfg.tail_fraction &&
        2 * g.node_count() <= cfg.max_node_count) {
      const SpectralGrid fine(2 * g.node_count());
      const int fine_count = fine.coeff_count(family.fold);
      std::vector<double> xf = detail::pad_coeffs(r.x, blocks, count, fine_count);
      const auto pad_y = [&](const std::vector<double>& y) {
        std::vector<double> out = detail::pad_coeffs(std::span<const double>(y.data(), y.size() - 1),
                                                     blocks, count, fine_count);
        out.push_back(y.back());
        return out;
      };
      std::vector<double> tf = pad_y(t);
      tf.back() = t.back();
      std::vector<double> y1f = pad_y(y1);
      double tg = ds;
      for (std::size_t i = 0; i < tf.size(); ++i) tg += tf[i] * y1f[i];
      detail::AugmentedResult rf;
      bool fine_ok = false;
      try {
        rf = detail::augmented_newton(family, xf, r.omega, tf, tg, fine, h, cfg.tol,
                                      cfg.max_corrector_iter);
        fine_ok = rf.converged;
      } catch (const std::exception& e) {
        if (!is_geometry_failure(e)) throw;
      }
      if (fine_ok) {
        g = fine;
        for (auto& y : ys) y = pad_y(y);
        count = fine_count;
        r = std::move(rf);
      }
    }

    const bool unresolved =
        cfg.escalate && tail_energy_fraction(r.x, blocks) > cfg.tail_fraction &&
        2 * g.node_count() > cfg.max_node_count;
    br.points.push_back(make_point(with_omega(r.omega), r.x, r.sup, g, r.iterations));
    if (unresolved) {
      // the spectrum no longer decays within the largest allowed grid
      br.termination = Termination::limiting_proximity;
      br.unresolved_tail = true;
      br.message = "coefficient tail unresolved at N=" + std::to_string(g.node_count());
      break;
    }
    std::vector<double> y = r.x;
    y.push_back(r.omega);
    ys.push_back(std::move(y));
    if (ys.size() > 3) ys.erase(ys.begin());
    peak = std::max(peak, max_abs(r.x));

    const std::size_t k = br.points.size();
    if (k >= 3) {
      const double d1 = br.points[k - 2].omega - br.points[k - 3].omega;
      const double d2 = br.points[k - 1].omega - br.points[k - 2].omega;
      if (d1 * d2 < 0.0) br.fold_indices.push_back(static_cast<int>(k - 2));
    }

    fast_streak = r.iterations <= cfg.fast_iterations ? fast_streak + 1 : 0;
    if (fast_streak >= 2) {
      ds = std::min(2.0 * ds, cfg.ds_max);
      fast_streak = 0;
    }
  }
  return br;
}

enum class LimitClass { boundary_touching, corner_forming, boundary_contact, inconclusive };

inline const char* to_string(LimitClass c) {
  switch (c) {
    case LimitClass::boundary_touching: return "boundary-touching";
    case LimitClass::corner_forming: return "corner-forming";
    case LimitClass::boundary_contact: return "inner-outer-near-contact";
    case LimitClass::inconclusive: return "inconclusive";
  }
  return "?";
}

struct LimitThresholds {
  double touching_gap = 1e-2;
  double contact_gap = 1.5e-2;
  double corner_slope = -1.8;
};

struct LimitingEstimate {
  BranchPoint point;
  LimitClass classification = LimitClass::inconclusive;
  double decay_slope = 0.0;
  double min_gap_unit_circle = 0.0;
  std::optional<double> min_gap_boundaries;
};

inline LimitingEstimate limiting_estimate(const Branch& br, const LimitThresholds& th = {}) {
  if (br.points.empty()) throw PreconditionError("empty branch");
  LimitingEstimate est;
  est.point = br.points.back();
  est.min_gap_unit_circle = std::numeric_limits<double>::infinity();
  for (const auto& p : br.points) {
    est.min_gap_unit_circle = std::min(est.min_gap_unit_circle, p.gap_unit_circle);
    if (p.gap_boundaries)
      est.min_gap_boundaries = std::min(est.min_gap_boundaries.value_or(p.gap_boundaries.value()),
                                        *p.gap_boundaries);
  }
  const int blocks = br.problem.boundary_count();
  const int count = static_cast<int>(est.point.coeffs.size()) / blocks;
  est.decay_slope = -std::numeric_limits<double>::infinity();
  for (int b = 0; b < blocks; ++b)
    est.decay_slope = std::max(
        est.decay_slope,
        spectral_decay_slope(std::span<const double>(est.point.coeffs).subspan(b * count, count)));

  if (br.termination == Termination::max_points || br.termination == Termination::reconnected)
    return est;
  if (est.point.gap_boundaries && *est.point.gap_boundaries < th.contact_gap)
    est.classification = LimitClass::boundary_contact;
  else if (est.point.gap_unit_circle < th.touching_gap)
    est.classification = LimitClass::boundary_touching;
  else if (est.decay_slope > th.corner_slope || br.unresolved_tail)
    est.classification = LimitClass::corner_forming;
  return est;
}

/// Converged states at a fixed Omega: every crossing of `omega` by the branch
/// is interpolated and refined by Newton on grid g.
inline std::vector<std::pair<std::vector<double>, NewtonReport>> states_at_omega(
    const Branch& br, double omega, const SpectralGrid& g, NewtonConfig cfg) {
  const int blocks = br.problem.boundary_count();
  const int count = g.coeff_count(br.problem.fold);
  Problem p = br.problem;
  p.omega = omega;
  cfg.normalize_sign = true;
  std::vector<std::pair<std::vector<double>, NewtonReport>> out;
  for (std::size_t k = 1; k < br.points.size(); ++k) {
    const BranchPoint& a = br.points[k - 1];
    const BranchPoint& b = br.points[k];
    if ((a.omega - omega) * (b.omega - omega) > 0.0 || a.omega == b.omega) continue;
    const double s = (omega - a.omega) / (b.omega - a.omega);
    const int ca = static_cast<int>(a.coeffs.size()) / blocks;
    const int cb = static_cast<int>(b.coeffs.size()) / blocks;
    const auto xa = detail::pad_coeffs(a.coeffs, blocks, ca, count);
    const auto xb = detail::pad_coeffs(b.coeffs, blocks, cb, count);
    std::vector<double> x(xa.size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = (1.0 - s) * xa[i] + s * xb[i];
    try {
      auto res = newton_solve(p, std::move(x), g, cfg);
      if (res.second.converged) out.push_back(std::move(res));
    } catch (const SingularSystemError&) {
    } catch (const std::exception& e) {
      if (!is_geometry_failure(e)) throw;
    }
  }
  return out;
}

}  // namespace vstate
