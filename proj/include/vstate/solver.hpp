#pragma once

// Newton iteration with a forward-difference Jacobian on the sine
// coefficients of the V-state residual.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "vstate/contour.hpp"
#include "vstate/errors.hpp"
#include "vstate/residual.hpp"
#include "vstate/spectra.hpp"

namespace vstate {

struct NewtonConfig {
  double fd_step = 1e-10;
  double tol = 1e-13;
  int max_iter = 50;
  int max_halvings = 20;
  double singular_condition = 1e14;
  bool normalize_sign = true;
  NodeEvaluation evaluation = NodeEvaluation::symmetric;

  /// Defaults: h = 1e-10 for one boundary, 1e-9 for two.
  static NewtonConfig for_problem(const Problem& p) {
    NewtonConfig c;
    c.fd_step = p.is_doubly() ? 1e-9 : 1e-10;
    return c;
  }

  void validate() const {
    if (!(fd_step > 0.0) || !(tol > 0.0) || max_iter < 1 || max_halvings < 0)
      throw ConfigurationError("Newton configuration needs fd_step > 0, tol > 0, max_iter >= 1");
  }
};

struct NewtonReport {
  bool converged = false;
  int iterations = 0;
  double final_sup_norm = 0.0;
  double final_coeff_norm = 0.0;
  bool trivial = false;
  std::string warning;
};

/// Coefficient count per boundary implied by an unknown vector.
inline int coeff_count(const Problem& p, std::size_t unknowns) {
  const int per = p.is_doubly() ? static_cast<int>(unknowns / 2) : static_cast<int>(unknowns);
  if (per < 1 || (p.is_doubly() && unknowns % 2 != 0))
    throw ConfigurationError("unknown vector length " + std::to_string(unknowns) +
                             " does not fit the problem");
  return per;
}

/// Boundaries encoded by the unknowns (outer first for two boundaries).
inline std::vector<FourierContour> contours_from_unknowns(const Problem& p,
                                                          std::span<const double> x) {
  const int count = coeff_count(p, x.size());
  std::vector<FourierContour> out;
  for (int which = 0; which < p.boundary_count(); ++which) {
    std::vector<double> a(x.begin() + which * count, x.begin() + (which + 1) * count);
    out.emplace_back(p.mean_radius(which), p.fold, std::move(a));
  }
  return out;
}

/// Residual node values, stacked per boundary.
inline std::vector<std::vector<double>> residual_nodes(const Problem& p, std::span<const double> x,
                                                       const SpectralGrid& g,
                                                       NodeEvaluation mode = NodeEvaluation::symmetric) {
  const auto cs = contours_from_unknowns(p, x);
  if (!p.is_doubly()) return {sc_residual_nodes(cs[0], p.omega, g, mode)};
  DcResidual r = dc_residual_nodes(cs[0], cs[1], p.omega, g, mode);
  return {std::move(r.outer), std::move(r.inner)};
}

/// Sine coefficients of the residual(s): length M, or 2M stacked outer then inner.
inline std::vector<double> assemble_F(const Problem& p, std::span<const double> x,
                                      const SpectralGrid& g,
                                      NodeEvaluation mode = NodeEvaluation::symmetric) {
  const int count = coeff_count(p, x.size());
  g.require_compatible(p.fold, count);
  std::vector<double> f;
  f.reserve(x.size());
  for (const auto& nodes : residual_nodes(p, x, g, mode)) {
    const ResidualSpectrum s = sine_project(nodes, p.fold, count, g);
    f.insert(f.end(), s.coeffs.begin(), s.coeffs.end());
  }
  return f;
}

/// dF/dOmega. The map is affine in Omega, so this is exact.
inline std::vector<double> assemble_F_omega(const Problem& p, std::span<const double> x,
                                            const SpectralGrid& g) {
  const int count = coeff_count(p, x.size());
  std::vector<double> f;
  for (const auto& c : contours_from_unknowns(p, x)) {
    const ResidualSpectrum s = sine_project(omega_derivative_nodes(c, g), p.fold, count, g);
    f.insert(f.end(), s.coeffs.begin(), s.coeffs.end());
  }
  return f;
}

/// Stopping measure: max over nodes of the reconstructed sine series(es).
inline double residual_sup(const Problem& p, std::span<const double> f, const SpectralGrid& g) {
  const int count = coeff_count(p, f.size());
  double sup = 0.0;
  for (int which = 0; which < p.boundary_count(); ++which)
    sup = std::max(sup, reconstructed_sup(f.subspan(which * count, count), p.fold, g));
  return sup;
}

inline double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

/// Worker count for independent evaluations: VSTATE_THREADS, else 1.
inline int worker_count() {
  if (const char* env = std::getenv("VSTATE_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  return 1;
}

/// Forward-difference Jacobian, column j = (F(x + h e_j) - F(x)) / h.
/// `f0` may carry a precomputed F(x).
inline Eigen::MatrixXd fd_jacobian(const Problem& p, std::span<const double> x,
                                   const SpectralGrid& g, double h,
                                   const std::vector<double>* f0 = nullptr,
                                   NodeEvaluation mode = NodeEvaluation::symmetric) {
  if (!(h > 0.0)) throw ConfigurationError("finite-difference step must be positive");
  const std::vector<double> base = f0 ? *f0 : assemble_F(p, x, g, mode);
  const int n = static_cast<int>(x.size());
  Eigen::MatrixXd jac(static_cast<Eigen::Index>(base.size()), n);
  const auto column = [&](int j) {
    std::vector<double> xp(x.begin(), x.end());
    xp[j] += h;
    const std::vector<double> fp = assemble_F(p, xp, g, mode);
    for (std::size_t i = 0; i < fp.size(); ++i) jac(static_cast<Eigen::Index>(i), j) = (fp[i] - base[i]) / h;
  };
  const int workers = std::min(worker_count(), n);
  if (workers <= 1) {
    for (int j = 0; j < n; ++j) column(j);
    return jac;
  }
  // disjoint column writes: the result does not depend on scheduling
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int j = w; j < n; j += workers) column(j);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return jac;
}

/// 2-norm condition number of a square matrix.
inline double condition_number(const Eigen::MatrixXd& a) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  const auto& s = svd.singularValues();
  if (s.size() == 0) return 0.0;
  const double lo = s(s.size() - 1);
  return lo > 0.0 ? s(0) / lo : std::numeric_limits<double>::infinity();
}

/// Closest bifurcation velocity among modes m k, k = 1..count.
inline std::string nearest_bifurcation(const Problem& p, int count) {
  double best = std::numeric_limits<double>::infinity(), where = 0.0;
  int mode = 0;
  const auto consider = [&](int n, double w) {
    if (std::abs(w - p.omega) < best) {
      best = std::abs(w - p.omega);
      where = w;
      mode = n;
    }
  };
  for (int k = 1; k <= count; ++k) {
    const int n = p.fold * k;
    if (const auto* s = std::get_if<SimplyConnected>(&p.geometry)) {
      consider(n, sc_eigen(n, s->b).omega);
    } else {
      const auto& d = std::get<DoublyConnected>(p.geometry);
      const DcSpectrum sp = dc_spectrum(n, d.b1, d.b2);
      if (sp.real()) {
        consider(n, *sp.omega_plus);
        consider(n, *sp.omega_minus);
      }
    }
  }
  if (mode == 0) return "no real bifurcation velocity among the resolved modes";
  return "suspected bifurcation at Omega=" + std::to_string(where) + " (mode " +
         std::to_string(mode) + ", distance " + std::to_string(best) + ")";
}

/// Rotation by pi/m maps a_k to (-1)^k a_k and keeps x-axis symmetry, so
/// the sign of the leading coefficient is a free choice of representative.
inline void flip_half_period(std::span<double> a) {
  // index i holds a_{i+1}: odd modes sit at even indices
  for (std::size_t i = 0; i < a.size(); i += 2) a[i] = -a[i];
}

/// Enforces a_1 > 0 (one boundary) or a_{1,1} > 0 (two boundaries); returns a
/// warning if the doubly-connected root then has a_{2,1} >= 0.
inline std::string normalize_sign(const Problem& p, std::span<double> x) {
  const int count = coeff_count(p, x.size());
  if (x[0] < 0.0)
    for (int which = 0; which < p.boundary_count(); ++which)
      flip_half_period(x.subspan(which * count, count));
  if (p.is_doubly() && max_abs(x) > 1e-10 && !(x[count] < 0.0))
    return "inner leading coefficient is not negative after normalization";
  return {};
}

/// Plain Newton from `initial`. Iterates that break the geometry are pulled
/// back by halving the step.
inline std::pair<std::vector<double>, NewtonReport> newton_solve(const Problem& p,
                                                                 std::vector<double> initial,
                                                                 const SpectralGrid& g,
                                                                 const NewtonConfig& cfg) {
  cfg.validate();
  p.validate();
  for (double v : initial)
    if (!std::isfinite(v)) throw PreconditionError("initial vector is not finite");
  const int count = coeff_count(p, initial.size());
  g.require_compatible(p.fold, count);

  std::vector<double> x = std::move(initial);
  std::vector<double> f = assemble_F(p, x, g, cfg.evaluation);
  double sup = residual_sup(p, f, g);
  NewtonReport rep;
  while (sup >= cfg.tol && rep.iterations < cfg.max_iter) {
    const Eigen::MatrixXd jac = fd_jacobian(p, x, g, cfg.fd_step, &f, cfg.evaluation);
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(jac);
    const double rc = lu.rcond();
    if (!(rc * cfg.singular_condition > 1.0))
      throw SingularSystemError("Jacobian is numerically singular (condition estimate " +
                                std::to_string(1.0 / rc) + "); " + nearest_bifurcation(p, count));
    const Eigen::VectorXd dx = lu.solve(Eigen::Map<const Eigen::VectorXd>(f.data(), f.size()));

    double step = 1.0;
    for (int halving = 0;; ++halving) {
      std::vector<double> trial(x);
      for (std::size_t i = 0; i < trial.size(); ++i) trial[i] -= step * dx(static_cast<Eigen::Index>(i));
      try {
        f = assemble_F(p, trial, g, cfg.evaluation);
        x = std::move(trial);
        break;
      } catch (const std::exception& e) {
        if (!is_geometry_failure(e) || halving >= cfg.max_halvings) throw;
        step *= 0.5;
      }
    }
    sup = residual_sup(p, f, g);
    ++rep.iterations;
  }
  rep.converged = sup < cfg.tol;
  rep.final_sup_norm = sup;
  rep.final_coeff_norm = max_abs(x);
  rep.trivial = rep.final_coeff_norm < 1e-10;
  if (cfg.normalize_sign && !rep.trivial) rep.warning = normalize_sign(p, x);
  return {std::move(x), rep};
}

}  // namespace vstate
