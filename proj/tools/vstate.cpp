// vstate: command-line front end.
//
//   vstate eigen  sc|dc|bstar|onefold ...   closed-form spectrum tables
//   vstate solve  sc|dc ...                 single Newton solve
//   vstate branch sc|dc ...                 branch continuation
//   vstate verify ...                       rigid-rotation check by time stepping
//
// Exit codes: 0 ok, 1 non-convergence / tolerance breach, 2 usage, 3 geometry.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "vstate/continuation.hpp"
#include "vstate/contour.hpp"
#include "vstate/dynamics.hpp"
#include "vstate/io.hpp"
#include "vstate/solver.hpp"
#include "vstate/spectra.hpp"

using namespace vstate;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;
constexpr int kExitGeometry = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// "lo:hi:step" or a single value
std::vector<double> parse_real_range(const std::string& text, const char* name) {
  std::vector<double> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ':')) {
    try {
      std::size_t used = 0;
      parts.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError(std::string("bad value in --") + name + ": '" + text + "'");
    }
  }
  if (parts.size() == 1) return parts;
  if (parts.size() != 3 || !(parts[2] > 0.0) || parts[1] < parts[0])
    throw UsageError(std::string("--") + name + " expects lo:hi:step with step > 0");
  std::vector<double> out;
  const long count = std::lround(std::floor((parts[1] - parts[0]) / parts[2] + 1e-9));
  for (long i = 0; i <= count; ++i) out.push_back(parts[0] + i * parts[2]);
  return out;
}

// "lo:hi" or a single integer
std::vector<int> parse_int_range(const std::string& text, const char* name) {
  int lo = 0, hi = 0;
  char sep = 0;
  std::stringstream ss(text);
  if (!(ss >> lo)) throw UsageError(std::string("bad value in --") + name);
  if (ss >> sep) {
    if (sep != ':' || !(ss >> hi)) throw UsageError(std::string("--") + name + " expects lo:hi");
  } else {
    hi = lo;
  }
  if (hi < lo) throw UsageError(std::string("--") + name + ": empty range");
  std::vector<int> out;
  for (int v = lo; v <= hi; ++v) out.push_back(v);
  return out;
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw UsageError(msg);
}

std::string join_path(const std::string& prefix, const std::string& suffix) { return prefix + suffix; }

void finish_manifest(RunManifest& man, const std::string& prefix) {
  const std::string path = join_path(prefix, ".manifest.json");
  man.outputs.push_back(path);
  write_json(path, man.to_json());
}

SpectralGrid grid_for(int fold, std::optional<int> nodes, int r) {
  if (nodes) {
    require(*nodes % fold == 0, "--N must be a multiple of the fold");
    return SpectralGrid(*nodes);
  }
  return SpectralGrid::for_fold(fold, r);
}

// ------------------------------------------------------------------ eigen

struct EigenArgs {
  std::string kind;
  std::string b = "0.1:0.99:0.01";
  std::string b1 = "0.75";
  std::string b2 = "0.05:0.7:0.05";
  std::string m = "1:20";
  int samples = 200;
  bool intersections = false;
  std::string out = "eigen";
};

int run_eigen(const EigenArgs& a) {
  RunManifest man;
  man.command = "eigen " + a.kind;
  std::ostringstream os;
  const std::string csv = join_path(a.out, ".csv");
  if (a.kind == "sc") {
    const auto bs = parse_real_range(a.b, "b");
    const auto ms = parse_int_range(a.m, "m");
    for (double b : bs) require(b > 0.0 && b < 1.0, "--b values must lie in (0,1)");
    require(ms.front() >= 1, "--m must be >= 1");
    man.params = {{"b", a.b}, {"m", a.m}};
    os << "m,b,lambda,omega\n";
    for (int m : ms)
      for (double b : bs) {
        const ScEigen e = sc_eigen(m, b);
        os << m << ',' << fmt(b) << ',' << fmt(e.lambda) << ',' << fmt(e.omega) << '\n';
      }
  } else if (a.kind == "dc") {
    const auto b1s = parse_real_range(a.b1, "b1");
    const auto ms = parse_int_range(a.m, "m");
    require(b1s.size() == 1, "eigen dc takes a single --b1");
    const double b1 = b1s[0];
    require(b1 > 0.0 && b1 < 1.0, "--b1 must lie in (0,1)");
    require(ms.front() >= 1, "--m must be >= 1");
    require(a.samples >= 2, "--samples must be >= 2");
    man.params = {{"b1", a.b1}, {"m", a.m}, {"samples", a.samples}, {"intersections", a.intersections}};
    os << "m,b2,lambda_minus,lambda_plus\n";
    for (int m : ms) {
      // mode 1 is real on all of (0, b1); higher modes on (0, b_m^*]
      const double top = m == 1 ? b1 * (1.0 - 1e-9) : b_star(m, b1);
      for (int j = 1; j <= a.samples; ++j) {
        const double b2 = top * j / a.samples;
        const DcSpectrum s = dc_spectrum(m, b1, b2);
        if (!s.real()) continue;
        os << m << ',' << fmt(b2) << ',' << fmt(*s.lambda_minus) << ',' << fmt(*s.lambda_plus) << '\n';
      }
    }
    if (a.intersections) {
      std::ostringstream is;
      is << "n,b2,lambda\n";
      for (const auto& [n, x] : onefold_intersections(b1, std::max(2, ms.back())))
        is << n << ',' << fmt(x) << ',' << fmt(1.0 + x * x - b1 * b1) << '\n';
      const std::string path = join_path(a.out, ".intersections.csv");
      write_text(path, is.str());
      man.outputs.push_back(path);
    }
  } else if (a.kind == "bstar") {
    const auto b1s = parse_real_range(a.b1, "b1");
    const auto ms = parse_int_range(a.m, "m");
    for (double b : b1s) require(b > 0.0 && b < 1.0, "--b1 values must lie in (0,1)");
    require(ms.front() >= 2, "eigen bstar needs --m >= 2");
    man.params = {{"b1", a.b1}, {"m", a.m}};
    os << "m,b1,b_star\n";
    for (int m : ms)
      for (double b1 : b1s) os << m << ',' << fmt(b1) << ',' << fmt(b_star(m, b1)) << '\n';
  } else if (a.kind == "onefold") {
    const auto b1s = parse_real_range(a.b1, "b1");
    const auto b2s = parse_real_range(a.b2, "b2");
    man.params = {{"b1", a.b1}, {"b2", a.b2}};
    os << "b1,b2,lambda_minus,lambda_plus,omega_plus,omega_minus\n";
    for (double b1 : b1s)
      for (double b2 : b2s) {
        require(b2 > 0.0 && b2 < b1 && b1 < 1.0, "onefold needs 0 < b2 < b1 < 1");
        const OnefoldEigen e = onefold_eigen(b1, b2);
        const OmegaPair w = omega_pair(e.lambda_minus, e.lambda_plus);
        os << fmt(b1) << ',' << fmt(b2) << ',' << fmt(e.lambda_minus) << ',' << fmt(e.lambda_plus)
           << ',' << fmt(w.plus) << ',' << fmt(w.minus) << '\n';
      }
  } else {
    throw UsageError("eigen kind must be sc, dc, bstar or onefold");
  }
  write_text(csv, os.str());
  man.outputs.insert(man.outputs.begin(), csv);
  finish_manifest(man, a.out);
  return kExitOk;
}

// ------------------------------------------------------------------ solve

struct ProblemArgs {
  std::string kind;
  int m = 0;
  double b = 0.0, b1 = 0.0, b2 = 0.0;
  int r = 6;
  std::optional<int> nodes;

  Problem problem(double omega) const {
    require(m >= 1, "--m must be >= 1");
    if (kind == "sc") {
      require(b > 0.0 && b < 1.0, "--b must lie in (0,1)");
      return Problem::simply(b, m, omega);
    }
    if (kind == "dc") {
      require(b2 > 0.0 && b2 < b1 && b1 < 1.0, "need 0 < --b2 < --b1 < 1");
      return Problem::doubly(b1, b2, m, omega);
    }
    throw UsageError("problem kind must be sc or dc");
  }

  json to_json() const {
    json j{{"kind", kind}, {"m", m}, {"r", r}};
    if (kind == "sc") j["b"] = b;
    else {
      j["b1"] = b1;
      j["b2"] = b2;
    }
    if (nodes) j["N"] = *nodes;
    return j;
  }
};

struct SolveArgs {
  ProblemArgs prob;
  double omega = 0.0;
  double seed_a1 = 1e-3;
  double seed_a21 = 0.0;
  std::string seed_file;
  std::string from_branch;
  int pick = 0;
  int trace_r = 6;
  std::string out = "state";
};

// Coefficients of a stored state, resized to `count` per boundary.
std::vector<double> coeffs_from_state(const StoredState& s, int blocks, int count) {
  require(static_cast<int>(s.contours.size()) == blocks, "seed file has the wrong number of boundaries");
  std::vector<double> x;
  for (const auto& c : s.contours) {
    std::vector<double> a = c.coeffs;
    a.resize(count, 0.0);
    x.insert(x.end(), a.begin(), a.end());
  }
  return x;
}

int run_solve(const SolveArgs& a) {
  const Problem p = a.prob.problem(a.omega);
  const SpectralGrid g = grid_for(p.fold, a.prob.nodes, a.prob.r);
  const int count = g.coeff_count(p.fold);
  require(count >= 1, "grid too small for this fold");
  NewtonConfig cfg = NewtonConfig::for_problem(p);

  std::vector<double> x;
  NewtonReport rep;
  if (!a.from_branch.empty()) {
    // follow the branch to this Omega, then refine each crossing on g
    const SeedKind kind = a.from_branch == "sc"     ? SeedKind::simply
                          : a.from_branch == "plus" ? SeedKind::plus
                          : a.from_branch == "minus" ? SeedKind::minus
                                                     : throw UsageError("--from-branch is sc, plus or minus");
    const SpectralGrid coarse = SpectralGrid::for_fold(p.fold, std::min(a.trace_r, a.prob.r));
    const Seed seed = seed_from_bifurcation(p, kind, coarse.coeff_count(p.fold));
    const Branch br = trace_branch(seed, coarse);
    auto states = states_at_omega(br, a.omega, g, cfg);
    if (states.empty()) {
      std::cerr << "the traced branch does not reach Omega=" << fmt(a.omega) << "\n";
      return kExitFail;
    }
    std::cerr << states.size() << " state(s) found at Omega=" << fmt(a.omega) << "\n";
    require(a.pick >= 0 && a.pick < static_cast<int>(states.size()),
            "--pick out of range (found " + std::to_string(states.size()) + ")");
    x = states[a.pick].first;
    rep = states[a.pick].second;
  } else {
    std::vector<double> init(static_cast<std::size_t>(p.boundary_count()) * count, 0.0);
    if (!a.seed_file.empty()) {
      init = coeffs_from_state(read_state(a.seed_file), p.boundary_count(), count);
    } else {
      init[0] = a.seed_a1;
      if (p.is_doubly()) init[count] = a.seed_a21;
    }
    auto res = newton_solve(p, std::move(init), g, cfg);
    x = std::move(res.first);
    rep = res.second;
  }

  StoredState st;
  st.contours = contours_from_unknowns(p, x);
  st.omega = p.omega;
  st.node_count = g.node_count();
  RunManifest man;
  man.command = "solve " + a.prob.kind;
  man.params = a.prob.to_json();
  man.params["omega"] = a.omega;
  man.params["seed_a1"] = a.seed_a1;
  if (p.is_doubly()) man.params["seed_a21"] = a.seed_a21;
  if (!a.seed_file.empty()) man.params["seed_file"] = a.seed_file;
  if (!a.from_branch.empty()) {
    man.params["from_branch"] = a.from_branch;
    man.params["pick"] = a.pick;
    man.params["trace_r"] = a.trace_r;
  }
  man.node_count = g.node_count();

  const std::string state_path = join_path(a.out, ".contour.json");
  write_json(state_path, state_to_json(st));
  man.outputs.push_back(state_path);
  const char* names[] = {".boundary.csv", ".inner.csv"};
  for (std::size_t i = 0; i < st.contours.size(); ++i) {
    const std::string path = join_path(a.out, names[i]);
    write_text(path, boundary_csv(st.contours[i], g));
    man.outputs.push_back(path);
  }
  const std::string rep_path = join_path(a.out, ".report.json");
  write_json(rep_path, report_to_json(rep));
  man.outputs.push_back(rep_path);
  finish_manifest(man, a.out);
  if (rep.trivial) std::cerr << "converged to the trivial solution\n";
  return rep.converged ? kExitOk : kExitFail;
}

// ------------------------------------------------------------------ branch

struct BranchArgs {
  ProblemArgs prob;
  std::string from = "plus";
  double epsilon = 1e-3;
  double delta_omega = 1e-3;
  int max_points = 2000;
  double ds_max = 5e-2;
  double gap_floor = 5e-3;
  int max_nodes = 2048;
  std::string out = "branch";
};

int run_branch(BranchArgs a) {
  a.prob.r = a.prob.nodes ? a.prob.r : std::min(a.prob.r, 8);
  const Problem p = a.prob.problem(0.0);
  const SpectralGrid g = grid_for(p.fold, a.prob.nodes, a.prob.r);
  SeedKind kind = SeedKind::simply;
  if (p.is_doubly()) {
    require(a.from == "plus" || a.from == "minus", "--from is plus or minus");
    kind = a.from == "plus" ? SeedKind::plus : SeedKind::minus;
  }
  const Seed seed = seed_from_bifurcation(p, kind, g.coeff_count(p.fold), a.epsilon, a.delta_omega);
  if (!seed.warning.empty()) std::cerr << "warning: " << seed.warning << "\n";
  ContinuationConfig cfg;
  cfg.max_points = a.max_points;
  cfg.ds_max = a.ds_max;
  cfg.gap_floor = a.gap_floor;
  cfg.max_node_count = a.max_nodes;
  const Branch br = trace_branch(seed, g, cfg);
  const LimitingEstimate est = limiting_estimate(br);

  RunManifest man;
  man.command = "branch " + a.prob.kind;
  man.params = a.prob.to_json();
  if (p.is_doubly()) man.params["from"] = a.from;
  man.params["epsilon"] = a.epsilon;
  man.params["delta_omega"] = a.delta_omega;
  man.params["max_points"] = a.max_points;
  man.params["ds_max"] = a.ds_max;
  man.params["gap_floor"] = a.gap_floor;
  man.params["max_nodes"] = a.max_nodes;
  man.node_count = g.node_count();
  const std::string csv = join_path(a.out, ".csv");
  const std::string js = join_path(a.out, ".json");
  write_text(csv, branch_csv(br));
  write_json(js, branch_to_json(br, est));
  man.outputs = {csv, js};
  finish_manifest(man, a.out);
  std::cerr << br.points.size() << " points, " << br.fold_indices.size() << " fold(s), "
            << to_string(br.termination) << ", " << to_string(est.classification) << "\n";
  return kExitOk;
}

// ------------------------------------------------------------------ verify

struct VerifyArgs {
  std::string state;
  std::optional<double> omega;
  std::optional<double> duration;
  int steps = 2000;
  double tol = 1e-4;
  std::optional<int> nodes;
  std::string snapshots;
  std::string out = "verify";
};

int run_verify(const VerifyArgs& a) {
  const StoredState st = read_state(a.state);
  require(a.omega || st.omega, "state has no omega; pass --omega");
  const double omega = a.omega ? *a.omega : *st.omega;
  const int fold = st.contours[0].m;
  int n = a.nodes ? *a.nodes : st.node_count.value_or(0);
  if (n == 0) {
    // smallest m 2^r grid that resolves the coefficients
    int r = 2;
    while ((fold << r) < 2 * fold * st.contours[0].size() + 1) ++r;
    n = fold << r;
  }
  require(a.steps >= 1, "--steps must be >= 1");
  require(std::abs(omega) > 0.0 || a.duration, "Omega = 0 needs an explicit --T");
  const double duration = a.duration ? *a.duration : kTwoPi / (fold * std::abs(omega));
  require(duration > 0.0, "--T must be positive");
  const SpectralGrid g(n);

  RunManifest man;
  man.command = "verify";
  man.params = {{"state", a.state}, {"omega", omega}, {"T", duration}, {"steps", a.steps}, {"tol", a.tol}};
  man.node_count = n;

  std::ostringstream snap;
  std::function<void(const EvolutionState&)> observer;
  if (!a.snapshots.empty()) {
    snap << "theta_index,t,x,y\n";
    observer = [&](const EvolutionState& s) {
      for (const auto& c : s.nodes)
        for (std::size_t i = 0; i < c.size(); ++i)
          snap << i << ',' << fmt(s.time) << ',' << fmt(c[i].real()) << ',' << fmt(c[i].imag()) << '\n';
    };
  }

  json out{{"omega", omega}, {"T", duration}, {"steps", a.steps}, {"node_count", n}, {"tolerance", a.tol}};
  bool pass = false;
  try {
    const RigidCheckReport rep = evolve_rigid_check(st.contours, omega, duration, a.steps, g, 20, observer);
    out["max_set_deviation"] = rep.max_set_deviation;
    out["max_node_drift"] = rep.max_node_drift;
    out["area_drift"] = rep.area_drift;
    pass = rep.max_set_deviation <= a.tol;
  } catch (const InstabilityError& e) {
    out["instability"] = e.what();
    out["instability_time"] = e.time();
  }
  out["pass"] = pass;
  const std::string path = join_path(a.out, ".json");
  write_json(path, out);
  man.outputs.push_back(path);
  if (!a.snapshots.empty()) {
    write_text(a.snapshots, snap.str());
    man.outputs.push_back(a.snapshots);
  }
  finish_manifest(man, a.out);
  std::cerr << (pass ? "pass" : "fail") << "\n";
  return pass ? kExitOk : kExitFail;
}

void add_problem_options(CLI::App* cmd, ProblemArgs& p) {
  cmd->add_option("kind", p.kind, "sc or dc")->required()->check(CLI::IsMember({"sc", "dc"}));
  cmd->add_option("--m", p.m, "fold")->required();
  cmd->add_option("--b", p.b, "radius (sc)");
  cmd->add_option("--b1", p.b1, "outer radius (dc)");
  cmd->add_option("--b2", p.b2, "inner radius (dc)");
  cmd->add_option("--r", p.r, "grid exponent: N = m 2^r");
  cmd->add_option("--N", p.nodes, "grid size (multiple of m), overrides --r");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rotating vortex patches (V-states) in the unit disc"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  EigenArgs ea;
  auto* eigen = app.add_subcommand("eigen", "bifurcation spectrum tables");
  eigen->add_option("kind", ea.kind, "sc, dc, bstar or onefold")->required();
  eigen->add_option("--b", ea.b, "radius range lo:hi:step (sc)");
  eigen->add_option("--b1", ea.b1, "outer radius (dc, onefold) or range (bstar)");
  eigen->add_option("--b2", ea.b2, "inner radius range (onefold)");
  eigen->add_option("--m", ea.m, "mode range lo:hi");
  eigen->add_option("--samples", ea.samples, "points per curve (dc)");
  eigen->add_flag("--intersections", ea.intersections, "also write 1-fold intersections (dc)");
  eigen->add_option("--out", ea.out, "output prefix");

  SolveArgs sa;
  auto* solve = app.add_subcommand("solve", "Newton solve at fixed Omega");
  add_problem_options(solve, sa.prob);
  solve->add_option("--omega", sa.omega, "angular velocity")->required();
  solve->add_option("--seed-a1", sa.seed_a1, "initial a_1 (a_{1,1} for dc)");
  solve->add_option("--seed-a21", sa.seed_a21, "initial a_{2,1} (dc)");
  solve->add_option("--seed-file", sa.seed_file, "initial coefficients from a state JSON");
  solve->add_option("--from-branch", sa.from_branch, "trace the branch (sc|plus|minus) to Omega first");
  solve->add_option("--pick", sa.pick, "which branch crossing to keep (with --from-branch)");
  solve->add_option("--trace-r", sa.trace_r, "grid exponent used while tracing");
  solve->add_option("--out", sa.out, "output prefix");

  BranchArgs ba;
  auto* branch = app.add_subcommand("branch", "continuation from a bifurcation point");
  add_problem_options(branch, ba.prob);
  ba.prob.r = 6;
  branch->add_option("--from", ba.from, "plus or minus (dc)");
  branch->add_option("--epsilon", ba.epsilon, "seed amplitude");
  branch->add_option("--delta-omega", ba.delta_omega, "seed Omega offset (initial guess)");
  branch->add_option("--max-points", ba.max_points, "point budget");
  branch->add_option("--ds-max", ba.ds_max, "largest arclength step");
  branch->add_option("--gap-floor", ba.gap_floor, "stop when a gap falls below this");
  branch->add_option("--max-N", ba.max_nodes, "largest grid used by resolution escalation");
  branch->add_option("--out", ba.out, "output prefix");

  VerifyArgs va;
  auto* verify = app.add_subcommand("verify", "rigid-rotation check of a stored state");
  verify->add_option("state", va.state, "state JSON")->required();
  verify->add_option("--omega", va.omega, "angular velocity (default: from the state)");
  verify->add_option("--T", va.duration, "duration (default: one symmetry period)");
  verify->add_option("--steps", va.steps, "RK4 steps");
  verify->add_option("--tol", va.tol, "set-deviation tolerance");
  verify->add_option("--N", va.nodes, "node count (default: from the state)");
  verify->add_option("--snapshots", va.snapshots, "CSV of node positions at sampled times");
  verify->add_option("--out", va.out, "output prefix");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*eigen) return run_eigen(ea);
    if (*solve) return run_solve(sa);
    if (*branch) return run_branch(ba);
    if (*verify) return run_verify(va);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const PreconditionError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigurationError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NoBifurcationError& e) {
    std::cerr << "no bifurcation: " << e.what() << "\n";
    return kExitUsage;
  } catch (const SeedError& e) {
    std::cerr << "seed error: " << e.what() << "\n";
    return kExitFail;
  } catch (const SingularSystemError& e) {
    std::cerr << "singular system: " << e.what() << "\n";
    return kExitFail;
  } catch (const std::exception& e) {
    if (is_geometry_failure(e)) {
      std::cerr << "geometry violation: " << e.what() << "\n";
      return kExitGeometry;
    }
    std::cerr << "error: " << e.what() << "\n";
    return kExitFail;
  }
  return kExitUsage;
}
