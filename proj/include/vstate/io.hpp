#pragma once

// File formats: contour/state JSON, boundary and branch CSV, run manifests.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "vstate/continuation.hpp"
#include "vstate/contour.hpp"
#include "vstate/errors.hpp"
#include "vstate/solver.hpp"

namespace vstate {

inline constexpr const char* kToolVersion = "0.1.0";

using json = nlohmann::ordered_json;

/// Fixed numeric formatting for every emitted number: 17 significant digits.
inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline json contour_to_json(const FourierContour& c) {
  return json{{"b", c.b}, {"m", c.m}, {"coeffs", c.coeffs}};
}

inline FourierContour contour_from_json(const json& j) {
  try {
    return FourierContour(j.at("b").get<double>(), j.at("m").get<int>(),
                          j.at("coeffs").get<std::vector<double>>());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigurationError(std::string("malformed contour JSON: ") + e.what());
  }
}

/// A stored state: one contour ({"b","m","coeffs"}) or two
/// ({"outer": {...}, "inner": {...}}), with optional "omega" and "node_count".
struct StoredState {
  std::vector<FourierContour> contours;
  std::optional<double> omega;
  std::optional<int> node_count;

  bool doubly() const { return contours.size() == 2; }
};

inline json state_to_json(const StoredState& s) {
  json j;
  if (s.doubly()) {
    j["outer"] = contour_to_json(s.contours[0]);
    j["inner"] = contour_to_json(s.contours[1]);
  } else {
    j = contour_to_json(s.contours.at(0));
  }
  if (s.omega) j["omega"] = *s.omega;
  if (s.node_count) j["node_count"] = *s.node_count;
  return j;
}

inline StoredState state_from_json(const json& j) {
  StoredState s;
  if (j.contains("outer")) {
    s.contours.push_back(contour_from_json(j.at("outer")));
    s.contours.push_back(contour_from_json(j.at("inner")));
  } else {
    s.contours.push_back(contour_from_json(j));
  }
  if (j.contains("omega")) s.omega = j.at("omega").get<double>();
  if (j.contains("node_count")) s.node_count = j.at("node_count").get<int>();
  return s;
}

inline json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigurationError("cannot parse " + path + ": " + e.what());
  }
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigurationError("cannot write " + path);
  out << text;
}

inline void write_json(const std::string& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

inline StoredState read_state(const std::string& path) { return state_from_json(read_json(path)); }

/// theta,x,y at the grid nodes.
inline std::string boundary_csv(const FourierContour& c, const SpectralGrid& g) {
  std::ostringstream os;
  os << "theta,x,y\n";
  for (int i = 0; i < g.node_count(); ++i) {
    const double t = g.theta(i);
    const Complex z = eval_boundary(c, t);
    os << fmt(t) << ',' << fmt(z.real()) << ',' << fmt(z.imag()) << '\n';
  }
  return os.str();
}

inline json report_to_json(const NewtonReport& r) {
  json j{{"converged", r.converged},
         {"iterations", r.iterations},
         {"final_sup_norm", r.final_sup_norm},
         {"final_coeff_norm", r.final_coeff_norm},
         {"trivial", r.trivial}};
  if (!r.warning.empty()) j["warning"] = r.warning;
  return j;
}

/// omega,a_first,sup_residual,gap_unit_circle[,gap_boundaries]
inline std::string branch_csv(const Branch& br) {
  const bool dc = br.problem.is_doubly();
  std::ostringstream os;
  os << "omega,a_first,sup_residual,gap_unit_circle" << (dc ? ",gap_boundaries" : "") << '\n';
  for (const auto& p : br.points) {
    os << fmt(p.omega) << ',' << fmt(p.a_first) << ',' << fmt(p.sup_residual) << ','
       << fmt(p.gap_unit_circle);
    if (dc) os << ',' << fmt(p.gap_boundaries.value_or(0.0));
    os << '\n';
  }
  return os.str();
}

inline json problem_to_json(const Problem& p) {
  json j{{"fold", p.fold}, {"omega", p.omega}};
  if (const auto* s = std::get_if<SimplyConnected>(&p.geometry)) {
    j["kind"] = "sc";
    j["b"] = s->b;
  } else {
    const auto& d = std::get<DoublyConnected>(p.geometry);
    j["kind"] = "dc";
    j["b1"] = d.b1;
    j["b2"] = d.b2;
  }
  return j;
}

inline json branch_to_json(const Branch& br, const LimitingEstimate& est) {
  json pts = json::array();
  for (const auto& p : br.points) {
    json q{{"omega", p.omega},
           {"node_count", p.node_count},
           {"sup_residual", p.sup_residual},
           {"a_first", p.a_first},
           {"gap_unit_circle", p.gap_unit_circle},
           {"coeffs", p.coeffs}};
    if (p.a_inner_first) q["a_inner_first"] = *p.a_inner_first;
    if (p.gap_boundaries) q["gap_boundaries"] = *p.gap_boundaries;
    pts.push_back(std::move(q));
  }
  json lim{{"classification", to_string(est.classification)},
           {"decay_slope", std::isfinite(est.decay_slope) ? json(est.decay_slope) : json(nullptr)},
           {"min_gap_unit_circle", est.min_gap_unit_circle}};
  if (est.min_gap_boundaries) lim["min_gap_boundaries"] = *est.min_gap_boundaries;
  json j{{"problem", problem_to_json(br.problem)},
         {"seed", to_string(br.kind)},
         {"bifurcation_omega", br.bifurcation_omega},
         {"termination", to_string(br.termination)},
         {"fold_indices", br.fold_indices},
         {"limiting", std::move(lim)},
         {"points", std::move(pts)}};
  if (!br.message.empty()) j["message"] = br.message;
  return j;
}

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Run manifest: command, parameters, grid size, version, timestamp, outputs.
struct RunManifest {
  std::string command;
  json params = json::object();
  std::optional<int> node_count;
  std::vector<std::string> outputs;

  json to_json() const {
    json j{{"command", command},
           {"params", params},
           {"node_count", node_count ? json(*node_count) : json(nullptr)},
           {"version", kToolVersion},
           {"timestamp", utc_timestamp()},
           {"outputs", outputs}};
    return j;
  }
};

}  // namespace vstate
