// Scenario configuration: an INI file with fixed sections. Every key is
// optional except where noted; unknown sections and keys are errors.
//
//   [scenario]   name
//   [grid]       length, cells                       (cube (0, length)^3)
//   [parameters] any model parameter by name
//   [network]    kind = vessels | file | builtin; path (file); name (builtin)
//   [vessel.N]   start, end ("x y z"), radius, p_start, p_end,
//                phi_start, phi_end ("none" for no condition)
//   [tumor]      center ("x y z"), radius
//   [initial]    sigma, ecm, phi_v ("none": same as sigma)
//   [time]       dt, t_end, fixed_point_tol, fixed_point_max_iters,
//                scope = flow | all
//   [solver]     rel_tol, max_iters
//   [coupling]   n_theta
//   [output]     directory, vtk_every
//
// Lines starting with ';' are comments.
#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "tumor3d1d/engine.hpp"
#include "tumor3d1d/grid.hpp"
#include "tumor3d1d/parameters.hpp"

namespace tumor3d1d::io {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct VesselSpec {
  Vec3 start, end;
  double radius = 0.0;
  std::optional<double> p_start, p_end, phi_start, phi_end;
  friend bool operator==(const VesselSpec&, const VesselSpec&) = default;
};

enum class NetworkKind { Vessels, File, Builtin };

struct ScenarioConfig {
  std::string name = "custom";
  double length = 2.0;
  std::size_t cells = 40;
  Parameters parameters;

  NetworkKind network_kind = NetworkKind::Vessels;
  std::string network_path;
  std::string network_builtin;
  std::vector<VesselSpec> vessels;

  Vec3 tumor_center{1.0, 1.0, 1.0};
  double tumor_radius = 0.3;

  double sigma0 = 0.6;
  double ecm0 = 1.0;
  std::optional<double> phi_v0;

  double dt = 0.025;
  double t_end = 5.0;
  double fixed_point_tol = 1e-8;
  std::size_t fixed_point_max_iters = 50;
  FixedPointScope scope = FixedPointScope::Flow;

  double solver_rel_tol = 1e-10;
  std::size_t solver_max_iters = 0;
  std::size_t n_theta = 8;

  std::string output_dir = "output";
  std::size_t vtk_every = 20;

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;

  Grid3D grid() const { return Grid3D::cube(length, cells); }

  TimeLoopConfig time() const {
    TimeLoopConfig t;
    t.dt = dt;
    t.t_end = t_end;
    t.fixed_point_tol = fixed_point_tol;
    t.fixed_point_max_iters = fixed_point_max_iters;
    t.output_every = vtk_every;
    t.scope = scope;
    return t;
  }

  linalg::SolverConfig solver() const {
    linalg::SolverConfig s;
    s.rel_tol = solver_rel_tol;
    s.max_iters = solver_max_iters;
    return s;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& where, const std::string& text) {
  const std::string t = trim(text);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    throw ConfigError(where + ": expected a number, got '" + text + "'");
  }
  if (used != t.size()) throw ConfigError(where + ": expected a number, got '" + text + "'");
  return v;
}

inline std::size_t parse_count(const std::string& where, const std::string& text) {
  const double v = parse_double(where, text);
  if (v < 0.0 || v != std::floor(v)) throw ConfigError(where + ": expected a nonnegative integer, got '" + text + "'");
  return static_cast<std::size_t>(v);
}

inline std::optional<double> parse_optional(const std::string& where, const std::string& text) {
  if (trim(text) == "none") return std::nullopt;
  return parse_double(where, text);
}

inline Vec3 parse_vec3(const std::string& where, const std::string& text) {
  std::istringstream in(text);
  std::string a, b, c, extra;
  if (!(in >> a >> b >> c) || (in >> extra)) throw ConfigError(where + ": expected three numbers, got '" + text + "'");
  return {parse_double(where, a), parse_double(where, b), parse_double(where, c)};
}

// Shortest text that parses back to the same double.
inline std::string fmt(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : "none"; }

inline std::string fmt(Vec3 v) { return fmt(v.x) + " " + fmt(v.y) + " " + fmt(v.z); }

}  // namespace detail

/// Parses configuration text. `source` names the input in error messages.
inline ScenarioConfig parse_config(const std::string& text, const std::string& source = "config") {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(source + ":" + std::to_string(e.line()) + ": " + e.message());
  }

  ScenarioConfig cfg;
  std::vector<std::string> errors;
  std::map<std::size_t, VesselSpec> vessels;

  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      errors.push_back(source + ": key '" + section + "' outside of a section");
      continue;
    }
    static const std::set<std::string> kSections{"scenario", "grid",   "parameters", "network", "tumor",
                                                 "initial",  "time",   "solver",     "coupling", "output"};
    if (section.rfind("vessel.", 0) != 0 && !kSections.count(section)) {
      errors.push_back(source + ": unknown section [" + section + "]");
      continue;
    }
    for (const auto& [key, node] : body) {
      const std::string where = source + ": [" + section + "] " + key;
      const std::string val = node.data();
      try {
        bool known = true;
        if (section == "scenario") {
          if (key == "name") cfg.name = detail::trim(val);
          else known = false;
        } else if (section == "grid") {
          if (key == "length") cfg.length = detail::parse_double(where, val);
          else if (key == "cells") cfg.cells = detail::parse_count(where, val);
          else known = false;
        } else if (section == "parameters") {
          known = false;
          for (const auto& f : kParameterFields)
            if (key == f.name) {
              cfg.parameters.*f.member = detail::parse_double(where, val);
              known = true;
            }
        } else if (section == "network") {
          if (key == "kind") {
            const std::string k = detail::trim(val);
            if (k == "vessels") cfg.network_kind = NetworkKind::Vessels;
            else if (k == "file") cfg.network_kind = NetworkKind::File;
            else if (k == "builtin") cfg.network_kind = NetworkKind::Builtin;
            else throw ConfigError(where + ": expected vessels, file or builtin");
          } else if (key == "path") cfg.network_path = detail::trim(val);
          else if (key == "name") cfg.network_builtin = detail::trim(val);
          else known = false;
        } else if (section.rfind("vessel.", 0) == 0) {
          const std::size_t idx = detail::parse_count(source + ": [" + section + "]", section.substr(7));
          VesselSpec& v = vessels[idx];
          if (key == "start") v.start = detail::parse_vec3(where, val);
          else if (key == "end") v.end = detail::parse_vec3(where, val);
          else if (key == "radius") v.radius = detail::parse_double(where, val);
          else if (key == "p_start") v.p_start = detail::parse_optional(where, val);
          else if (key == "p_end") v.p_end = detail::parse_optional(where, val);
          else if (key == "phi_start") v.phi_start = detail::parse_optional(where, val);
          else if (key == "phi_end") v.phi_end = detail::parse_optional(where, val);
          else known = false;
        } else if (section == "tumor") {
          if (key == "center") cfg.tumor_center = detail::parse_vec3(where, val);
          else if (key == "radius") cfg.tumor_radius = detail::parse_double(where, val);
          else known = false;
        } else if (section == "initial") {
          if (key == "sigma") cfg.sigma0 = detail::parse_double(where, val);
          else if (key == "ecm") cfg.ecm0 = detail::parse_double(where, val);
          else if (key == "phi_v") cfg.phi_v0 = detail::parse_optional(where, val);
          else known = false;
        } else if (section == "time") {
          if (key == "dt") cfg.dt = detail::parse_double(where, val);
          else if (key == "t_end") cfg.t_end = detail::parse_double(where, val);
          else if (key == "fixed_point_tol") cfg.fixed_point_tol = detail::parse_double(where, val);
          else if (key == "fixed_point_max_iters") cfg.fixed_point_max_iters = detail::parse_count(where, val);
          else if (key == "scope") {
            const std::string s = detail::trim(val);
            if (s == "flow") cfg.scope = FixedPointScope::Flow;
            else if (s == "all") cfg.scope = FixedPointScope::All;
            else throw ConfigError(where + ": expected flow or all");
          } else known = false;
        } else if (section == "solver") {
          if (key == "rel_tol") cfg.solver_rel_tol = detail::parse_double(where, val);
          else if (key == "max_iters") cfg.solver_max_iters = detail::parse_count(where, val);
          else known = false;
        } else if (section == "coupling") {
          if (key == "n_theta") cfg.n_theta = detail::parse_count(where, val);
          else known = false;
        } else if (section == "output") {
          if (key == "directory") cfg.output_dir = detail::trim(val);
          else if (key == "vtk_every") cfg.vtk_every = detail::parse_count(where, val);
          else known = false;
        }
        if (!known) errors.push_back(where + ": unknown key");
      } catch (const ConfigError& e) {
        errors.push_back(e.what());
      }
    }
  }
  for (auto& [idx, v] : vessels) cfg.vessels.push_back(v);

  if (errors.empty()) {
    auto check = [&](bool ok, const std::string& msg) {
      if (!ok) errors.push_back(source + ": " + msg);
    };
    check(cfg.length > 0.0, "grid length must be positive");
    check(cfg.cells >= 2, "grid needs at least 2 cells per axis");
    check(cfg.dt > 0.0, "dt must be positive");
    check(cfg.t_end >= 0.0, "t_end must be nonnegative");
    check(cfg.fixed_point_tol > 0.0, "fixed_point_tol must be positive");
    check(cfg.fixed_point_max_iters > 0, "fixed_point_max_iters must be positive");
    check(cfg.solver_rel_tol > 0.0, "solver rel_tol must be positive");
    check(cfg.n_theta >= 4, "n_theta must be at least 4");
    check(cfg.vtk_every > 0, "vtk_every must be positive");
    check(cfg.tumor_radius >= 0.0, "tumor radius must be nonnegative");
    check(cfg.parameters.epsilon_heaviside >= 0.0, "epsilon_heaviside must be nonnegative");
    check(cfg.parameters.K > 0.0, "K must be positive");
    check(cfg.parameters.mu_bl > 0.0, "mu_bl must be positive");
    if (cfg.network_kind == NetworkKind::Vessels) {
      check(!cfg.vessels.empty(), "network kind 'vessels' needs at least one [vessel.N] section");
      for (std::size_t i = 0; i < cfg.vessels.size(); ++i)
        check(cfg.vessels[i].radius > 0.0, "vessel " + std::to_string(i) + ": radius must be positive");
    } else {
      check(cfg.vessels.empty(), "[vessel.N] sections require network kind 'vessels'");
    }
    if (cfg.network_kind == NetworkKind::File) check(!cfg.network_path.empty(), "network kind 'file' needs a path");
    if (cfg.network_kind == NetworkKind::Builtin)
      check(!cfg.network_builtin.empty(), "network kind 'builtin' needs a name");
  }
  if (!errors.empty()) {
    std::string msg;
    for (const auto& e : errors) msg += (msg.empty() ? "" : "\n") + e;
    throw ConfigError(msg);
  }
  return cfg;
}

inline ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path);
}

/// Writes every field, so parse_config(emit_config(c)) == c.
inline std::string emit_config(const ScenarioConfig& c) {
  using detail::fmt;
  std::ostringstream o;
  o << "[scenario]\nname = " << c.name << "\n\n";
  o << "[grid]\nlength = " << fmt(c.length) << "\ncells = " << c.cells << "\n\n";
  o << "[parameters]\n";
  for (const auto& f : kParameterFields) o << f.name << " = " << fmt(c.parameters.*f.member) << "\n";
  o << "\n[network]\n";
  switch (c.network_kind) {
    case NetworkKind::Vessels: o << "kind = vessels\n"; break;
    case NetworkKind::File: o << "kind = file\npath = " << c.network_path << "\n"; break;
    case NetworkKind::Builtin: o << "kind = builtin\nname = " << c.network_builtin << "\n"; break;
  }
  for (std::size_t i = 0; i < c.vessels.size(); ++i) {
    const auto& v = c.vessels[i];
    o << "\n[vessel." << i << "]\nstart = " << fmt(v.start) << "\nend = " << fmt(v.end) << "\nradius = " << fmt(v.radius)
      << "\np_start = " << fmt(v.p_start) << "\np_end = " << fmt(v.p_end) << "\nphi_start = " << fmt(v.phi_start)
      << "\nphi_end = " << fmt(v.phi_end) << "\n";
  }
  o << "\n[tumor]\ncenter = " << fmt(c.tumor_center) << "\nradius = " << fmt(c.tumor_radius) << "\n";
  o << "\n[initial]\nsigma = " << fmt(c.sigma0) << "\necm = " << fmt(c.ecm0) << "\nphi_v = " << fmt(c.phi_v0) << "\n";
  o << "\n[time]\ndt = " << fmt(c.dt) << "\nt_end = " << fmt(c.t_end) << "\nfixed_point_tol = " << fmt(c.fixed_point_tol)
    << "\nfixed_point_max_iters = " << c.fixed_point_max_iters
    << "\nscope = " << (c.scope == FixedPointScope::Flow ? "flow" : "all") << "\n";
  o << "\n[solver]\nrel_tol = " << fmt(c.solver_rel_tol) << "\nmax_iters = " << c.solver_max_iters << "\n";
  o << "\n[coupling]\nn_theta = " << c.n_theta << "\n";
  o << "\n[output]\ndirectory = " << c.output_dir << "\nvtk_every = " << c.vtk_every << "\n";
  return o.str();
}

}  // namespace tumor3d1d::io
