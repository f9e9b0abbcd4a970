// Network files.
//
// JSON format:
//   {"nodes": [[x, y, z], ...],
//    "edges": [[a, b, radius], ...],
//    "boundary": [{"node": i, "pressure": p | null, "nutrient": c | null}, ...]}
//
// Tabular import is driven by a JSON mapping that names the columns, because
// upstream vessel tables differ in layout:
//   {"edges":  {"skip_rows": 0, "delimiter": "whitespace" | ",",
//               "from": col, "to": col, "radius": col,
//               "from_xyz": [c, c, c], "to_xyz": [c, c, c]},   // optional
//    "nodes":  {"path": file, "skip_rows": 0, "delimiter": ...,
//               "id": col, "xyz": [c, c, c]},                  // optional
//    "radius_is_diameter": false,
//    "domain_length": 2.0,
//    "inlets": [node ids], "inlet": {"pressure": p, "nutrient": c},
//    "outlet": {"pressure": p}}
// Node coordinates come from the edge table ("from_xyz"/"to_xyz") or from a
// separate node table. Relative paths are resolved against the mapping file.
#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "tumor3d1d/network.hpp"

namespace tumor3d1d::io {

class NetworkFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline nlohmann::json network_to_json(const NetworkGraph& net) {
  nlohmann::json j;
  j["nodes"] = nlohmann::json::array();
  for (const auto& n : net.nodes) j["nodes"].push_back({n.x, n.y, n.z});
  j["edges"] = nlohmann::json::array();
  for (const auto& e : net.edges) j["edges"].push_back({e.a, e.b, e.radius});
  j["boundary"] = nlohmann::json::array();
  for (const auto& b : net.boundary) {
    nlohmann::json entry{{"node", b.node}};
    entry["pressure"] = b.pressure ? nlohmann::json(*b.pressure) : nlohmann::json(nullptr);
    entry["nutrient"] = b.nutrient ? nlohmann::json(*b.nutrient) : nlohmann::json(nullptr);
    j["boundary"].push_back(entry);
  }
  return j;
}

inline NetworkGraph network_from_json(const nlohmann::json& j) {
  NetworkGraph net;
  try {
    for (const auto& n : j.at("nodes")) {
      if (n.size() != 3) throw NetworkFormatError("network: node entries need three coordinates");
      net.nodes.push_back({n[0].get<double>(), n[1].get<double>(), n[2].get<double>()});
    }
    for (const auto& e : j.at("edges")) {
      if (e.size() != 3) throw NetworkFormatError("network: edge entries are [a, b, radius]");
      net.edges.push_back({e[0].get<std::size_t>(), e[1].get<std::size_t>(), e[2].get<double>()});
    }
    if (j.contains("boundary")) {
      for (const auto& b : j.at("boundary")) {
        BoundaryNode bn;
        bn.node = b.at("node").get<std::size_t>();
        if (b.contains("pressure") && !b["pressure"].is_null()) bn.pressure = b["pressure"].get<double>();
        if (b.contains("nutrient") && !b["nutrient"].is_null()) bn.nutrient = b["nutrient"].get<double>();
        net.boundary.push_back(bn);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw NetworkFormatError(std::string("network: ") + e.what());
  }
  for (std::size_t e = 0; e < net.edges.size(); ++e)
    if (net.edges[e].a >= net.nodes.size() || net.edges[e].b >= net.nodes.size())
      throw NetworkFormatError("network: edge " + std::to_string(e) + " references a missing node");
  return net;
}

inline NetworkGraph read_network_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw NetworkFormatError("cannot open network file '" + path + "'");
  try {
    return network_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw NetworkFormatError(path + ": " + e.what());
  }
}

inline void write_network_json(const NetworkGraph& net, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw NetworkFormatError("cannot write network file '" + path + "'");
  out << network_to_json(net).dump(1) << "\n";
}

namespace detail {

using Table = std::vector<std::vector<std::string>>;

inline Table read_table(std::istream& in, std::size_t skip_rows, const std::string& delimiter) {
  Table rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    if (lineno++ < skip_rows) continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos || line[line.find_first_not_of(" \t")] == '#') continue;
    std::vector<std::string> cols;
    if (delimiter == "whitespace") {
      std::istringstream ls(line);
      for (std::string tok; ls >> tok;) cols.push_back(tok);
    } else {
      std::string tok;
      std::istringstream ls(line);
      while (std::getline(ls, tok, delimiter.at(0))) cols.push_back(tok);
    }
    rows.push_back(std::move(cols));
  }
  return rows;
}

inline const std::string& cell(const Table& t, std::size_t row, std::size_t col, const std::string& what) {
  if (col >= t[row].size())
    throw NetworkFormatError(what + ": row " + std::to_string(row + 1) + " has no column " + std::to_string(col));
  return t[row][col];
}

inline double number(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw NetworkFormatError(what + ": not a number '" + s + "'");
}

inline std::size_t column(const nlohmann::json& m, const char* key, const std::string& what) {
  if (!m.contains(key)) throw NetworkFormatError(what + ": mapping lacks column '" + key + "'");
  return m.at(key).get<std::size_t>();
}

}  // namespace detail

struct ImportReport {
  RadiusStats radius;
  double scale = 1.0;
  std::size_t inlets = 0, outlets = 0;
};

/// Uniform scale and translation taking the bounding box to [0, length]^3
/// along its longest side. Radii are scaled by the same factor.
inline double fit_to_domain(NetworkGraph& net, double length) {
  if (net.nodes.empty()) return 1.0;
  Vec3 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
          std::numeric_limits<double>::infinity()};
  Vec3 hi = -1.0 * lo;
  for (const auto& n : net.nodes)
    for (std::size_t a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], n[a]);
      hi[a] = std::max(hi[a], n[a]);
    }
  const double extent = std::max({hi.x - lo.x, hi.y - lo.y, hi.z - lo.z});
  if (!(extent > 0.0)) throw NetworkFormatError("network: all nodes coincide");
  const double s = length / extent;
  for (auto& n : net.nodes) n = s * (n - lo);
  for (auto& e : net.edges) e.radius *= s;
  return s;
}

/// Builds a network from a vessel table using a JSON column mapping (see the
/// file comment). Degree-one nodes listed in "inlets" get the inlet
/// condition, all other degree-one nodes the outlet condition.
inline NetworkGraph import_tabular_network(std::istream& edges_in, const nlohmann::json& mapping,
                                           const std::filesystem::path& base_dir = ".",
                                           ImportReport* report = nullptr) {
  const std::string what = "tabular import";
  try {
    const auto& em = mapping.at("edges");
    const auto table = detail::read_table(edges_in, em.value("skip_rows", std::size_t{0}),
                                          em.value("delimiter", std::string("whitespace")));
    const std::size_t c_from = detail::column(em, "from", what), c_to = detail::column(em, "to", what),
                      c_rad = detail::column(em, "radius", what);
    const bool diameter = mapping.value("radius_is_diameter", false);

    NetworkGraph net;
    std::map<std::string, std::size_t> ids;  // file id -> node index
    std::vector<std::string> id_of;
    auto node_for = [&](const std::string& id) {
      auto [it, inserted] = ids.try_emplace(id, net.nodes.size());
      if (inserted) {
        net.nodes.push_back({std::numeric_limits<double>::quiet_NaN(), 0.0, 0.0});
        id_of.push_back(id);
      }
      return it->second;
    };

    const bool inline_xyz = em.contains("from_xyz") && em.contains("to_xyz");
    for (std::size_t r = 0; r < table.size(); ++r) {
      const std::size_t a = node_for(detail::cell(table, r, c_from, what));
      const std::size_t b = node_for(detail::cell(table, r, c_to, what));
      double radius = detail::number(detail::cell(table, r, c_rad, what), what);
      if (diameter) radius *= 0.5;
      net.edges.push_back({a, b, radius});
      if (inline_xyz) {
        for (const auto& [node, key] : {std::pair{a, "from_xyz"}, std::pair{b, "to_xyz"}}) {
          const auto cols = em.at(key).get<std::vector<std::size_t>>();
          if (cols.size() != 3) throw NetworkFormatError(what + ": '" + key + "' needs three columns");
          for (std::size_t k = 0; k < 3; ++k) net.nodes[node][k] = detail::number(detail::cell(table, r, cols[k], what), what);
        }
      }
    }
    if (mapping.contains("nodes")) {
      const auto& nm = mapping.at("nodes");
      std::filesystem::path p = nm.at("path").get<std::string>();
      if (p.is_relative()) p = base_dir / p;
      std::ifstream nin(p);
      if (!nin) throw NetworkFormatError(what + ": cannot open node table '" + p.string() + "'");
      const auto nodes = detail::read_table(nin, nm.value("skip_rows", std::size_t{0}),
                                            nm.value("delimiter", std::string("whitespace")));
      const std::size_t c_id = detail::column(nm, "id", what);
      const auto cols = nm.at("xyz").get<std::vector<std::size_t>>();
      if (cols.size() != 3) throw NetworkFormatError(what + ": node 'xyz' needs three columns");
      for (std::size_t r = 0; r < nodes.size(); ++r) {
        const auto it = ids.find(detail::cell(nodes, r, c_id, what));
        if (it == ids.end()) continue;  // nodes not used by any edge are dropped
        for (std::size_t k = 0; k < 3; ++k)
          net.nodes[it->second][k] = detail::number(detail::cell(nodes, r, cols[k], what), what);
      }
    } else if (!inline_xyz) {
      throw NetworkFormatError(what + ": mapping gives no node coordinates");
    }
    for (std::size_t i = 0; i < net.nodes.size(); ++i)
      if (std::isnan(net.nodes[i].x))
        throw NetworkFormatError(what + ": edge references node '" + id_of[i] + "' without coordinates");

    const double scale = fit_to_domain(net, mapping.value("domain_length", 2.0));

    std::vector<std::string> inlet_ids;
    if (mapping.contains("inlets"))
      for (const auto& v : mapping.at("inlets")) inlet_ids.push_back(v.is_string() ? v.get<std::string>() : v.dump());
    std::optional<double> in_p, in_c, out_p;
    if (mapping.contains("inlet")) {
      const auto& m = mapping.at("inlet");
      if (m.contains("pressure")) in_p = m.at("pressure").get<double>();
      if (m.contains("nutrient")) in_c = m.at("nutrient").get<double>();
    }
    if (mapping.contains("outlet") && mapping.at("outlet").contains("pressure"))
      out_p = mapping.at("outlet").at("pressure").get<double>();

    ImportReport rep;
    const auto deg = net.degrees();
    for (std::size_t i = 0; i < net.nodes.size(); ++i) {
      if (deg[i] != 1) continue;
      const bool inlet = std::find(inlet_ids.begin(), inlet_ids.end(), id_of[i]) != inlet_ids.end();
      if (inlet) {
        net.boundary.push_back({i, in_p, in_c});
        ++rep.inlets;
      } else {
        net.boundary.push_back({i, out_p, std::nullopt});
        ++rep.outlets;
      }
    }
    for (const auto& id : inlet_ids) {
      const auto it = ids.find(id);
      if (it == ids.end()) throw NetworkFormatError(what + ": inlet node '" + id + "' does not exist");
      if (deg[it->second] != 1) throw NetworkFormatError(what + ": inlet node '" + id + "' is not a boundary node");
    }
    rep.radius = radius_stats(net);
    rep.scale = scale;
    if (report) *report = rep;
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw NetworkFormatError(what + ": bad mapping: " + e.what());
  }
}

inline NetworkGraph import_tabular_network(const std::string& table_path, const std::string& mapping_path,
                                           ImportReport* report = nullptr) {
  std::ifstream min(mapping_path);
  if (!min) throw NetworkFormatError("cannot open mapping file '" + mapping_path + "'");
  nlohmann::json mapping;
  try {
    mapping = nlohmann::json::parse(min);
  } catch (const nlohmann::json::parse_error& e) {
    throw NetworkFormatError(mapping_path + ": " + e.what());
  }
  std::ifstream tin(table_path);
  if (!tin) throw NetworkFormatError("cannot open network table '" + table_path + "'");
  return import_tabular_network(tin, mapping, std::filesystem::path(mapping_path).parent_path(), report);
}

}  // namespace tumor3d1d::io
