// Legacy ASCII VTK output: the tissue fields as STRUCTURED_POINTS cell data
// and the network as POLYDATA lines.
#pragma once

#include <cstdio>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tumor3d1d/network.hpp"
#include "tumor3d1d/species.hpp"

namespace tumor3d1d::io {

namespace detail {

inline std::string fmt9(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

inline void write_scalars(std::ostream& os, const std::string& name, const std::vector<double>& values) {
  os << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
  for (double v : values) os << fmt9(v) << '\n';
}

inline std::ofstream open_for_write(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  return os;
}

}  // namespace detail

/// Cell order is x fastest, matching Grid3D::index and the VTK convention.
inline void write_vtk_grid(const TissueState& st, std::ostream& os) {
  const Grid3D& g = st.grid;
  os << "# vtk DataFile Version 3.0\n"
     << "tumor tissue t=" << detail::fmt9(st.t) << "\n"
     << "ASCII\nDATASET STRUCTURED_POINTS\n"
     << "DIMENSIONS " << g.n + 1 << ' ' << g.n + 1 << ' ' << g.n + 1 << '\n'
     << "ORIGIN " << detail::fmt9(g.origin.x) << ' ' << detail::fmt9(g.origin.y) << ' ' << detail::fmt9(g.origin.z)
     << '\n'
     << "SPACING " << detail::fmt9(g.h) << ' ' << detail::fmt9(g.h) << ' ' << detail::fmt9(g.h) << '\n'
     << "CELL_DATA " << g.num_cells() << '\n';
  const std::pair<const char*, const CellField*> fields[] = {
      {"phi_P", &st.phi_P},     {"phi_H", &st.phi_H},     {"phi_N", &st.phi_N}, {"phi_sigma", &st.phi_sigma},
      {"phi_MDE", &st.phi_MDE}, {"phi_TAF", &st.phi_TAF}, {"phi_ECM", &st.phi_ECM}, {"mu_P", &st.mu_P},
      {"mu_H", &st.mu_H},       {"p", &st.p}};
  for (const auto& [name, f] : fields) detail::write_scalars(os, name, f->values);
}

inline void write_vtk_grid(const TissueState& st, const std::string& path) {
  auto os = detail::open_for_write(path);
  write_vtk_grid(st, os);
  if (!os) throw std::runtime_error("write to '" + path + "' failed");
}

inline void write_vtk_network(const NetworkGraph& net, const VesselState& ves, std::ostream& os) {
  if (ves.p_v.size() != net.nodes.size() || ves.phi_v.size() != net.nodes.size() || ves.v_v.size() != net.edges.size())
    throw std::invalid_argument("write_vtk_network: vessel state does not match the network");
  os << "# vtk DataFile Version 3.0\nvascular network\nASCII\nDATASET POLYDATA\n"
     << "POINTS " << net.nodes.size() << " double\n";
  for (const auto& x : net.nodes) os << detail::fmt9(x.x) << ' ' << detail::fmt9(x.y) << ' ' << detail::fmt9(x.z) << '\n';
  os << "LINES " << net.edges.size() << ' ' << 3 * net.edges.size() << '\n';
  for (const auto& e : net.edges) os << "2 " << e.a << ' ' << e.b << '\n';
  // an attribute section with zero tuples trips some readers
  if (net.nodes.empty()) return;
  os << "POINT_DATA " << net.nodes.size() << '\n';
  detail::write_scalars(os, "p_v", ves.p_v);
  detail::write_scalars(os, "phi_v", ves.phi_v);
  if (net.edges.empty()) return;
  os << "CELL_DATA " << net.edges.size() << '\n';
  std::vector<double> radius;
  for (const auto& e : net.edges) radius.push_back(e.radius);
  detail::write_scalars(os, "radius", radius);
  detail::write_scalars(os, "v_v", ves.v_v);
}

inline void write_vtk_network(const NetworkGraph& net, const VesselState& ves, const std::string& path) {
  auto os = detail::open_for_write(path);
  write_vtk_network(net, ves, os);
  if (!os) throw std::runtime_error("write to '" + path + "' failed");
}

}  // namespace tumor3d1d::io
