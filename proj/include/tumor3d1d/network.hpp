// The 1D vascular graph: storage, Poiseuille conductances, the vascular graph
// model (VGM) pressure system with Kirchhoff junction balance, and the
// semi-implicit upwind nutrient transport on nodes.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tumor3d1d/grid.hpp"
#include "tumor3d1d/linalg.hpp"

namespace tumor3d1d {

struct Edge {
  std::size_t a = 0, b = 0;
  double radius = 0.0;
  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Conditions at a boundary node. Missing pressure means zero Neumann flux,
/// missing nutrient means free outflow.
struct BoundaryNode {
  std::size_t node = 0;
  std::optional<double> pressure;
  std::optional<double> nutrient;
  friend bool operator==(const BoundaryNode&, const BoundaryNode&) = default;
};

struct NetworkGraph {
  std::vector<Vec3> nodes;
  std::vector<Edge> edges;
  std::vector<BoundaryNode> boundary;

  double length(std::size_t e) const { return norm(nodes[edges[e].b] - nodes[edges[e].a]); }

  std::vector<std::size_t> degrees() const {
    std::vector<std::size_t> d(nodes.size(), 0);
    for (const auto& e : edges) {
      ++d[e.a];
      ++d[e.b];
    }
    return d;
  }

  /// Boundary entry for each node, or nullptr.
  std::vector<const BoundaryNode*> boundary_lookup() const {
    std::vector<const BoundaryNode*> out(nodes.size(), nullptr);
    for (const auto& b : boundary)
      if (b.node < nodes.size()) out[b.node] = &b;
    return out;
  }

  bool has_pressure_dirichlet() const {
    return std::any_of(boundary.begin(), boundary.end(), [](const auto& b) { return b.pressure.has_value(); });
  }

  friend bool operator==(const NetworkGraph&, const NetworkGraph&) = default;
};

struct VesselState {
  std::vector<double> p_v;    // per node
  std::vector<double> phi_v;  // per node
  std::vector<double> v_v;    // per edge, volumetric flux signed a -> b

  static VesselState zeros(const NetworkGraph& net) {
    return {std::vector<double>(net.nodes.size(), 0.0), std::vector<double>(net.nodes.size(), 0.0),
            std::vector<double>(net.edges.size(), 0.0)};
  }
};

/// Scaled Poiseuille conductance pi R^4 / (8 mu).
inline double conductance(double radius, double mu_bl) {
  return std::numbers::pi * std::pow(radius, 4) / (8.0 * mu_bl);
}

/// Splits every edge into ceil(length / target) equal segments. Boundary
/// conditions stay attached to the original node indices, which are kept.
inline NetworkGraph refine(const NetworkGraph& net, double target_length) {
  if (!(target_length > 0.0)) throw std::invalid_argument("refine: target length must be positive");
  NetworkGraph out;
  out.nodes = net.nodes;
  out.boundary = net.boundary;
  for (std::size_t e = 0; e < net.edges.size(); ++e) {
    const Edge& edge = net.edges[e];
    const double len = net.length(e);
    const auto m = static_cast<std::size_t>(std::max(1.0, std::ceil(len / target_length - 1e-9)));
    std::size_t prev = edge.a;
    for (std::size_t s = 1; s <= m; ++s) {
      std::size_t next = edge.b;
      if (s < m) {
        const double t = static_cast<double>(s) / static_cast<double>(m);
        out.nodes.push_back(net.nodes[edge.a] + t * (net.nodes[edge.b] - net.nodes[edge.a]));
        next = out.nodes.size() - 1;
      }
      out.edges.push_back({prev, next, edge.radius});
      prev = next;
    }
  }
  return out;
}

/// Control-volume length of each node: half the sum of adjacent edge lengths.
inline std::vector<double> lumped_lengths(const NetworkGraph& net) {
  std::vector<double> l(net.nodes.size(), 0.0);
  for (std::size_t e = 0; e < net.edges.size(); ++e) {
    const double half = 0.5 * net.length(e);
    l[net.edges[e].a] += half;
    l[net.edges[e].b] += half;
  }
  return l;
}

/// A stretch of vessel wall whose exchange is lumped into one node.
struct ExchangePiece {
  std::size_t node = 0;
  double length = 0.0;
  double radius = 0.0;
};

class SingularSystemError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// VGM pressure system. Row i (free node):
///   sum_j Kv_ij/l_ij (p_i - p_j) + sum_pieces 2 pi R ds L_p p_i = sum_pieces 2 pi R ds L_p pbar
/// Dirichlet nodes become identity rows with their columns eliminated, so the
/// matrix stays symmetric.
inline linalg::LinearSystem assemble_vgm_pressure(const NetworkGraph& net, std::span<const ExchangePiece> pieces,
                                                  std::span<const double> pbar, double l_p, double mu_bl) {
  if (!net.has_pressure_dirichlet())
    throw SingularSystemError("network pressure: no Dirichlet pressure node, system is singular");
  if (pbar.size() != pieces.size()) throw linalg::DimensionError("network pressure: pbar/piece count mismatch");
  const std::size_t nn = net.nodes.size();
  std::vector<std::optional<double>> fixed(nn);
  for (const auto& b : net.boundary)
    if (b.pressure) fixed[b.node] = *b.pressure;

  linalg::TripletBuilder tb(nn, nn);
  linalg::Vector rhs(nn, 0.0);
  for (std::size_t i = 0; i < nn; ++i) tb.add(i, i, fixed[i] ? 1.0 : 0.0);
  for (std::size_t i = 0; i < nn; ++i)
    if (fixed[i]) rhs[i] = *fixed[i];

  for (std::size_t e = 0; e < net.edges.size(); ++e) {
    const auto [a, b, r] = net.edges[e];
    const double t = conductance(r, mu_bl) / net.length(e);
    if (!fixed[a]) {
      tb.add(a, a, t);
      if (fixed[b]) rhs[a] += t * *fixed[b];
      else tb.add(a, b, -t);
    }
    if (!fixed[b]) {
      tb.add(b, b, t);
      if (fixed[a]) rhs[b] += t * *fixed[a];
      else tb.add(b, a, -t);
    }
  }
  for (std::size_t s = 0; s < pieces.size(); ++s) {
    const auto& pc = pieces[s];
    if (fixed[pc.node]) continue;
    const double c = 2.0 * std::numbers::pi * pc.radius * pc.length * l_p;
    tb.add(pc.node, pc.node, c);
    rhs[pc.node] += c * pbar[s];
  }
  return {tb.build(), std::move(rhs)};
}

/// v_v = -Kv (p_b - p_a) / length, signed along a -> b.
inline std::vector<double> edge_flux(const NetworkGraph& net, std::span<const double> p_v, double mu_bl) {
  std::vector<double> q(net.edges.size());
  for (std::size_t e = 0; e < net.edges.size(); ++e) {
    const auto& ed = net.edges[e];
    q[e] = -conductance(ed.radius, mu_bl) * (p_v[ed.b] - p_v[ed.a]) / net.length(e);
  }
  return q;
}

class CflError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mass accounting of one transport step (all quantities already times dt).
struct TransportBudget {
  double inflow = 0.0;    // from Dirichlet nodes into free nodes (convective + diffusive)
  double outflow = 0.0;   // leaving through free-outflow boundary nodes
  double exchange = 0.0;  // sum over free nodes of l_i * sink_i * dt
};

/// Largest dt * (outgoing flux) / (control length) over free nodes.
inline double transport_courant(const NetworkGraph& net, std::span<const double> v_v, double dt) {
  const auto len = lumped_lengths(net);
  const auto bnd = net.boundary_lookup();
  const auto deg = net.degrees();
  std::vector<double> out(net.nodes.size(), 0.0);
  for (std::size_t e = 0; e < net.edges.size(); ++e) {
    const double q = v_v[e];
    const auto& ed = net.edges[e];
    out[q > 0.0 ? ed.a : ed.b] += std::abs(q);
    // free-outflow ends pass the incoming segment flux out of the network
    const std::size_t head = q > 0.0 ? ed.b : ed.a;
    if (deg[head] == 1 && bnd[head] && bnd[head]->pressure) out[head] += std::abs(q);
  }
  double c = 0.0;
  for (std::size_t i = 0; i < net.nodes.size(); ++i) {
    if (bnd[i] && bnd[i]->nutrient) continue;
    if (len[i] > 0.0) c = std::max(c, dt * out[i] / len[i]);
  }
  return c;
}

/// One semi-implicit transport step on node unknowns:
///   l_i (phi_i' - phi_i)/dt + sum_j F_ij(phi) = sum_j D/l_ij (phi_j' - phi_i') + l_i sink_i
/// with upwind convective fluxes F evaluated at the old state, diffusion
/// implicit (mobility m_v = 1) and sink_i the lumped exchange per unit length.
/// Dirichlet nutrient nodes stay at their value; free-outflow ends carry the
/// segment flux out with the node value and have no diffusive flux.
inline TransportBudget advance_vessel_transport(const NetworkGraph& net, VesselState& state,
                                                std::span<const double> sink, double dt, double d_v,
                                                const linalg::SolverConfig& cfg = {}) {
  const std::size_t nn = net.nodes.size();
  if (sink.size() != nn) throw linalg::DimensionError("transport: sink size mismatch");
  const double courant = transport_courant(net, state.v_v, dt);
  if (courant > 1.0 + 1e-12)
    throw CflError("vessel transport CFL violated: courant number " + std::to_string(courant));
  const auto len = lumped_lengths(net);
  const auto bnd = net.boundary_lookup();
  const auto deg = net.degrees();
  auto fixed = [&](std::size_t i) { return bnd[i] && bnd[i]->nutrient.has_value(); };
  const std::vector<double>& old = state.phi_v;

  TransportBudget budget;
  linalg::TripletBuilder tb(nn, nn);
  linalg::Vector rhs(nn, 0.0);
  for (std::size_t i = 0; i < nn; ++i) {
    if (fixed(i)) {
      tb.add(i, i, 1.0);
      rhs[i] = *bnd[i]->nutrient;
    } else {
      tb.add(i, i, len[i] / dt);
      rhs[i] = len[i] / dt * old[i] + len[i] * sink[i];
      budget.exchange += dt * len[i] * sink[i];
    }
  }
  for (std::size_t e = 0; e < net.edges.size(); ++e) {
    const auto& ed = net.edges[e];
    const double q = state.v_v[e];
    const double up = q >= 0.0 ? old[ed.a] : old[ed.b];
    const double flux = q * up;  // a -> b
    const double t = d_v / net.length(e);
    const bool fa = fixed(ed.a), fb = fixed(ed.b);
    if (!fa) {
      rhs[ed.a] -= flux;
      tb.add(ed.a, ed.a, t);
      if (fb) rhs[ed.a] += t * *bnd[ed.b]->nutrient;
      else tb.add(ed.a, ed.b, -t);
    }
    if (!fb) {
      rhs[ed.b] += flux;
      tb.add(ed.b, ed.b, t);
      if (fa) rhs[ed.b] += t * *bnd[ed.a]->nutrient;
      else tb.add(ed.b, ed.a, -t);
    }
    if (fa && !fb) budget.inflow += dt * flux;
    if (fb && !fa) budget.inflow -= dt * flux;
  }
  // Free-outflow ends with a pressure condition pass the segment flux through.
  for (std::size_t e = 0; e < net.edges.size(); ++e) {
    const auto& ed = net.edges[e];
    const double q = state.v_v[e];
    for (const auto& [node, into] : {std::pair{ed.a, -q}, std::pair{ed.b, q}}) {
      if (deg[node] != 1 || fixed(node) || !bnd[node] || !bnd[node]->pressure) continue;
      const double f = into * old[node];
      rhs[node] -= f;
      budget.outflow += dt * f;
    }
  }
  auto system = tb.build();
  linalg::Vector x = old;
  linalg::solve_into(system, rhs, x, cfg);
  // Diffusive inflow from Dirichlet nodes uses the new free-node values.
  for (std::size_t e = 0; e < net.edges.size(); ++e) {
    const auto& ed = net.edges[e];
    const double t = d_v / net.length(e);
    if (fixed(ed.a) && !fixed(ed.b)) budget.inflow += dt * t * (x[ed.a] - x[ed.b]);
    if (fixed(ed.b) && !fixed(ed.a)) budget.inflow += dt * t * (x[ed.b] - x[ed.a]);
  }
  state.phi_v = std::move(x);
  return budget;
}

struct RadiusStats {
  double max = 0.0, min = 0.0, mean = 0.0;
};

struct NetworkReport {
  std::vector<std::string> violations;
  RadiusStats radius;
  bool ok() const { return violations.empty(); }
};

inline RadiusStats radius_stats(const NetworkGraph& net) {
  RadiusStats s;
  if (net.edges.empty()) return s;
  s.max = -std::numeric_limits<double>::infinity();
  s.min = std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (const auto& e : net.edges) {
    s.max = std::max(s.max, e.radius);
    s.min = std::min(s.min, e.radius);
    sum += e.radius;
  }
  s.mean = sum / static_cast<double>(net.edges.size());
  return s;
}

/// Checks graph invariants; never throws.
inline NetworkReport validate_network(const NetworkGraph& net) {
  NetworkReport rep;
  const std::size_t nn = net.nodes.size();
  auto bad = [&](std::string msg) { rep.violations.push_back(std::move(msg)); };
  for (std::size_t e = 0; e < net.edges.size(); ++e) {
    const auto& ed = net.edges[e];
    if (ed.a >= nn || ed.b >= nn) {
      bad("edge " + std::to_string(e) + ": node index out of range");
      continue;
    }
    if (!(ed.radius > 0.0)) bad("edge " + std::to_string(e) + ": radius must be positive");
    if (!(net.length(e) > 0.0)) bad("edge " + std::to_string(e) + ": zero length");
  }
  if (!rep.ok()) return rep;
  rep.radius = radius_stats(net);

  // connectivity by union-find
  std::vector<std::size_t> parent(nn);
  for (std::size_t i = 0; i < nn; ++i) parent[i] = i;
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& e : net.edges) parent[find(e.a)] = find(e.b);
  // Separate vessels are allowed (two straight vessels are a common setup);
  // each component must be anchored by a pressure value.
  const auto deg = net.degrees();
  std::vector<char> anchored(nn, 0);
  for (const auto& b : net.boundary)
    if (b.node < nn && b.pressure) anchored[find(b.node)] = 1;
  for (std::size_t i = 0; i < nn; ++i) {
    if (deg[i] == 0)
      bad("node " + std::to_string(i) + ": not connected to any edge");
    else if (find(i) == i && !anchored[i])
      bad("node " + std::to_string(i) + ": its component has no pressure boundary condition");
  }

  std::map<std::size_t, int> seen;
  for (const auto& b : net.boundary) {
    if (b.node >= nn) {
      bad("boundary entry references missing node " + std::to_string(b.node));
      continue;
    }
    if (++seen[b.node] > 1) bad("node " + std::to_string(b.node) + ": duplicate boundary entry");
    if (deg[b.node] != 1) bad("node " + std::to_string(b.node) + ": boundary condition on a non-boundary node");
  }
  for (std::size_t i = 0; i < nn; ++i)
    if (deg[i] == 1 && !seen.count(i)) bad("boundary node " + std::to_string(i) + ": missing boundary condition");
  return rep;
}

}  // namespace tumor3d1d
