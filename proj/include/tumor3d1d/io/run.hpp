// Runs a scenario to completion and writes its outputs:
//   <dir>/config.ini            the effective configuration
//   <dir>/network.json          the network actually simulated (after refinement)
//   <dir>/diagnostics.csv       one row per step, including step 0
//   <dir>/tissue_NNNNNN.vtk     every vtk_every steps and at the last step
//   <dir>/network_NNNNNN.vtk
#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>
#include <string>

#include "tumor3d1d/engine.hpp"
#include "tumor3d1d/io/config.hpp"
#include "tumor3d1d/io/network_io.hpp"
#include "tumor3d1d/io/scenarios.hpp"
#include "tumor3d1d/io/vtk.hpp"

namespace tumor3d1d::io {

inline std::string diagnostics_row(const Diagnostics& d) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%.15g,%.15g,%.15g,%.15g,%.15g,%.15g,%.15g,%.15g,%.15g,%.15g,%.15g,%.15g,%.15g,%.15g,%zu",
                d.t, d.energy, d.mass_P, d.mass_H, d.mass_N, d.mass_sigma, d.mass_MDE, d.mass_TAF, d.mass_ECM,
                d.mass_phi_v, d.p_min, d.p_max, d.pv_min, d.pv_max, d.fp_iters);
  return buf;
}

inline std::string snapshot_name(const std::string& prefix, std::size_t step) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%06zu.vtk", prefix.c_str(), step);
  return buf;
}

struct RunSummary {
  std::size_t steps = 0;
  std::size_t snapshots = 0;
  Diagnostics initial, last;
};

/// `progress` is called after each row is written; it may be empty.
inline RunSummary run_scenario(const ScenarioConfig& cfg, const std::filesystem::path& out_dir,
                               const std::filesystem::path& base_dir = ".",
                               const std::function<void(std::size_t, const Diagnostics&)>& progress = {}) {
  std::filesystem::create_directories(out_dir);
  Simulation sim = build_simulation(cfg, base_dir);
  {
    std::ofstream c(out_dir / "config.ini");
    c << emit_config(cfg);
  }
  write_network_json(sim.network(), (out_dir / "network.json").string());

  std::ofstream csv(out_dir / "diagnostics.csv");
  if (!csv) throw std::runtime_error("cannot write " + (out_dir / "diagnostics.csv").string());
  csv << kDiagnosticsHeader << '\n';

  const std::size_t n = cfg.time().num_steps();
  RunSummary summary;
  run(sim, [&](std::size_t step, const Diagnostics& d) {
    csv << diagnostics_row(d) << '\n';
    if (step == 0) summary.initial = d;
    summary.last = d;
    summary.steps = step;
    if (step % cfg.vtk_every == 0 || step == n) {
      write_vtk_grid(sim.state(), (out_dir / snapshot_name("tissue", step)).string());
      write_vtk_network(sim.network(), sim.vessel(), (out_dir / snapshot_name("network", step)).string());
      ++summary.snapshots;
    }
    if (progress) progress(step, d);
  });
  csv.flush();
  if (!csv) throw std::runtime_error("write to diagnostics.csv failed");
  return summary;
}

}  // namespace tumor3d1d::io
