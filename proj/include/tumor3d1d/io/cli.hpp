// Command-line front end. Exit codes: 0 success, 1 runtime failure, 2 usage
// error (bad flags, missing or unreadable config).
#pragma once

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>

#include "CLI11.hpp"
#include "tumor3d1d/io/config.hpp"
#include "tumor3d1d/io/network_io.hpp"
#include "tumor3d1d/io/run.hpp"
#include "tumor3d1d/io/scenarios.hpp"

namespace tumor3d1d::io {

namespace detail {

inline void print_radius(std::ostream& out, const RadiusStats& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "radius max %.4g min %.4g mean %.4g\n", r.max, r.min, r.mean);
  out << buf;
}

inline int cmd_validate(const std::string& path, std::ostream& out, std::ostream& err) {
  const ScenarioConfig cfg = load_config(path);
  const Grid3D grid = cfg.grid();
  const NetworkGraph net = resolve_network(cfg, std::filesystem::path(path).parent_path());
  const auto problems = check_network(net, grid);
  for (const auto& p : problems) err << "error: " << p << '\n';
  if (!problems.empty()) return 1;
  const auto map = build_coupling_map(grid, refine(net, grid.h), {cfg.n_theta, 0.0, 2});
  for (const auto& w : map.warnings) err << "warning: " << w << '\n';
  out << "scenario " << cfg.name << ": " << grid.n << "^3 cells, h = " << grid.h << ", "
      << cfg.time().num_steps() << " steps of " << cfg.dt << '\n'
      << "network: " << net.nodes.size() << " nodes, " << net.edges.size() << " edges, " << net.boundary.size()
      << " boundary nodes\n";
  print_radius(out, radius_stats(net));
  out << "ok\n";
  return 0;
}

inline int cmd_run(const std::string& path, const std::string& output, std::size_t vtk_every, bool quiet,
                   std::ostream& out) {
  ScenarioConfig cfg = load_config(path);
  if (vtk_every > 0) cfg.vtk_every = vtk_every;
  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  const std::filesystem::path dir = std::filesystem::path(output.empty() ? cfg.output_dir : output);
  const std::size_t n = cfg.time().num_steps();
  const auto summary = run_scenario(cfg, dir, base, [&](std::size_t step, const Diagnostics& d) {
    if (quiet || (step % cfg.vtk_every != 0 && step != n)) return;
    char buf[200];
    std::snprintf(buf, sizeof buf, "step %zu/%zu t=%.4g E=%.6g mass_T=%.6g p=[%.6g, %.6g] fp=%zu\n", step, n, d.t,
                  d.energy, d.mass_P + d.mass_H + d.mass_N, d.p_min, d.p_max, d.fp_iters);
    out << buf << std::flush;
  });
  out << "wrote " << summary.steps + 1 << " diagnostics rows and " << summary.snapshots << " snapshots to "
      << dir.string() << '\n';
  return 0;
}

inline int cmd_convert(const std::string& input, const std::string& mapping, const std::string& output,
                       std::ostream& out) {
  ImportReport rep;
  const NetworkGraph net = import_tabular_network(input, mapping, &rep);
  write_network_json(net, output);
  out << net.nodes.size() << " nodes, " << net.edges.size() << " edges, scale " << rep.scale << ", " << rep.inlets
      << " inlets, " << rep.outlets << " outlets\n";
  print_radius(out, rep.radius);
  return 0;
}

inline int cmd_scenario(const std::string& name, const std::string& output, std::ostream& out) {
  const std::string text = emit_config(builtin_config(name));
  if (output.empty() || output == "-") {
    out << text;
    return 0;
  }
  std::ofstream os(output);
  if (!os || !(os << text)) throw std::runtime_error("cannot write '" + output + "'");
  return 0;
}

}  // namespace detail

inline int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"tumor3d1d: phase-field tumor growth coupled to a 1D vascular network"};
  app.require_subcommand(1);

  std::string config, output, input, mapping, name;
  std::size_t vtk_every = 0;
  bool quiet = false;

  auto* run = app.add_subcommand("run", "run a scenario and write CSV diagnostics and VTK snapshots");
  run->add_option("--config", config, "scenario file")->required()->check(CLI::ExistingFile);
  run->add_option("--output", output, "output directory (default: output_dir from the config)");
  run->add_option("--vtk-every", vtk_every, "snapshot interval in steps")->check(CLI::PositiveNumber);
  run->add_flag("--quiet", quiet, "no progress lines");

  auto* validate = app.add_subcommand("validate", "check a scenario file and its network");
  validate->add_option("--config", config, "scenario file")->required()->check(CLI::ExistingFile);

  auto* convert = app.add_subcommand("convert-network", "import a tabular network into JSON");
  convert->add_option("--input", input, "edge table")->required()->check(CLI::ExistingFile);
  convert->add_option("--mapping", mapping, "column mapping (JSON)")->required()->check(CLI::ExistingFile);
  convert->add_option("--output", output, "network JSON to write")->required();

  auto* scenario = app.add_subcommand("scenario", "write a builtin scenario file");
  scenario->add_option("--name", name, "builtin scenario")->required()->check(CLI::IsMember(builtin_scenario_names()));
  scenario->add_option("--output", output, "file to write, or - for stdout")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const CLI::App* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << sub->help();
    return 2;
  }

  try {
    if (run->parsed()) return detail::cmd_run(config, output, vtk_every, quiet, out);
    if (validate->parsed()) return detail::cmd_validate(config, out, err);
    if (convert->parsed()) return detail::cmd_convert(input, mapping, output, out);
    if (scenario->parsed()) return detail::cmd_scenario(name, output, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace tumor3d1d::io
