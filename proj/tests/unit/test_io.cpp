#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "test_support.hpp"
#include "tumor3d1d/io/cli.hpp"
#include "tumor3d1d/io/config.hpp"
#include "tumor3d1d/io/network_io.hpp"
#include "tumor3d1d/io/run.hpp"
#include "tumor3d1d/io/scenarios.hpp"
#include "tumor3d1d/io/vtk.hpp"

using namespace tumor3d1d;
using namespace tumor3d1d::io;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    path_ = fs::temp_directory_path() / (std::string("tumor3d1d_") + info->test_suite_name() + "_" + info->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

int cli(std::vector<std::string> args, std::string* out_text = nullptr, std::string* err_text = nullptr) {
  args.insert(args.begin(), "tumor3d1d");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int rc = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  if (out_text) *out_text = out.str();
  if (err_text) *err_text = err.str();
  return rc;
}

// A coarse two-vessel run that finishes in well under a second.
ScenarioConfig tiny_two_vessel(double t_end) {
  ScenarioConfig cfg = two_vessel_config();
  cfg.cells = 8;
  cfg.t_end = t_end;
  cfg.vtk_every = 2;
  cfg.parameters.epsilon_P = cfg.parameters.epsilon_H = 0.1;
  return cfg;
}

}  // namespace

TEST(Config, EmitParseRoundTrip) {
  for (const auto& name : builtin_scenario_names()) {
    const ScenarioConfig cfg = builtin_config(name);
    EXPECT_EQ(parse_config(emit_config(cfg)), cfg) << name;
  }
  ScenarioConfig odd = two_vessel_config();
  odd.parameters.lambda_P = 1.0 / 3.0;
  odd.dt = 0.1 + 0.2;
  odd.scope = FixedPointScope::All;
  odd.phi_v0 = 0.25;
  EXPECT_EQ(parse_config(emit_config(odd)), odd);
  EXPECT_THROW(builtin_config("nope"), ConfigError);
}

TEST(Config, DefaultsAndOverrides) {
  const auto cfg = parse_config(
      "; comment\n[grid]\ncells = 12\n[parameters]\nL_p = 2e-7\n[vessel.0]\nstart = 0 0 0\nend = 0 0 1\n"
      "radius = 0.1\np_start = 3\np_end = none\n");
  EXPECT_EQ(cfg.cells, 12u);
  EXPECT_DOUBLE_EQ(cfg.length, 2.0);
  EXPECT_DOUBLE_EQ(cfg.parameters.L_p, 2e-7);
  EXPECT_DOUBLE_EQ(cfg.parameters.lambda_P, Parameters{}.lambda_P);
  ASSERT_EQ(cfg.vessels.size(), 1u);
  EXPECT_EQ(cfg.vessels[0].p_start, 3.0);
  EXPECT_FALSE(cfg.vessels[0].p_end.has_value());
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  const std::string vessel = "[vessel.0]\nstart = 0 0 0\nend = 0 0 1\nradius = 0.1\n";
  EXPECT_THROW(parse_config(vessel + "[grid]\ncels = 3\n"), ConfigError);
  EXPECT_THROW(parse_config(vessel + "[gird]\ncells = 3\n"), ConfigError);
  EXPECT_THROW(parse_config(vessel + "[parameters]\nlambda_Q = 1\n"), ConfigError);
  EXPECT_THROW(parse_config(vessel + "[time]\ndt = fast\n"), ConfigError);
  EXPECT_THROW(parse_config(vessel + "[time]\ndt = -1\n"), ConfigError);
  EXPECT_THROW(parse_config(vessel + "[time]\nscope = everything\n"), ConfigError);
  EXPECT_THROW(parse_config("[grid]\ncells = 3\n"), ConfigError);  // no vessels
  try {
    parse_config(vessel + "[grid]\ncels = 3\n", "case.ini");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("case.ini: [grid] cels"), std::string::npos) << e.what();
  }
}

TEST(Scenarios, BuiltinNetworksAreValid) {
  for (const auto& name : builtin_scenario_names()) {
    const auto cfg = builtin_config(name);
    const auto net = resolve_network(cfg);
    EXPECT_TRUE(check_network(net, cfg.grid()).empty()) << name;
  }
  const auto net = synthetic_capillary_network();
  const auto stats = radius_stats(net);
  EXPECT_NEAR(stats.mean, 0.0418, 1e-9);
  EXPECT_GT(stats.max, stats.mean);
  EXPECT_LT(stats.min, stats.mean);
  EXPECT_EQ(net.boundary.size(), 9u);
  // deterministic
  EXPECT_EQ(synthetic_capillary_network().nodes, net.nodes);
}

TEST(NetworkIo, JsonRoundTrip) {
  const auto net = synthetic_capillary_network();
  const auto back = network_from_json(nlohmann::json::parse(network_to_json(net).dump()));
  EXPECT_EQ(back.nodes, net.nodes);
  EXPECT_EQ(back.boundary, net.boundary);
  ASSERT_EQ(back.edges.size(), net.edges.size());
  for (std::size_t e = 0; e < net.edges.size(); ++e) EXPECT_EQ(back.edges[e].radius, net.edges[e].radius);
  EXPECT_THROW(network_from_json(nlohmann::json::parse(R"({"nodes": [[0, 0]], "edges": []})")), NetworkFormatError);
  EXPECT_THROW(network_from_json(nlohmann::json::parse(R"({"nodes": [[0, 0, 0]], "edges": [[0, 3, 0.1]]})")),
               NetworkFormatError);
}

TEST(NetworkIo, TabularImportBuildsAPath) {
  std::istringstream table(
      "# from to r x0 y0 z0 x1 y1 z1\n"
      "a b 2.0 0 0 0 10 0 0\n"
      "b c 1.0 10 0 0 10 5 0\n");
  const auto mapping = nlohmann::json::parse(R"({
    "edges": {"skip_rows": 1, "from": 0, "to": 1, "radius": 2, "from_xyz": [3, 4, 5], "to_xyz": [6, 7, 8]},
    "radius_is_diameter": true, "domain_length": 2.0,
    "inlets": ["a"], "inlet": {"pressure": 100, "nutrient": 1}, "outlet": {"pressure": 10}})");
  ImportReport rep;
  const auto net = import_tabular_network(table, mapping, ".", &rep);
  ASSERT_EQ(net.nodes.size(), 3u);
  ASSERT_EQ(net.edges.size(), 2u);
  EXPECT_DOUBLE_EQ(rep.scale, 0.2);
  EXPECT_EQ(net.nodes[1], (Vec3{2.0, 0.0, 0.0}));
  EXPECT_EQ(net.nodes[2], (Vec3{2.0, 1.0, 0.0}));
  EXPECT_DOUBLE_EQ(net.edges[0].radius, 0.2);
  EXPECT_DOUBLE_EQ(net.edges[1].radius, 0.1);
  EXPECT_EQ(rep.inlets, 1u);
  EXPECT_EQ(rep.outlets, 1u);
  EXPECT_TRUE(validate_network(net).ok());
  const auto lookup = net.boundary_lookup();
  EXPECT_EQ(lookup[0]->pressure, 100.0);
  EXPECT_EQ(lookup[2]->nutrient, std::nullopt);

  std::istringstream missing("a b 1\n");
  EXPECT_THROW(import_tabular_network(missing, nlohmann::json::parse(R"({"edges": {"from": 0, "to": 1, "radius": 2}})")),
               NetworkFormatError);
}

TEST(Vtk, GridFileParsesAndRoundTrips) {
  const Grid3D g = Grid3D::cube(2.0, 2);
  TissueState st(g);
  for (std::size_t c = 0; c < 8; ++c) st.phi_P[c] = 0.1 * static_cast<double>(c) + 1.0 / 3.0;
  std::ostringstream os;
  write_vtk_grid(st, os);
  const std::string text = os.str();
  EXPECT_NE(text.find("DIMENSIONS 3 3 3"), std::string::npos);
  EXPECT_NE(text.find("CELL_DATA 8"), std::string::npos);
  const auto f = testing_support::read_vtk_string(text);
  EXPECT_EQ(f.dataset, "STRUCTURED_POINTS");
  EXPECT_EQ(f.spacing, (std::vector<double>{1.0, 1.0, 1.0}));
  for (const char* name : {"phi_P", "phi_H", "phi_N", "phi_sigma", "phi_MDE", "phi_TAF", "phi_ECM", "mu_P", "mu_H", "p"})
    EXPECT_EQ(f.cell_data.count(name), 1u) << name;
  // nine significant digits
  EXPECT_LT(testing_support::max_abs_diff(f.cell_data.at("phi_P"), st.phi_P.values), 5e-9 * 1.1);
}

TEST(Vtk, NetworkFileParses) {
  const auto net = synthetic_capillary_network();
  VesselState ves = VesselState::zeros(net);
  for (std::size_t i = 0; i < ves.p_v.size(); ++i) ves.p_v[i] = 1000.0 + static_cast<double>(i);
  const auto f = testing_support::read_vtk_string([&] {
    std::ostringstream os;
    write_vtk_network(net, ves, os);
    return os.str();
  }());
  EXPECT_EQ(f.dataset, "POLYDATA");
  EXPECT_EQ(f.points.size(), 3 * net.nodes.size());
  EXPECT_EQ(f.lines.size(), net.edges.size());
  EXPECT_LT(testing_support::max_abs_diff(f.point_data.at("p_v"), ves.p_v), 1e-9 * 2000.0);
  EXPECT_EQ(f.cell_data.at("radius").size(), net.edges.size());

  std::ostringstream empty;
  write_vtk_network(NetworkGraph{}, VesselState{}, empty);
  EXPECT_NO_THROW(testing_support::read_vtk_string(empty.str()));
  VesselState wrong = VesselState::zeros(net);
  wrong.p_v.pop_back();
  std::ostringstream sink;
  EXPECT_THROW(write_vtk_network(net, wrong, sink), std::invalid_argument);
}

TEST(Run, WritesDiagnosticsAndSnapshots) {
  TempDir tmp;
  const auto summary = run_scenario(tiny_two_vessel(0.15), tmp.path());
  EXPECT_EQ(summary.steps, 3u);
  EXPECT_EQ(summary.snapshots, 3u);  // steps 0, 2 and the last
  std::istringstream csv(slurp(tmp.path() / "diagnostics.csv"));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, kDiagnosticsHeader);
  std::size_t rows = 0;
  while (std::getline(csv, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 14);
  }
  EXPECT_EQ(rows, 4u);
  for (const char* f : {"tissue_000000.vtk", "tissue_000002.vtk", "tissue_000003.vtk", "network_000003.vtk"}) {
    std::ifstream in(tmp.path() / f);
    ASSERT_TRUE(in) << f;
    EXPECT_NO_THROW(testing_support::read_vtk(in)) << f;
  }
  EXPECT_EQ(parse_config(slurp(tmp.path() / "config.ini")), tiny_two_vessel(0.15));
  EXPECT_NO_THROW(read_network_json((tmp.path() / "network.json").string()));
}

TEST(Cli, ScenarioValidateAndRun) {
  TempDir tmp;
  std::string out, err;
  EXPECT_EQ(cli({"scenario", "--name", "two-vessel", "--output", "-"}, &out), 0);
  EXPECT_EQ(parse_config(out), two_vessel_config());

  const fs::path ini = tmp.path() / "tiny.ini";
  std::ofstream(ini) << emit_config(tiny_two_vessel(0.05));
  EXPECT_EQ(cli({"validate", "--config", ini.string()}, &out, &err), 0) << err;
  EXPECT_NE(out.find("ok"), std::string::npos);

  const fs::path dir = tmp.path() / "out";
  EXPECT_EQ(cli({"run", "--config", ini.string(), "--output", dir.string(), "--quiet"}, &out, &err), 0) << err;
  EXPECT_TRUE(fs::exists(dir / "diagnostics.csv"));
  EXPECT_TRUE(fs::exists(dir / "tissue_000001.vtk"));
}

TEST(Cli, ExitCodes) {
  TempDir tmp;
  std::string out, err;
  EXPECT_EQ(cli({}, &out, &err), 2);
  EXPECT_EQ(cli({"run"}, &out, &err), 2);
  EXPECT_NE(err.find("--config"), std::string::npos);
  EXPECT_EQ(cli({"run", "--config", (tmp.path() / "missing.ini").string()}, &out, &err), 2);
  EXPECT_EQ(cli({"scenario", "--name", "three-vessel", "--output", "-"}, &out, &err), 2);
  EXPECT_EQ(cli({"--help"}, &out, &err), 0);

  const fs::path bad = tmp.path() / "bad.ini";
  std::ofstream(bad) << "[grid]\ncells = 1\n";
  EXPECT_EQ(cli({"validate", "--config", bad.string()}, &out, &err), 1);
  EXPECT_NE(err.find("config error"), std::string::npos);

  // disconnected vessel without any pressure condition
  ScenarioConfig cfg = tiny_two_vessel(0.05);
  cfg.vessels[1].p_start.reset();
  cfg.vessels[1].p_end.reset();
  const fs::path floating = tmp.path() / "floating.ini";
  std::ofstream(floating) << emit_config(cfg);
  EXPECT_EQ(cli({"validate", "--config", floating.string()}, &out, &err), 1);
  EXPECT_NE(err.find("pressure boundary condition"), std::string::npos) << err;
}

TEST(Cli, BinaryRuns) {
  const std::string cmd = std::string("\"") + TUMOR3D1D_CLI + "\" --help > /dev/null";
  EXPECT_EQ(std::system(cmd.c_str()), 0);
  const std::string bad = std::string("\"") + TUMOR3D1D_CLI + "\" frobnicate > /dev/null 2>&1";
  const int rc = std::system(bad.c_str());
  ASSERT_NE(rc, -1);
  EXPECT_EQ(WEXITSTATUS(rc), 2);
}
