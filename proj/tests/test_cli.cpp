#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hlblowup/commands.hpp"

using namespace hlb;
namespace fs = std::filesystem;

namespace {

const char* kSmallRun = R"(model:
  name: hl
grid:
  L: 2pi
  N: 64
initial:
  preset: paper-basic
control:
  dt_max: 0.01
run:
  t_end: 0.3
  checkpoint_every: 7
seed: 1
)";

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("hlb_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_file(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int tool(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(HLB_TOOL_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::vector<std::string> split_line(const std::string& line) { return detail::split(line, ','); }

}  // namespace

TEST(Config, ParsesSampleConfigs) {
  for (const char* name : {"paper-basic.yaml", "quarter-support.yaml", "cky-log.yaml", "hl-log.yaml", "clm.yaml"}) {
    const auto c = load_config(std::string(HLB_CONFIG_DIR) + "/" + name);
    EXPECT_GT(c.options.t_end, 0) << name;
  }
  const auto c = load_config(std::string(HLB_CONFIG_DIR) + "/cky-log.yaml");
  EXPECT_TRUE(c.is_log());
  EXPECT_EQ(c.model.model, Model::CKY);
}

TEST(Config, NumbersAcceptPiMultiples) {
  const auto c = parse_config_text(kSmallRun);
  EXPECT_NEAR(c.L, 2 * std::numbers::pi, 1e-15);
  EXPECT_EQ(c.N, 64u);
  EXPECT_DOUBLE_EQ(c.options.t_end, 0.3);
}

TEST(Config, ErrorsCarryLineNumbers) {
  std::string text = kSmallRun;
  text.replace(text.find("N: 64"), 5, "N: lots");
  try {
    parse_config_text(text, "bad.yaml");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::config);
    EXPECT_NE(std::string(e.what()).find("bad.yaml:5"), std::string::npos) << e.what();
  }
}

TEST(Config, UnknownKeysAreRejected) {
  std::string text = kSmallRun;
  text.replace(text.find("seed: 1"), 7, "sead: 1");
  try {
    parse_config_text(text);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("sead"), std::string::npos);
  }
}

TEST(Config, OverridesUseDottedKeys) {
  const auto dir = scratch("override");
  const auto path = write_file(dir / "run.yaml", kSmallRun);
  const auto c = load_config(path.string(), {{"grid.N", "128"}, {"control.cfl", "0.2"}});
  EXPECT_EQ(c.N, 128u);
  EXPECT_DOUBLE_EQ(c.control.cfl_number, 0.2);
}

TEST(Cli, MissingPresetExitsWithUsageError) {
  const auto dir = scratch("missing");
  std::string text = kSmallRun;
  text.replace(text.find("  preset: paper-basic\n"), 22, "  params: {A: 1}\n");
  const auto cfg = write_file(dir / "run.yaml", text);
  EXPECT_EQ(tool("simulate --config " + cfg.string() + " --out " + (dir / "out").string(), dir / "log.txt"), 2);
  EXPECT_NE(slurp(dir / "log.txt").find("initial.preset"), std::string::npos) << slurp(dir / "log.txt");
}

TEST(Cli, UnknownSubcommandOptionIsUsageError) {
  const auto dir = scratch("usage");
  EXPECT_EQ(tool("simulate --bogus 1", dir / "log.txt"), 2);
  EXPECT_EQ(tool("verify --suite nothing", dir / "log.txt"), 2);
}

TEST(Cli, SimulateWritesExactColumns) {
  const auto dir = scratch("columns");
  const auto cfg = write_file(dir / "run.yaml", kSmallRun);
  ASSERT_EQ(tool("simulate --config " + cfg.string() + " --out " + (dir / "out").string(), dir / "log.txt"), 0)
      << slurp(dir / "log.txt");
  std::istringstream ts(slurp(dir / "out" / "timeseries.csv"));
  std::string header;
  std::getline(ts, header);
  EXPECT_EQ(header,
            "t,dt,I,J,dIdt_minus_J,dJdt_minus_c0I2,max_omega,max_thetax,max_ux,bkm_ux,bkm_thetax,bkm_omega,"
            "l1_omega,l1_bound_margin,u_l2,u_bmo_proxy,tail_fraction");
  std::string row;
  std::size_t rows = 0;
  while (std::getline(ts, row)) {
    EXPECT_EQ(split_line(row).size(), 17u);
    ++rows;
  }
  EXPECT_GT(rows, 2u);
  EXPECT_TRUE(fs::exists(dir / "out" / "manifest.json"));
  EXPECT_TRUE(fs::exists(dir / "out" / "snapshots" / "0000.csv"));
  const auto m = nlohmann::json::parse(slurp(dir / "out" / "manifest.json"));
  EXPECT_EQ(m["termination"], "time-reached");
}

TEST(Cli, RunsAreByteIdentical) {
  const auto dir = scratch("determinism");
  const auto cfg = write_file(dir / "run.yaml", kSmallRun);
  for (const char* o : {"a", "b"})
    ASSERT_EQ(tool("simulate --config " + cfg.string() + " --out " + (dir / o).string(), dir / "log.txt"), 0);
  for (const char* f : {"timeseries.csv", "manifest.json", "checkpoint.txt"})
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
}

TEST(Cli, RestartReproducesTheFinalState) {
  const auto dir = scratch("restart");
  const auto full = write_file(dir / "full.yaml", kSmallRun);
  ASSERT_EQ(tool("simulate --config " + full.string() + " --out " + (dir / "full").string(), dir / "log.txt"), 0);
  // The last checkpoint written by the full run stands in for an interrupted run.
  ASSERT_EQ(tool("simulate --config " + full.string() + " --out " + (dir / "resumed").string() + " --restart " +
                     (dir / "full" / "checkpoint.txt").string(),
                 dir / "log.txt"),
            0)
      << slurp(dir / "log.txt");
  auto last = [](const fs::path& p) {
    std::istringstream in(slurp(p));
    std::string line, prev;
    while (std::getline(in, line))
      if (!line.empty()) prev = line;
    return split_line(prev);
  };
  const auto a = last(dir / "full" / "timeseries.csv"), b = last(dir / "resumed" / "timeseries.csv");
  ASSERT_EQ(a.size(), b.size());
  EXPECT_EQ(a[0], b[0]);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = std::stod(a[i]), y = std::stod(b[i]);
    if (std::isnan(x)) continue;
    EXPECT_LE(std::abs(x - y), 1e-12 * std::max(1.0, std::abs(x))) << i;
  }
}

TEST(Cli, CheckpointRoundTripIsExact) {
  const auto g = make_periodic_grid(2 * std::numbers::pi, 16);
  RunCheckpoint cp;
  cp.state = preset_initial_data("paper-basic", g);
  cp.state.t = 0.1 + 0.2;
  cp.steps = 3;
  DiagnosticsRecord r;
  r.t = 1.0 / 3;
  r.I = std::nan("");
  cp.records.push_back(r);
  std::stringstream s;
  write_checkpoint(s, cp);
  const auto back = read_checkpoint(s);
  EXPECT_EQ(back.state.t, cp.state.t);
  EXPECT_EQ(back.state.omega, cp.state.omega);
  EXPECT_EQ(back.steps, 3u);
  ASSERT_EQ(back.records.size(), 1u);
  EXPECT_EQ(back.records[0].t, r.t);
  EXPECT_TRUE(std::isnan(back.records[0].I));
}

TEST(Cli, VerifyExitCodes) {
  const auto dir = scratch("verify");
  EXPECT_EQ(tool("verify --suite kernels", dir / "log.txt"), 0) << slurp(dir / "log.txt");
  // A negative tolerance makes every exact property fail.
  EXPECT_EQ(tool("verify --suite kernels --tolerance -1", dir / "log.txt"), 1);
  EXPECT_EQ(tool("verify --suite spectra", dir / "log.txt"), 2);
}

TEST(Cli, BoundsCommand) {
  const auto dir = scratch("bounds");
  EXPECT_EQ(tool("bounds --kind gengron --params I0=1,J0=0.5,c0=0.5 --out " + (dir / "env.csv").string(),
                 dir / "log.txt"),
            0);
  const auto csv = slurp(dir / "env.csv");
  EXPECT_EQ(csv.substr(0, 9), "t,y,dy,h\n");
  EXPECT_NE(slurp(dir / "log.txt").find("blew_up=true"), std::string::npos);
  EXPECT_EQ(tool("bounds --kind fg --params F0=-1", dir / "log.txt"), 2);
  EXPECT_EQ(tool("bounds --kind gengron --params Q=1", dir / "log.txt"), 2);
  EXPECT_EQ(tool("bounds --kind spiral", dir / "log.txt"), 2);
}

TEST(Cli, SweepWritesIndex) {
  const auto dir = scratch("sweep");
  const auto cfg = write_file(dir / "run.yaml", kSmallRun);
  ASSERT_EQ(tool("sweep --config " + cfg.string() + " --vary grid.N=32,64 --vary initial.params.A=0.5,1 --jobs 2 --out " +
                     (dir / "out").string(),
                 dir / "log.txt"),
            0)
      << slurp(dir / "log.txt");
  std::istringstream idx(slurp(dir / "out" / "index.csv"));
  std::string line;
  std::getline(idx, line);
  EXPECT_EQ(line, "run,grid.N,initial.params.A,exit_code,termination,t_final,steps,records");
  std::size_t n = 0;
  while (std::getline(idx, line)) {
    const auto f = split_line(line);
    EXPECT_EQ(f[3], "0");
    EXPECT_TRUE(fs::exists(dir / "out" / f[0] / "timeseries.csv"));
    ++n;
  }
  EXPECT_EQ(n, 4u);
}
