#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "dhmm/errors.hpp"
#include "dhmm/numeric.hpp"
#include "dhmm/harness/cli.hpp"
#include "dhmm/harness/commands.hpp"
#include "dhmm/harness/config.hpp"
#include "dhmm/harness/csv.hpp"

using namespace dhmm;
using namespace dhmm::harness;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string first_line(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line + "\n";
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("dhmm_test_" + name);
  fs::remove_all(p);
  return p;
}

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "dhmm");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

const char* kSmall = R"({
  "name": "small",
  "network": {"graph": "path", "agents": 4},
  "transition": {"bsc": 0.1},
  "likelihoods": {"family": "gaussian", "means": [-1, 1], "sigma": 1},
  "algorithms": [{"variant": "dhs", "gamma": "K"}, {"variant": "asl", "delta": 0.1}],
  "run": {"runs": 20, "horizon": 30, "seed": 4, "tail_window": 10}
})";

fs::path write_config(const std::string& name, const std::string& text) {
  const auto dir = scratch(name + "_cfg");
  fs::create_directories(dir);
  const auto path = dir / "config.json";
  std::ofstream(path) << text;
  return path;
}

}  // namespace

TEST(Csv, NumberFormatting) {
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(1.0), "1");
  EXPECT_EQ(format_number(kInf), "inf");
  EXPECT_EQ(format_number(-kInf), "-inf");
  EXPECT_EQ(std::stod(format_number(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(Config, ParsesSections) {
  const auto points = parse_experiment(kSmall, ".", {});
  ASSERT_EQ(points.size(), 1u);
  const auto& c = points[0];
  EXPECT_EQ(c.name, "small");
  EXPECT_EQ(c.network.agents, 4u);
  ASSERT_EQ(c.algorithms.size(), 2u);
  EXPECT_EQ(c.algorithms[0].gamma, 4.0);
  EXPECT_EQ(c.algorithms[1].variant, Variant::Asl);
  EXPECT_EQ(c.run.runs, 20u);
  EXPECT_EQ(c.tail_window, 10u);
}

TEST(Config, OverridesApply) {
  Overrides o;
  o.seed = 77;
  o.runs = 3;
  o.horizon = 5;
  const auto c = parse_experiment(kSmall, ".", o).front();
  EXPECT_EQ(c.run.seed, 77u);
  EXPECT_EQ(c.run.runs, 3u);
  EXPECT_EQ(c.run.horizon, 5u);
}

TEST(Config, ErrorsNameTheSection) {
  auto message = [](const std::string& text) {
    try {
      parse_experiment(text, ".", {});
    } catch (const ValidationError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  std::string bad = kSmall;
  bad.replace(bad.find("\"bsc\": 0.1"), 10, "\"bsc\": 1.7");
  EXPECT_NE(message(bad).find("transition"), std::string::npos);
  bad = kSmall;
  bad.replace(bad.find("\"sigma\": 1"), 10, "\"sigma\": 0");
  EXPECT_NE(message(bad).find("likelihoods"), std::string::npos);
  bad = kSmall;
  bad.replace(bad.find("\"dhs\""), 5, "\"dbf\"");
  EXPECT_NE(message(bad).find("algorithm"), std::string::npos);
  EXPECT_NE(message("{").find("JSON"), std::string::npos);
  EXPECT_NE(message(R"({"network": {"edges": "missing.edges"}})").find("network"), std::string::npos);
}

TEST(Config, SweepExpandsPoints) {
  std::string text = kSmall;
  text.insert(text.rfind('}'), R"(, "sweep": [{"label": "a", "transition": {"bsc": 0.2}},
                                            {"network": {"graph": "complete", "agents": 4, "weights": "uniform"}}])");
  const auto points = parse_experiment(text, ".", {});
  ASSERT_EQ(points.size(), 2u);
  EXPECT_EQ(points[0].label, "a");
  EXPECT_EQ(points[1].label, "p1");
  EXPECT_NEAR(points[1].network.rho2, 0.0, 1e-12);
}

TEST(Config, EveryPresetValidates) {
  std::size_t count = 0;
  for (const auto& entry : fs::directory_iterator(preset_dir())) {
    if (entry.path().extension() != ".json") continue;
    ++count;
    EXPECT_NO_THROW(load_experiment(entry.path().string(), {})) << entry.path();
  }
  EXPECT_GE(count, 14u);
  for (const char* name : {"fig3", "fig4a", "fig4b", "fig4c", "fig6", "fig7a", "fig7b", "fig7c", "table1-k10",
                           "table1-k20", "table1-k30", "table1-k40", "table1-k70", "appendixE"}) {
    EXPECT_TRUE(fs::exists(preset_dir() / (std::string(name) + ".json"))) << name;
  }
}

TEST(Commands, SimulateHeadersAndDeterminism) {
  const auto cfg = write_config("sim", kSmall);
  const auto out1 = scratch("sim1"), out2 = scratch("sim2");
  std::ostringstream log;
  CommandOptions o;
  o.config = cfg.string();
  o.emit_beliefs = true;
  o.out = out1;
  ASSERT_EQ(cmd_simulate(o, log), kExitOk);
  o.out = out2;
  ASSERT_EQ(cmd_simulate(o, log), kExitOk);
  EXPECT_EQ(first_line(out1 / "records_dhs-g4.csv"), slurp(fs::path(DHMM_TEST_GOLDEN) / "records.header"));
  EXPECT_EQ(first_line(out1 / "beliefs_dhs-g4.csv"), "run,step,agent,theta_true,mu0,mu1\n");
  for (const char* f : {"records_dhs-g4.csv", "records_asl-d0.1.csv", "beliefs_asl-d0.1.csv", "summary.json"}) {
    EXPECT_EQ(slurp(out1 / f), slurp(out2 / f)) << f;
  }
  // one record per (run, step, agent)
  std::ifstream in(out1 / "records_dhs-g4.csv");
  std::size_t lines = 0;
  for (std::string l; std::getline(in, l);) ++lines;
  EXPECT_EQ(lines, 1u + 20u * 30u * 4u);
}

TEST(Commands, ThreadCountDoesNotChangeOutput) {
  const auto cfg = write_config("threads", kSmall);
  const auto out1 = scratch("thr1"), out2 = scratch("thr2");
  EXPECT_EQ(cli({"risk", "--config", cfg.string(), "--out", out1.string(), "--threads", "1"}), kExitOk);
  EXPECT_EQ(cli({"risk", "--config", cfg.string(), "--out", out2.string(), "--threads", "3"}), kExitOk);
  EXPECT_EQ(slurp(out1 / "risk_dhs-g4.csv"), slurp(out2 / "risk_dhs-g4.csv"));
  EXPECT_EQ(slurp(out1 / "summary.json"), slurp(out2 / "summary.json"));
  EXPECT_EQ(first_line(out1 / "risk_dhs-g4.csv"), slurp(fs::path(DHMM_TEST_GOLDEN) / "risk.header"));
}

TEST(Commands, ErrorHeaders) {
  const auto cfg = write_config("err", kSmall);
  const auto out = scratch("err");
  EXPECT_EQ(cli({"error", "--config", cfg.string(), "--out", out.string()}), kExitOk);
  EXPECT_EQ(first_line(out / "error_dhs-g4.csv"), slurp(fs::path(DHMM_TEST_GOLDEN) / "error.header"));
  EXPECT_TRUE(fs::exists(out / "error_centralized.csv"));
  EXPECT_TRUE(fs::exists(out / "summary.json"));
}

TEST(Cli, ExitCodes) {
  const auto cfg = write_config("exit", kSmall);
  const auto out = scratch("exit");
  EXPECT_EQ(cli({"simulate", "--config", cfg.string(), "--runs", "0", "--out", out.string()}), kExitValidation);
  EXPECT_EQ(cli({"simulate", "--config", "does-not-exist.json", "--out", out.string()}), kExitValidation);
  EXPECT_EQ(cli({"simulate"}), kExitValidation);
  EXPECT_EQ(cli({"frobnicate"}), kExitValidation);
  EXPECT_EQ(cli({"simulate", "--config", cfg.string(), "--runs", "2", "--horizon", "3", "--out", out.string()}),
            kExitOk);

  std::string k5 = R"({"network": {"graph": "ring", "agents": 5},
    "transition": {"bsc": 0.1},
    "likelihoods": {"family": "gaussian", "means": [-1, 1], "sigma": 1},
    "algorithm": {"variant": "consensus-ga", "gamma": 1},
    "oracle": {"variant": "consensus", "runs": 100}})";
  const auto k5cfg = write_config("k5", k5);
  EXPECT_EQ(cli({"oracle", "--config", k5cfg.string(), "--out", out.string()}), kExitRuntime);
}

TEST(Cli, CounterexampleDefaultsToPreset) {
  const auto out = scratch("ce");
  EXPECT_EQ(cli({"counterexample", "--out", out.string(), "--runs", "20000"}), kExitOk);
  EXPECT_NE(slurp(out / "summary.json").find("\"passed\": true"), std::string::npos);
}
