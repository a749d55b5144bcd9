#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <sys/wait.h>

#include "mel/cli/dispatch.hpp"

namespace fs = std::filesystem;
using mel::io::Json;

namespace {

const std::string kFixtures = MEL_FIXTURES;

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = mel::cli::dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    std::random_device rd;
    dir_ = fs::temp_directory_path() / ("mel_cli_" + std::to_string(rd()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string out(const std::string& sub = "out") const { return (dir_ / sub).string(); }
  std::string write(const std::string& name, const std::string& body) const {
    std::ofstream(dir_ / name) << body;
    return (dir_ / name).string();
  }
  static std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
  }
  static Json json(const fs::path& p) { return Json::parse(slurp(p)); }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, NoSubcommandIsUsageError) {
  const auto r = run({});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("page"), std::string::npos);
}

TEST_F(CliTest, HelpExitsZero) {
  const auto r = run({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("schwinger-jets"), std::string::npos);
}

TEST_F(CliTest, UnknownFlagIsUsageError) {
  const auto r = run({"page", "--bogus", "3", "--out-dir", out()});
  EXPECT_EQ(r.code, 2);
  EXPECT_FALSE(r.err.empty());
  EXPECT_FALSE(fs::exists(out()));
}

TEST_F(CliTest, MissingRequiredInputIsUsageError) {
  EXPECT_EQ(run({"entropy", "--out-dir", out()}).code, 2);
  EXPECT_EQ(run({"mel-compare", "--table", kFixtures + "/xg_table.csv", "--out-dir", out()}).code, 2);
}

TEST_F(CliTest, InvalidChoiceIsUsageError) {
  EXPECT_EQ(run({"cascade", "--dist", "binomial", "--out-dir", out()}).code, 2);
  EXPECT_EQ(run({"page", "--threads", "0", "--out-dir", out()}).code, 2);
}

TEST_F(CliTest, InvalidParameterIsUsageError) {
  EXPECT_EQ(run({"page", "--m", "0", "--out-dir", out()}).code, 2);
}

TEST_F(CliTest, UnwritableOutputIsRuntimeError) {
  const std::string blocker = write("blocker", "not a directory");
  const auto r = run({"page", "--samples", "10", "--out-dir", blocker + "/sub"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("cannot write"), std::string::npos) << r.err;
}

TEST_F(CliTest, MissingInputFileIsRuntimeError) {
  EXPECT_EQ(run({"entropy", "--input", out("nope.csv"), "--out-dir", out()}).code, 1);
}

TEST_F(CliTest, PageReportsExactAndMonteCarlo) {
  const auto r = run({"page", "--m", "2", "--n", "8", "--samples", "5000", "--seed", "7", "--out-dir", out()});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = json(fs::path(out()) / "page.json");
  EXPECT_DOUBLE_EQ(j["exact"].get<double>(), mel::page_entropy_exact(2, 8));
  EXPECT_NEAR(j["mc_mean"].get<double>(), j["exact"].get<double>(), 3 * j["mc_stderr"].get<double>());
  EXPECT_EQ(j["unit"], "nats");
  const Json m = json(fs::path(out()) / "manifest.json");
  EXPECT_EQ(m["subcommand"], "page");
  EXPECT_EQ(m["seed"], 7);
  EXPECT_EQ(m["parameters"]["samples"], "5000");
  EXPECT_EQ(m["parameter_sources"]["samples"], "flag");
  EXPECT_EQ(m["parameter_sources"]["bits"], "default");
  EXPECT_EQ(m["tool_version"], MEL_VERSION);
}

TEST_F(CliTest, BitsConvertsAtDisplayLayer) {
  ASSERT_EQ(run({"page", "--m", "2", "--n", "2", "--samples", "10", "--bits", "--out-dir", out()}).code, 0);
  const Json j = json(fs::path(out()) / "page.json");
  EXPECT_NEAR(j["exact"].get<double>(), (1.0 / 3) / std::log(2.0), 1e-15);
  EXPECT_EQ(j["unit"], "bits");
}

TEST_F(CliTest, GlobalFlagAfterSubcommand) {
  ASSERT_EQ(run({"--seed", "3", "page", "--samples", "10", "--out-dir", out()}).code, 0);
  EXPECT_EQ(json(fs::path(out()) / "manifest.json")["seed"], 3);
}

TEST_F(CliTest, CascadeProbabilitiesSumToOneMinusTail) {
  ASSERT_EQ(run({"cascade", "--lambda", "0.5", "--y", "4", "--out-dir", out()}).code, 0);
  const Json j = json(fs::path(out()) / "cascade.json");
  std::ifstream csv(fs::path(out()) / "cascade.csv");
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line.rfind("n,prob", 0), 0u);
  long double sum = 0;
  while (std::getline(csv, line)) {
    const auto c1 = line.find(','), c2 = line.find(',', c1 + 1);
    sum += std::stold(line.substr(c1 + 1, c2 - c1 - 1));
  }
  EXPECT_NEAR(static_cast<double>(sum), 1.0 - j["tail_mass"].get<double>(), 1e-12);
  EXPECT_NEAR(j["mean"].get<double>(), std::exp(2.0), 1e-9);
}

TEST_F(CliTest, EmptyConfigGivesDefaults) {
  const std::string cfg = write("empty.conf", "");
  ASSERT_EQ(run({"cascade", "--config", cfg, "--y", "1", "--out-dir", out("a")}).code, 0);
  ASSERT_EQ(run({"cascade", "--y", "1", "--out-dir", out("b")}).code, 0);
  EXPECT_EQ(slurp(fs::path(out("a")) / "cascade.csv"), slurp(fs::path(out("b")) / "cascade.csv"));
  EXPECT_EQ(json(fs::path(out("a")) / "manifest.json")["parameter_sources"]["lambda"], "default");
}

TEST_F(CliTest, FlagOverridesConfigAndBothRecorded) {
  const std::string cfg = kFixtures + "/cascade.conf";
  ASSERT_EQ(run({"cascade", "--config", cfg, "--y", "2", "--out-dir", out()}).code, 0);
  const Json m = json(fs::path(out()) / "manifest.json");
  EXPECT_EQ(m["parameters"]["y"], "2");
  EXPECT_EQ(m["parameter_sources"]["y"], "flag");
  EXPECT_EQ(m["overridden"]["y"]["config"], "4");
  EXPECT_EQ(m["overridden"]["y"]["flag"], "2");
  EXPECT_EQ(m["parameters"]["lambda"], "0.5");
  EXPECT_EQ(m["parameter_sources"]["lambda"], "config");
  EXPECT_EQ(m["config_file"], cfg);
  EXPECT_NEAR(json(fs::path(out()) / "cascade.json")["mean"].get<double>(), std::exp(1.0), 1e-12);
}

TEST_F(CliTest, UnknownConfigKeyNamed) {
  const std::string cfg = write("bad.conf", "lambda = 1\nlamda = 2\n");
  const auto r = run({"cascade", "--config", cfg, "--out-dir", out()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("'lamda'"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("line 2"), std::string::npos) << r.err;
  // A key valid for another subcommand is still unknown here.
  EXPECT_EQ(run({"page", "--config", cfg, "--out-dir", out()}).code, 2);
}

TEST_F(CliTest, DuplicateConfigKeyNamed) {
  const std::string cfg = write("dup.conf", "y = 1\n# note\ny = 2\n");
  const auto r = run({"cascade", "--config", cfg, "--out-dir", out()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("duplicate key 'y'"), std::string::npos) << r.err;
}

TEST_F(CliTest, MalformedConfigLine) {
  const std::string cfg = write("junk.conf", "lambda 1\n");
  EXPECT_EQ(run({"cascade", "--config", cfg, "--out-dir", out()}).code, 2);
}

TEST_F(CliTest, DeterministicPayloads) {
  for (const std::string d : {"a", "b"})
    ASSERT_EQ(run({"cascade", "--y", "2", "--trials", "2000", "--seed", "5", "--out-dir", out(d)}).code, 0);
  for (const std::string f : {"cascade.csv", "cascade.json"})
    EXPECT_EQ(slurp(fs::path(out("a")) / f), slurp(fs::path(out("b")) / f)) << f;
  ASSERT_EQ(run({"cascade", "--y", "2", "--trials", "2000", "--seed", "6", "--out-dir", out("c")}).code, 0);
  EXPECT_NE(slurp(fs::path(out("a")) / "cascade.csv"), slurp(fs::path(out("c")) / "cascade.csv"));
}

TEST_F(CliTest, EveryOutputListedInManifest) {
  const std::vector<std::vector<std::string>> runs = {
      {"page", "--samples", "20"},
      {"dephase", "--input", kFixtures + "/plus_state.json"},
      {"cascade", "--y-grid", "0:6:7"},
      {"entropy", "--input", kFixtures + "/histogram.csv"},
      {"mutual-info", "--input", kFixtures + "/joint_product.csv"},
      {"mel-compare", "--hist",
       kFixtures + "/dis_bin0.csv," + kFixtures + "/dis_bin1.csv," + kFixtures + "/dis_bin2.csv", "--table",
       kFixtures + "/xg_table.csv"},
      {"schwinger-string", "--n-sites", "8", "--n-thermal", "8", "--d-grid", "0:3"},
      {"schwinger-jets", "--n-sites", "8", "--n-thermal", "8", "--t-final", "1", "--dt", "0.5"},
  };
  int i = 0;
  for (auto args : runs) {
    const std::string d = out("run" + std::to_string(i++));
    args.push_back("--out-dir");
    args.push_back(d);
    const auto r = run(args);
    ASSERT_EQ(r.code, 0) << args[0] << ": " << r.err;
    const Json m = json(fs::path(d) / "manifest.json");
    std::set<std::string> listed;
    for (const auto& o : m["outputs"]) listed.insert(o.get<std::string>());
    std::set<std::string> present;
    for (const auto& e : fs::directory_iterator(d))
      if (e.path().filename() != "manifest.json") present.insert(e.path().filename().string());
    EXPECT_EQ(listed, present) << args[0];
    EXPECT_FALSE(present.empty());
  }
}

TEST_F(CliTest, DephaseOutputs) {
  ASSERT_EQ(run({"dephase", "--input", kFixtures + "/plus_state.json", "--out-dir", out()}).code, 0);
  const Json j = json(fs::path(out()) / "dephase.json");
  EXPECT_NEAR(j["after"].get<double>(), std::log(2.0), 1e-15);
  EXPECT_NEAR(j["before"].get<double>(), 0.0, 1e-12);
  const Json m = json(fs::path(out()) / "manifest.json");
  EXPECT_EQ(m["input_digests"].size(), 1u);
}

TEST_F(CliTest, EntropyProvenance) {
  ASSERT_EQ(run({"entropy", "--input", kFixtures + "/histogram.csv", "--out-dir", out()}).code, 0);
  const Json j = json(fs::path(out()) / "entropy.json");
  EXPECT_NEAR(j["provenance"]["normalization_sum"].get<double>(), 0.999, 1e-12);
  EXPECT_EQ(j["provenance"]["tool_version"], MEL_VERSION);
  EXPECT_FALSE(j["provenance"]["input_digest"].get<std::string>().empty());
}

TEST_F(CliTest, MutualInfoOfProductFixture) {
  ASSERT_EQ(run({"mutual-info", "--input", kFixtures + "/joint_product.csv", "--out-dir", out()}).code, 0);
  EXPECT_NEAR(json(fs::path(out()) / "mutual_info.json")["mutual_information"].get<double>(), 0.0, 1e-10);
}

TEST_F(CliTest, BinaryExitCodes) {
  const std::string exe = MEL_CLI_PATH;
  auto status = [&](const std::string& args) {
    const int s = std::system((exe + " " + args + " >/dev/null 2>&1").c_str());
    return WEXITSTATUS(s);
  };
  EXPECT_EQ(status(""), 2);
  EXPECT_EQ(status("page --samples 10 --out-dir " + out()), 0);
  EXPECT_EQ(status("page --nope"), 2);
  EXPECT_EQ(status("entropy --input " + out("missing.csv") + " --out-dir " + out()), 1);
}
