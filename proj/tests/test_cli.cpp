#include <gtest/gtest.h>
#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("ncscale_cli_" + std::string(::testing::UnitTest::GetInstance()
                                             ->current_test_info()
                                             ->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  // Runs the CLI with stdout/stderr captured to files; returns the exit code.
  int run(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + " " + std::string(NCSCALE_CLI) + " " + args +
                            " > " + path("stdout") + " 2> " + path("stderr");
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string read(const std::string& name) const {
    std::ifstream in(path(name));
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  void write(const std::string& name, const std::string& text) const {
    std::ofstream(path(name)) << text;
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, GenerateAndScaleIdentity) {
  ASSERT_EQ(run("generate identity --n 2 --out " + path("id.json")), 0);
  const Json inst = Json::parse(read("id.json"));
  EXPECT_EQ(inst["known_ncrank"], 2);
  ASSERT_EQ(run("scale " + path("id.json") + " --engine sinkhorn --out " +
                path("t.jsonl")),
            0);
  const Json rep = Json::parse(read("stdout"));
  EXPECT_EQ(rep["iterations"], 0);
  EXPECT_EQ(rep["residual_l1"], 0.0);
  EXPECT_EQ(rep["certificate"]["ncrank"], 2);
}

TEST_F(Cli, ParseErrorExitsOneWithPosition) {
  write("bad.json", "{\n  \"n\": 2,\n  oops\n}\n");
  EXPECT_EQ(run("scale " + path("bad.json")), 1);
  EXPECT_NE(read("stderr").find("line 3"), std::string::npos);
  EXPECT_EQ(run("ncrank " + path("missing.json")), 1);
}

TEST_F(Cli, ConfigErrorsExitOne) {
  ASSERT_EQ(run("generate e4 --out " + path("e4.json")), 0);
  EXPECT_EQ(run("scale " + path("e4.json") + " --engine nope"), 1);
  EXPECT_EQ(run("scale " + path("e4.json") + " --mm-tau -1"), 1);
  EXPECT_EQ(run("scale " + path("e4.json") + " --norm abc"), 1);
  EXPECT_EQ(run("generate zero-block --n 3 --k 2 --l 2"), 1);
  EXPECT_EQ(run("frobnicate"), 1);
}

TEST_F(Cli, NcrankCertifiedAndUncertified) {
  ASSERT_EQ(run("generate skew3 --out " + path("s.json")), 0);
  ASSERT_EQ(run("ncrank " + path("s.json")), 0);
  const Json cert = Json::parse(read("stdout"));
  EXPECT_EQ(cert["ncrank"], 3);
  EXPECT_EQ(cert["certified"], true);

  ASSERT_EQ(run("generate zero-block --n 4 --k 3 --l 1 --out " + path("z.json")), 0);
  ASSERT_EQ(run("ncrank " + path("z.json")), 0);
  EXPECT_EQ(Json::parse(read("stdout"))["corank"], 2);

  // skew3 needs 2x2 blow-ups for its lower bound; capping d at 1 leaves
  // 2 <= nc-rank <= 3.
  EXPECT_EQ(run("ncrank " + path("s.json") + " --max-blowup-d 1"), 3);
  EXPECT_NE(read("stderr").find("uncertified: 2 <= nc-rank <= 3"), std::string::npos);
  EXPECT_EQ(run("ncrank " + path("s.json") + " --max-blowup-d -1"), 1);
}

TEST_F(Cli, BoundaryStopExitsTwoAndWritesTrace) {
  ASSERT_EQ(run("generate e4 --out " + path("e4.json")), 0);
  EXPECT_EQ(run("scale " + path("e4.json") + " --engine gd --max-iters 2000 --out " +
                path("t.jsonl")),
            2);
  const std::string trace = read("t.jsonl");
  EXPECT_GT(std::count(trace.begin(), trace.end(), '\n'), 10);
  const Json rep = Json::parse(read("stdout"));
  EXPECT_EQ(rep["stop"], "boundary");
  EXPECT_GE(rep["duality_gap"].get<double>(), -1e-6);
}

TEST_F(Cli, E4MinimizingMovementGap) {
  ASSERT_EQ(run("generate e4 --out " + path("e4.json")), 0);
  run("scale " + path("e4.json") + " --engine mm --max-iters 500 --out " +
      path("t.jsonl"));
  const Json rep = Json::parse(read("stdout"));
  EXPECT_LE(rep["duality_gap"].get<double>(), 0.1);
  EXPECT_GE(rep["duality_gap"].get<double>(), -1e-6);
}

TEST_F(Cli, E1AutoReduces) {
  ASSERT_EQ(run("generate e1 --out " + path("e1.json")), 0);
  ASSERT_EQ(run("scale " + path("e1.json") + " --engine sinkhorn --out " +
                path("t.jsonl")),
            0);
  const Json rep = Json::parse(read("stdout"));
  EXPECT_EQ(rep["reduced_n"], 1);
  EXPECT_EQ(rep["certificate"]["corank"], 1);
  EXPECT_NEAR(rep["residual_l1"].get<double>(), 2.0, 1e-12);
}

TEST_F(Cli, DeterministicOutputs) {
  ASSERT_EQ(run("generate random-full --n 3 --m 2 --seed 4 --out " + path("r.json")), 0);
  run("scale " + path("r.json") + " --engine mm --max-iters 40 --out " + path("t1.jsonl"));
  Json r1 = Json::parse(read("stdout"));
  run("scale " + path("r.json") + " --engine mm --max-iters 40 --out " + path("t2.jsonl"));
  Json r2 = Json::parse(read("stdout"));
  EXPECT_EQ(read("t1.jsonl"), read("t2.jsonl"));
  r1.erase("wall_clock_seconds");
  r2.erase("wall_clock_seconds");
  EXPECT_EQ(r1.dump(), r2.dump());
}

TEST_F(Cli, SeedFallsBackToEnvironment) {
  ASSERT_EQ(run("generate random-full --n 3 --m 2 --seed 9 --out " + path("a.json")), 0);
  ASSERT_EQ(run("generate random-full --n 3 --m 2 --out " + path("b.json"),
                "NCSCALE_SEED=9"),
            0);
  ASSERT_EQ(run("generate random-full --n 3 --m 2 --out " + path("c.json")), 0);
  EXPECT_EQ(read("a.json"), read("b.json"));
  EXPECT_NE(read("a.json"), read("c.json"));
}

TEST_F(Cli, VerifySuites) {
  EXPECT_EQ(run("verify --suite norms"), 0);
  const Json s = Json::parse(read("stdout"));
  EXPECT_EQ(s["passed"], true);
  EXPECT_EQ(s["suites"][0]["name"], "norms");
  ASSERT_EQ(run("generate e4 --out " + path("e4.json")), 0);
  EXPECT_EQ(run("verify --suite duality --instance " + path("e4.json")), 0);
  EXPECT_EQ(run("verify --suite nope"), 1);
}
