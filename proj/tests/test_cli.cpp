// Exercises the installed binary end to end: exit codes, artifact formats
// and seed reproducibility.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

namespace {

std::string cli() {
  const char* path = std::getenv("WINDEX_CLI");
  REQUIRE(path != nullptr);
  return path;
}

std::string config_dir() {
  const char* dir = std::getenv("WINDEX_CONFIG_DIR");
  REQUIRE(dir != nullptr);
  return dir;
}

struct RunResult {
  int exit_code = -1;
  std::string output;
};

RunResult run(const std::string& args) {
  const std::string cmd = cli() + " " + args + " 2>&1";
  std::FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  RunResult r;
  std::array<char, 512> buf;
  while (std::fgets(buf.data(), buf.size(), pipe)) r.output += buf.data();
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempFile {
  std::string path;
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("usage errors exit with the validation code") {
  CHECK(run("").exit_code == 1);
  CHECK(run("frobnicate").exit_code == 1);
  CHECK(run("run").exit_code == 1);  // missing required --scenario
  CHECK(run("--help").exit_code == 0);
}

TEST_CASE("index-table writes the CSV format") {
  TempFile out{"cli_index.csv"};
  const RunResult r = run("index-table --max-queue 10 --out " + out.path);
  CHECK(r.exit_code == 0);
  std::ifstream in(out.path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "state,index");
  int rows = 0;
  std::string line;
  while (std::getline(in, line) && !line.empty()) ++rows;
  CHECK(rows == 11);
}

TEST_CASE("verify-oracle passes on a small sweep and honors the exit contract") {
  TempFile cfg{"cli_oracle.json"};
  {
    std::ofstream out(cfg.path);
    out << R"({"schema": "windex-oracle-v1", "instances": 3,
               "max_queue_range": [4, 8], "lambda_grid_points": 6})";
  }
  const RunResult ok = run("verify-oracle --config " + cfg.path);
  CHECK(ok.exit_code == 0);
  CHECK(ok.output.find("pass") != std::string::npos);

  // an impossible slack makes every lemma check fail: verification exit code
  TempFile bad{"cli_oracle_bad.json"};
  {
    std::ofstream out(bad.path);
    out << R"({"schema": "windex-oracle-v1", "instances": 1,
               "max_queue_range": [4, 6], "lambda_grid_points": 3,
               "slack": -10.0})";
  }
  const RunResult fail = run("verify-oracle --config " + bad.path);
  CHECK(fail.exit_code == 3);
  CHECK(fail.output.find("concav") != std::string::npos);
}

TEST_CASE("run produces a deterministic report for a fixed seed") {
  TempFile scen{"cli_scenario.json"};
  {
    std::ofstream out(scen.path);
    out << R"({"schema": "windex-scenario-v1", "total_rbgs": 17, "horizon": 300,
               "ues": [{"class": "embb"}, {"class": "urllc"}, {"class": "xr"}]})";
  }
  TempFile rep1{"cli_rep1.json"}, rep2{"cli_rep2.json"}, rep3{"cli_rep3.json"};
  CHECK(run("run --scenario " + scen.path + " --policy maxweight --seed 5 --out " +
            rep1.path).exit_code == 0);
  CHECK(run("run --scenario " + scen.path + " --policy maxweight --seed 5 --out " +
            rep2.path).exit_code == 0);
  CHECK(run("run --scenario " + scen.path + " --policy maxweight --seed 6 --out " +
            rep3.path).exit_code == 0);
  CHECK(slurp(rep1.path) == slurp(rep2.path));
  CHECK(slurp(rep1.path) != slurp(rep3.path));

  // oracle-index policy works without model files
  TempFile rep4{"cli_rep4.json"};
  CHECK(run("run --scenario " + scen.path + " --policy oracle --seed 5 --out " +
            rep4.path).exit_code == 0);
}

TEST_CASE("run rejects bad inputs with the validation code") {
  CHECK(run("run --scenario missing.json --policy rr").exit_code == 1);
  TempFile scen{"cli_scenario_bad.json"};
  {
    std::ofstream out(scen.path);
    out << R"({"schema": "windex-scenario-v1", "total_rbgs": 17,
               "ues": [{"class": "embb"}]})";
  }
  CHECK(run("run --scenario " + scen.path + " --policy edf").exit_code == 1);
  // windex policy without model files is a validation failure up front
  CHECK(run("run --scenario " + scen.path + " --policy windex").exit_code != 0);
}

TEST_CASE("sliced run works with the shipped slicing configs") {
  TempFile scen{"cli_scenario_slice.json"};
  {
    std::ofstream out(scen.path);
    out << R"({"schema": "windex-scenario-v1", "total_rbgs": 99, "horizon": 200,
               "ues": [{"class": "embb"}, {"class": "urllc"}, {"class": "xr"}]})";
  }
  const RunResult r = run("run --scenario " + scen.path + " --slices " + config_dir() +
                          "/slicing1.json --seed 2");
  CHECK(r.exit_code == 0);
}

TEST_CASE("train at a tiny budget is seed-reproducible") {
  TempFile m1{"cli_model1.net"}, m2{"cli_model2.net"}, m3{"cli_model3.net"};
  TempFile log{"cli_train_log.csv"};
  const std::string base =
      "train --class urllc --episodes 40 --seed 11 ";
  CHECK(run(base + "--out " + m1.path + " --log " + log.path).exit_code == 0);
  CHECK(run(base + "--out " + m2.path).exit_code == 0);
  CHECK(run("train --class urllc --episodes 40 --seed 12 --out " + m3.path).exit_code == 0);
  CHECK(slurp(m1.path) == slurp(m2.path));
  CHECK(slurp(m1.path) != slurp(m3.path));

  std::ifstream in(log.path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "batch,mean_return,mean_tpt_mbps,grad_norm");

  CHECK(run("train --out x.net").exit_code == 1);  // neither --class nor --config
}

TEST_CASE("bench-inference reports percentiles") {
  const RunResult r = run("bench-inference --ues 4 --threads 1 --iters 50");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("p99") != std::string::npos);
}
