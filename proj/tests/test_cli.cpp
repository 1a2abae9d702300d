#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "config.hpp"
#include "seqdrift/calibration.hpp"
#include "seqdrift/errors.hpp"

using namespace seqdrift;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::execute(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("seqdrift_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

nlohmann::json base_config() {
  return nlohmann::json::parse(R"({
    "seed": 5,
    "detector": {
      "statistic": "ks",
      "window": 20,
      "threshold": {"policy": "ks_asymptotic", "alpha": 0.05}
    },
    "reference": {"size": 300},
    "stream": {
      "pre": {"family": "gaussian", "mean": [0.0], "variance": [1.0]},
      "post": {"family": "gaussian", "mean": [2.0], "variance": [1.0]},
      "change_point": 60
    },
    "evaluation": {"n_runs": 30, "lambda": 20}
  })");
}

fs::path write_config(const fs::path& dir, const nlohmann::json& j, const std::string& name = "c.json") {
  const auto p = dir / name;
  std::ofstream(p) << j.dump(2);
  return p;
}

}  // namespace

TEST_CASE("config validation names the offending key") {
  auto j = base_config();
  j["detector"]["windwo"] = 3;
  CHECK_THROWS_WITH_AS(cli::parse_config(j), doctest::Contains("unknown key 'windwo' in detector"), InvalidArgument);

  j = base_config();
  j["detector"]["threshold"] = {{"policy", "guess"}};
  CHECK_THROWS_WITH_AS(cli::parse_config(j), doctest::Contains("policy 'guess'"), InvalidArgument);

  j = base_config();
  j["detector"]["statistic"] = "mmd2_u";
  j["detector"]["threshold"] = {{"policy", "fixed"}, {"h", 0.1}};
  CHECK_THROWS_WITH_AS(cli::parse_config(j), doctest::Contains("needs detector.kernel"), InvalidArgument);

  j = base_config();
  j["stream"]["pre"]["mean"] = {0.0, 1.0};
  CHECK_THROWS_AS(cli::parse_config(j), InvalidArgument);

  j = base_config();
  j["evaluation"]["fresh_reference"] = true;
  j["detector"]["threshold"] = {{"policy", "permutation"}, {"alpha", 0.05}, {"n_perm", 400}};
  CHECK_THROWS_WITH_AS(cli::parse_config(j), doctest::Contains("reference-independent"), InvalidArgument);

  j = base_config();
  j["detector"]["window"] = "twenty";
  CHECK_THROWS_WITH_AS(cli::parse_config(j), doctest::Contains("detector.window has the wrong type"), InvalidArgument);

  CHECK_NOTHROW(cli::parse_config(base_config()));
}

TEST_CASE("config hash follows the canonical document") {
  const auto a = cli::parse_config(base_config());
  auto j = base_config();
  j["seed"] = 6;
  const auto b = cli::parse_config(j);
  CHECK(a.hash().size() == 16);
  CHECK(a.hash() != b.hash());
  CHECK(a.hash() == cli::parse_config(nlohmann::json::parse(base_config().dump())).hash());
}

TEST_CASE("arl output is byte-identical across reruns and worker counts") {
  const auto dir = scratch("arl");
  const auto config = write_config(dir, base_config());
  std::vector<std::string> csvs, reports;
  for (const char* workers : {"1", "4", "16", "1"}) {
    const auto out = dir / (std::string("w") + workers + std::to_string(csvs.size()));
    const auto r = invoke({"arl", "--config", config.string(), "--seed", "42", "--workers", workers, "--output-dir",
                        out.string()});
    REQUIRE(r.code == 0);
    csvs.push_back(slurp(out / "arl_runs.csv"));
    reports.push_back(slurp(out / "arl_report.json"));
  }
  for (std::size_t i = 1; i < csvs.size(); ++i) {
    CHECK(csvs[i] == csvs[0]);
    CHECK(reports[i] == reports[0]);
  }
  const auto hash = cli::load_config(config, 42).hash();
  CHECK(csvs[0].rfind("# config_hash=" + hash + " seed=42\nrun_id,T,run_length,censored\n", 0) == 0);
  const auto report = nlohmann::json::parse(reports[0]);
  CHECK(report["metadata"]["config_hash"] == hash);
  CHECK(report["metadata"]["seed"] == 42);
  CHECK(report["metadata"]["config"]["seed"] == 42);
  CHECK(report["n_runs"] == 30);
}

TEST_CASE("usage errors exit nonzero with help text") {
  auto r = invoke({"arl", "--bogus-flag"});
  CHECK(r.code != 0);
  CHECK_FALSE(r.err.empty());
  r = invoke({});
  CHECK(r.code != 0);
  r = invoke({"frobnicate"});
  CHECK(r.code != 0);
  r = invoke({"--help"});
  CHECK(r.code == 0);
  CHECK(r.out.find("reproduce-appendix") != std::string::npos);
}

TEST_CASE("invalid configs and missing files exit nonzero") {
  const auto dir = scratch("invalid");
  auto j = base_config();
  j["evaluation"]["typo"] = 1;
  auto r = invoke({"arl", "--config", write_config(dir, j).string(), "--output-dir", dir.string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("unknown key 'typo'") != std::string::npos);
  r = invoke({"arl", "--config", (dir / "missing.json").string()});
  CHECK(r.code != 0);

  j = base_config();
  j["detector"]["threshold"] = {{"policy", "calibrated"}, {"alpha", 0.05}, {"T_max", 200}, {"B", 50}};
  r = invoke({"calibrate", "--config", write_config(dir, j, "floor.json").string(), "--output-dir", dir.string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("need B >=") != std::string::npos);
}

TEST_CASE("calibrate writes a schedule that the file policy reuses") {
  const auto dir = scratch("calibrate");
  auto j = base_config();
  j["detector"]["threshold"] = {{"policy", "calibrated"}, {"alpha", 0.05}, {"T_max", 60}, {"B", 1500}};
  const auto config = write_config(dir, j);
  auto r = invoke({"calibrate", "--config", config.string(), "--out", (dir / "s.json").string()});
  REQUIRE(r.code == 0);
  const auto text = slurp(dir / "s.json");
  const auto schedule = ThresholdSchedule::from_json(text);
  CHECK(schedule.window() == 20);
  CHECK(schedule.t_max() == 60);
  CHECK(nlohmann::json::parse(text)["metadata"]["config_hash"] == cli::load_config(config, {}).hash());

  j["detector"]["threshold"] = {{"policy", "file"}, {"path", "s.json"}};
  const auto reuse = write_config(dir, j, "reuse.json");
  r = invoke({"delay", "--config", reuse.string(), "--output-dir", dir.string()});
  REQUIRE(r.code == 0);
  const auto report = nlohmann::json::parse(slurp(dir / "delay_report.json"));
  CHECK(report["change_point"] == 60);
  CHECK(report["n_runs"] == 30);
  CHECK(fs::exists(dir / "delay_runs.csv"));

  j["detector"]["window"] = 21;
  r = invoke({"run", "--config", write_config(dir, j, "mismatch.json").string(), "--output-dir", dir.string()});
  CHECK(r.code == 1);
}

TEST_CASE("run on a stream file with a trace") {
  const auto dir = scratch("run");
  {
    std::ofstream f(dir / "stream.csv");
    for (int i = 0; i < 30; ++i) f << (i % 3) * 0.1 << "\n";
    for (int i = 0; i < 40; ++i) f << 5 + i * 0.01 << "\n";
  }
  auto j = base_config();
  j["stream"] = {{"path", "stream.csv"}};
  j["reference"]["distribution"] = {{"family", "gaussian"}, {"mean", {0.1}}, {"variance", {0.01}}};
  const auto config = write_config(dir, j);
  const auto r = invoke({"run", "--config", config.string(), "--output-dir", dir.string(), "--trace",
                      (dir / "trace.csv").string()});
  REQUIRE(r.code == 0);
  const auto report = nlohmann::json::parse(slurp(dir / "detection.json"));
  CHECK(report["censored"] == false);
  const auto t = report["detection_time"].get<int>();
  CHECK(t >= 31);
  CHECK(t <= 40);
  const auto trace = slurp(dir / "trace.csv");
  CHECK(trace.find("\nt,statistic,threshold,detected\n20,") != std::string::npos);
  CHECK(trace.substr(trace.size() - 2) == "1\n");
}

TEST_CASE("other summaries and statistics through the config") {
  const auto dir = scratch("variants");
  auto j = base_config();
  j["detector"]["summary"] = {{"kind", "affine_projection"}, {"matrix", {{1.0, -1.0}}}};
  j["stream"]["pre"] = {{"family", "uniform"}, {"mean", {0.0, 0.0}}, {"variance", {1.0, 1.0}}};
  j["stream"]["post"] = {{"family", "uniform"}, {"mean", {1.0, 0.0}}, {"variance", {1.0, 1.0}}};
  CHECK(invoke({"delay", "--config", write_config(dir, j, "a.json").string(), "--output-dir", dir.string()}).code == 0);

  j = base_config();
  j["detector"]["statistic"] = "mmd2_u";
  j["detector"]["kernel"] = {{"kind", "rbf"}, {"bandwidth", "median"}};
  j["detector"]["threshold"] = {{"policy", "permutation"}, {"alpha", 0.05}, {"n_perm", 200}};
  j["reference"]["size"] = 100;
  CHECK(invoke({"arl", "--config", write_config(dir, j, "b.json").string(), "--output-dir", dir.string(), "--runs", "5"})
            .code == 0);

  j = base_config();
  j["detector"]["statistic"] = "mean_diff";
  j["detector"]["threshold"] = {{"policy", "fixed"}, {"h", 0.9}, {"alpha", 0.05}};
  j["detector"]["summary"] = {
      {"kind", "model_loss"}, {"model", {{"weights", {{0.5}}}, {"bias", {0.0}}}}, {"loss", "squared_error"}};
  j["stream"]["pre"] = {{"family", "gaussian-mixture"},
                        {"components",
                         {{{"weight", 0.5}, {"mean", {0.0, 0.0}}, {"variance", {1.0, 0.1}}},
                          {{"weight", 0.5}, {"mean", {1.0, 0.5}}, {"variance", {1.0, 0.1}}}}}};
  j["stream"].erase("post");
  j["stream"].erase("change_point");
  CHECK(invoke({"arl", "--config", write_config(dir, j, "c.json").string(), "--output-dir", dir.string()}).code == 0);
}

TEST_CASE("reproduce-appendix writes one row per grid point") {
  const auto dir = scratch("appendix");
  const auto r = invoke({"reproduce-appendix", "--scale", "0.02", "--runs", "10", "--grid", "desk", "--output-dir",
                      dir.string(), "--seed", "3"});
  REQUIRE(r.code == 0);
  std::istringstream csv(slurp(dir / "appendix_sweep.csv"));
  std::string line;
  std::getline(csv, line);
  CHECK(line.rfind("# config_hash=", 0) == 0);
  CHECK(line.find("seed=3") != std::string::npos);
  std::getline(csv, line);
  CHECK(line == "w,n,alpha,mean_T,se,slackness,censored,runs");
  std::getline(csv, line);
  CHECK(line.rfind("100,3000,0.05,", 0) == 0);
  std::getline(csv, line);
  CHECK(line.rfind("300,3000,0.05,", 0) == 0);
  CHECK_FALSE(std::getline(csv, line));
}
