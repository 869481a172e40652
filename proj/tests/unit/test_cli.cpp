#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "npmd/cli/config.hpp"
#include "npmd/cli/experiment.hpp"
#include "npmd/errors.hpp"
#include "npmd/schedule.hpp"

using namespace npmd;
using namespace npmd::cli;

TEST(Schedule, ParseAndPrint) {
  const Schedule s = Schedule::parse("0.5 * n^-0.25");
  EXPECT_EQ(s.coefficient, 0.5);
  EXPECT_EQ(s.exponent, -0.25);
  EXPECT_EQ(Schedule::parse(s.to_string()), s);
  EXPECT_EQ(Schedule::parse("n*n").exponent, 2.0);
  EXPECT_EQ(Schedule::parse("2*(3)").coefficient, 6.0);
  EXPECT_DOUBLE_EQ(Schedule::parse("n^-0.5")(100.0), 0.1);
  EXPECT_THROW(Schedule::parse("n^"), ConfigError);
  EXPECT_THROW(Schedule::parse("log(n)"), ConfigError);
  EXPECT_THROW(Schedule::parse(""), ConfigError);
}

TEST(Schedule, Grids) {
  EXPECT_EQ(parse_n_grid("10:10000:log"), (std::vector<std::int64_t>{10, 100, 1000, 10000}));
  EXPECT_EQ(parse_n_grid("1e4,1e5"), (std::vector<std::int64_t>{10000, 100000}));
  EXPECT_EQ(parse_n_grid("10:40:lin:10"), (std::vector<std::int64_t>{10, 20, 30, 40}));
  EXPECT_EQ(parse_n_grid("10:100:log:2").size(), 3u);
  EXPECT_THROW(parse_n_grid("10,5"), ConfigError);
  EXPECT_THROW(parse_n_grid("0.5"), ConfigError);
  EXPECT_THROW(parse_n_grid("1:10:cubic"), ConfigError);
}

TEST(Config, RoundTripIdempotent) {
  ExperimentConfig c;
  c.x = "0.5*n^-0.25";
  c.q = 0.2;
  const auto j1 = to_json(c);
  const auto j2 = to_json(from_json(nlohmann::json::parse(j1.dump())));
  EXPECT_EQ(j1.dump(), j2.dump());
  const auto j3 = to_json(from_json(nlohmann::json::parse(j2.dump())));
  EXPECT_EQ(j2.dump(), j3.dump());
}

TEST(Config, Rejections) {
  EXPECT_THROW(from_json(nlohmann::json{{"bogus", 1}}), ConfigError);
  EXPECT_THROW(from_json(nlohmann::json{{"budget", "lots"}}), ConfigError);
  ExperimentConfig c;
  c.command = "plot";
  EXPECT_THROW(validate(c), ConfigError);
  c = {};
  c.direction = "ar:0.7";
  EXPECT_THROW(validate(c), ConfigError);
  EXPECT_EQ(parse_count("1e6", "budget"), 1000000);
  EXPECT_THROW(parse_count("1.5", "budget"), ConfigError);
  EXPECT_EQ(parse_k_range("2:6"), (std::pair<int, int>{2, 6}));
  EXPECT_THROW(parse_k_range("6:2"), ConfigError);
}

TEST(Experiment, CorollaryRatioRejected) {
  ExperimentConfig c;
  c.direction = "ar:0.45";
  c.x.reset();
  c.x_over_theta = "0.5";
  try {
    execute(c);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("Corollary preset requires ratio"), std::string::npos);
  }
}

TEST(Experiment, BracketThm3Table) {
  ExperimentConfig c;
  c.command = "bracket";
  c.direction = "ar:0.45";
  c.regime = "thm3";
  c.k_range = "2:6";
  const auto out = execute(c);
  std::istringstream in(out.table);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "n,x,theta,D,p_n_bound,M,upper_rate,lower_rate,regime");
  double prev = INFINITY;
  int rows = 0;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    const double up = std::stod(cells[6]);
    EXPECT_LT(up, prev);
    prev = up;
    ++rows;
  }
  EXPECT_EQ(rows, 5);
  EXPECT_EQ(out.manifest["points"].size(), 5u);
}

TEST(Experiment, RatesDeterministicAcrossWorkers) {
  ExperimentConfig c;
  c.n_grid = "10:1000:log";
  c.budget = 2000;
  c.seed = "42";
  c.estimator = "both";
  const auto dir = std::filesystem::temp_directory_path() / "npmd_cli_test";
  c.output_dir = (dir / "a").string();
  const auto a = run(c, 1);
  c.output_dir = (dir / "b").string();
  const auto b = run(c, 3);
  const auto slurp = [](const std::string& p) {
    std::ifstream f(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(f), {});
  };
  EXPECT_EQ(slurp(a.table_path), slurp(b.table_path));
  EXPECT_EQ(slurp(a.manifest_path), slurp(b.manifest_path));
  EXPECT_EQ(a.manifest["points"][0]["regime"], "thm1");
  std::filesystem::remove_all(dir);
}

TEST(Experiment, ManifestRederivesConstants) {
  ExperimentConfig c;
  c.command = "constants";
  c.direction = "cosine";
  c.theta = "0.1";
  c.n_grid = "1";
  const auto out = execute(c);
  EXPECT_NEAR(out.manifest["points"][0]["e0n"].get<double>(), -0.0050380, 1e-7);
  EXPECT_EQ(out.manifest["config"]["direction"], "cosine");
}

TEST(Experiment, MogulskiiRandom) {
  ExperimentConfig c;
  c.command = "mogulskii-check";
  c.random_instances = 200;
  const auto out = execute(c);
  EXPECT_EQ(out.manifest["violations"], 0);
}
