#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <fstream>

#include "helpers.hpp"
#include "plateforge/config.hpp"

using namespace plateforge;
using Catch::Approx;

TEST_CASE("toml subset parses sections, scalars, arrays and comments", "[config]") {
  const std::string text = R"(# top comment
title = "demo"   # inline comment

[alpha]
x = 3
y = -2.5e-3
flag = true
name = "a # not a comment"
list = [1, 2, 3]
mixed = [0.5, 2]

[beta]
empty_list = []
)";
  const nlohmann::json j = parse_toml(text);
  CHECK(j["title"] == "demo");
  CHECK(j["alpha"]["x"] == 3);
  CHECK(j["alpha"]["x"].is_number_integer());
  CHECK(j["alpha"]["y"].get<double>() == Approx(-2.5e-3));
  CHECK(j["alpha"]["flag"] == true);
  CHECK(j["alpha"]["name"] == "a # not a comment");
  CHECK(j["alpha"]["list"].size() == 3);
  CHECK(j["alpha"]["list"][2] == 3);
  CHECK(j["beta"]["empty_list"].empty());

  CHECK_THROWS_AS(parse_toml("key value\n"), ConfigError);
  CHECK_THROWS_AS(parse_toml("[unclosed\n"), ConfigError);
  CHECK_THROWS_AS(parse_toml("k = \"open\n"), ConfigError);
  CHECK_THROWS_AS(parse_toml("k = [1, 2\n"), ConfigError);
  CHECK_THROWS_AS(parse_toml("k = 12abc\n"), ConfigError);
}

TEST_CASE("run config loads the shipped defaults", "[config]") {
  // mirror of berger.toml
  const std::string text = R"([plate]
rho2 = 0.2622
D = 2.198e-3
T0 = 800.0
d1 = 0.5
d3 = 0.005
cnl_over_s0 = 5.0e4
Lx = 0.4
Ly = 0.36
Nx = 41
Ny = 37
fs = 16000.0

[modes]
mx = 15
my = 15

[surrogate]
rank = 450
block_lengths = [49, 199, 399]

[run]
seed = 77
)";
  const RunConfig cfg = run_config_from_json(parse_toml(text));
  CHECK(cfg.plate.rho2 == Approx(0.2622));
  CHECK(cfg.plate.dx == Approx(0.01));
  CHECK(cfg.plate.dy == Approx(0.01));
  CHECK(cfg.modes_x == 15);
  CHECK(cfg.fit.rank == 450);
  CHECK(cfg.block_lengths == std::vector<int>{49, 199, 399});
  CHECK(cfg.seed == 77);
  // untouched sections keep their defaults
  CHECK(cfg.strike.vmax_hi == Approx(25.0));
  CHECK(cfg.eval.stride == 100);
  CHECK(cfg.oversample == 8);
}

TEST_CASE("unknown keys and sections are rejected by name", "[config]") {
  CHECK_THROWS_WITH(run_config_from_json(parse_toml("[plate]\nbogus = 1\n")),
                    Catch::Matchers::ContainsSubstring("plate.bogus"));
  CHECK_THROWS_WITH(run_config_from_json(parse_toml("[warp]\nx = 1\n")),
                    Catch::Matchers::ContainsSubstring("warp"));
  CHECK_THROWS_AS(run_config_from_json(parse_toml("[evaluate]\nchannel = \"phase\"\n")),
                  ConfigError);
}

TEST_CASE("invalid physical configurations fail validation", "[config]") {
  CHECK_THROWS_AS(run_config_from_json(parse_toml("[plate]\nrho2 = 0.0\n")), ValidationError);
  CHECK_THROWS_AS(run_config_from_json(parse_toml("[strike]\nvmax_min = 30.0\n")),
                  ValidationError);
}

TEST_CASE("config hash is stable and sensitive", "[config]") {
  RunConfig a, b;
  CHECK(a.config_hash() == b.config_hash());
  CHECK(a.config_hash().size() == 16);
  b.seed = a.seed + 1;
  CHECK(a.config_hash() != b.config_hash());

  RunConfig c;
  c.plate.cnl_over_s0 = 0.0;
  CHECK(a.config_hash() != c.config_hash());
}

TEST_CASE("config files load from disk", "[config]") {
  const std::string dir = testutil::temp_dir("config_load");
  {
    std::ofstream out(dir + "/run.toml");
    out << "[dataset]\ncount = 5\nduration = 0.25\n\n[run]\nseed = 9\n";
  }
  const RunConfig cfg = load_run_config(dir + "/run.toml");
  CHECK(cfg.dataset_count == 5);
  CHECK(cfg.dataset_duration == Approx(0.25));
  CHECK(cfg.seed == 9);
  CHECK_THROWS_AS(load_run_config(dir + "/missing.toml"), ConfigError);
}

TEST_CASE("generator config echoes the resolved configuration", "[config]") {
  RunConfig cfg;
  cfg.dataset_count = 4;
  const GeneratorConfig g = cfg.generator_config();
  CHECK(g.count == 4);
  CHECK(g.config_hash == cfg.config_hash());
  CHECK(g.config_echo["plate"]["rho2"].get<double>() == Approx(0.2622));
  CHECK(g.config_echo["run"]["seed"] == cfg.seed);
}
