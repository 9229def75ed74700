// Exercises the installed CLI surface through a shell; the binary path comes
// from the build system.
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "helpers.hpp"
#include "plateforge/dataset.hpp"
#include "plateforge/trajectory_io.hpp"

using namespace plateforge;
namespace fs = std::filesystem;

namespace {

#ifndef PLATEFORGE_CLI_PATH
#define PLATEFORGE_CLI_PATH "plateforge"
#endif

int run(const std::string& args) {
  const std::string cmd = std::string(PLATEFORGE_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(static_cast<bool>(in));
  return std::string((std::istreambuf_iterator<char>(in)), {});
}

std::string write_small_config(const std::string& dir) {
  const std::string path = dir + "/small.toml";
  std::ofstream out(path);
  out << "[plate]\nNx = 13\nNy = 11\nfs = 4000.0\ncnl_over_s0 = 5.0e4\n\n"
      << "[modes]\nmx = 3\nmy = 3\n\n"
      << "[dataset]\ncount = 6\nduration = 0.05\ntrain_fraction = 0.5\nval_fraction = 0.25\n\n"
      << "[solver]\noversample = 2\n\n"
      << "[run]\nseed = 11\njobs = 1\n";
  return path;
}

}  // namespace

TEST_CASE("usage errors exit with code 2", "[cli]") {
  CHECK(run("generate") == 2);                                  // missing required flags
  CHECK(run("generate --config /nope.toml --out /tmp/x") == 2); // missing config file
  CHECK(run("frobnicate") == 2);                                // unknown subcommand
}

TEST_CASE("generate is reproducible for a fixed seed", "[cli]") {
  const std::string dir = testutil::temp_dir("cli_gen");
  const std::string cfg = write_small_config(dir);

  REQUIRE(run("generate --config " + cfg + " --seed 7 --out " + dir + "/a") == 0);
  REQUIRE(run("generate --config " + cfg + " --seed 7 --out " + dir + "/b") == 0);
  CHECK(slurp(dir + "/a/manifest.json") == slurp(dir + "/b/manifest.json"));

  REQUIRE(run("generate --config " + cfg + " --seed 8 --out " + dir + "/c") == 0);
  CHECK(slurp(dir + "/a/traj_0000.plt1") != slurp(dir + "/c/traj_0000.plt1"));

  // PLATEFORGE_SEED overrides the config seed
  REQUIRE(std::system((std::string("PLATEFORGE_SEED=8 ") + PLATEFORGE_CLI_PATH + " generate --config " +
                       cfg + " --out " + dir + "/d >/dev/null 2>&1")
                          .c_str()) == 0);
  CHECK(slurp(dir + "/c/manifest.json") == slurp(dir + "/d/manifest.json"));

  // data errors surface as exit 3
  CHECK(run("fit-dmd --config " + cfg + " --data " + dir + "/missing --out " + dir + "/m.pfdmd") ==
        3);
}

#ifdef PLATEFORGE_BERGER_CONFIG
TEST_CASE("spectra of a linear run peaks at the fundamental", "[cli]") {
  const std::string dir = testutil::temp_dir("cli_spectra");
  // production-grid linear trajectory, half a second
  REQUIRE(run(std::string("solve --config ") + PLATEFORGE_BERGER_CONFIG + " --out " + dir +
              "/lin.plt1 --steps 8000 --linear --vmax 10 --sigma 0.1 --cx 0.2 --cy 0.18") == 0);
  REQUIRE(run(std::string("spectra --config ") + PLATEFORGE_BERGER_CONFIG + " --traj " + dir +
              "/lin.plt1 --probe center --out " + dir + "/spec") == 0);

  // peak row of the spectrum CSV sits at the fundamental
  std::ifstream csv(dir + "/spec/lin_spectrum.csv");
  REQUIRE(static_cast<bool>(csv));
  std::string line;
  std::getline(csv, line);  // header
  double best_f = 0, best_p = -1;
  while (std::getline(csv, line)) {
    const auto comma = line.find(',');
    const double f = std::stod(line.substr(0, comma));
    const double p = std::stod(line.substr(comma + 1));
    if (f >= 20.0 && p > best_p) {
      best_p = p;
      best_f = f;
    }
  }
  CHECK(std::abs(best_f - 103.2) <= 1.0);

  // WAV header advertises the trajectory rate
  REQUIRE(run("export-wav --traj " + dir + "/lin.plt1 --probe center --channel velocity --out " +
              dir + "/lin.wav") == 0);
  std::ifstream wav(dir + "/lin.wav", std::ios::binary);
  std::string head(28, '\0');
  wav.read(head.data(), 28);
  std::uint32_t rate = 0;
  std::memcpy(&rate, head.data() + 24, 4);
  CHECK(rate == 16000);
}
#endif
