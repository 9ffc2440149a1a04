#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(WORKBENCH_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("lvad_cli_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("usage errors exit 1") {
    CHECK(run("") == 1);
    CHECK(run("no-such-command") == 1);
    CHECK(run("simulate --scenario sideways") == 1);
    CHECK(run("compare --patients 0") == 1);
  }

  TEST_CASE("configuration errors exit 2") {
    const auto dir = scratch("cfg");
    fs::create_directories(dir);
    std::ofstream(dir / "bad.txt") << "cvs.Esa = 1\n";
    CHECK(run("-c " + (dir / "bad.txt").string() + " config --out " + (dir / "x.txt").string()) == 2);
    CHECK(run("--set cvs.Nope=3 config --out " + (dir / "x.txt").string()) == 2);
    CHECK(run("--set controller.mfac.eta=5 config --out " + (dir / "x.txt").string()) == 2);
    fs::remove_all(dir);
  }

  TEST_CASE("config dump reloads") {
    const auto dir = scratch("dump");
    fs::create_directories(dir);
    const auto a = dir / "a.txt", b = dir / "b.txt";
    REQUIRE(run("--set cvs.Vtotal=4900 config --out " + a.string()) == 0);
    REQUIRE(run("-c " + a.string() + " config --out " + b.string()) == 0);
    CHECK(slurp(a) == slurp(b));
    CHECK(slurp(a).find("cvs.Vtotal = 4900") != std::string::npos);
    fs::remove_all(dir);
  }

  TEST_CASE("short simulation writes its outputs") {
    const auto dir = scratch("sim");
    const std::string set = "--set protocol.warmup_end=10 --set protocol.controller_on=10 "
                            "--set protocol.scenario_onset=15 --set protocol.run_end=25 ";
    REQUIRE(run(set + "simulate --scenario rpa-up --controller mfac --out " + dir.string()) == 0);
    for (const char* f : {"trace.csv", "events.csv", "runs.csv", "config.txt"}) CHECK(fs::exists(dir / f));
    const std::string trace = slurp(dir / "trace.csv");
    CHECK(std::count(trace.begin(), trace.end(), '\n') == 25 * 200 + 1);
    fs::remove_all(dir);
  }

  TEST_CASE("simulation failure exits 3") {
    const auto dir = scratch("fail");
    CHECK(run("--set cvs.P0lvf=1e6 simulate --out " + dir.string()) == 3);
    fs::remove_all(dir);
  }
}
