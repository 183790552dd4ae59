#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"

// Both macros come from the build; the fallbacks keep standalone syntax
// checks of this file possible.
#ifndef GIBBSLAB_CLI_PATH
#define GIBBSLAB_CLI_PATH ""
#endif
#ifndef GIBBSLAB_FIXTURES
#define GIBBSLAB_FIXTURES ""
#endif

namespace {

namespace fs = std::filesystem;

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

fs::path scratch_dir(const std::string& label) {
  fs::path dir = fs::temp_directory_path() / ("gibbslab_cli_" + label);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string fixture(const std::string& name) {
  return (fs::path(GIBBSLAB_FIXTURES) / name).string();
}

RunResult run_cli(const std::string& args, const fs::path& scratch) {
  fs::path out_file = scratch / "stdout.txt";
  fs::path err_file = scratch / "stderr.txt";
  std::string cmd = std::string("\"") + GIBBSLAB_CLI_PATH + "\" " + args +
                    " >\"" + out_file.string() + "\" 2>\"" +
                    err_file.string() + "\"";
  int raw = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.out = slurp(out_file);
  r.err = slurp(err_file);
  return r;
}

bool contains(const std::string& haystack, const std::string& needle) {
  return haystack.find(needle) != std::string::npos;
}

std::string first_line(const std::string& text) {
  return text.substr(0, text.find('\n'));
}

}  // namespace

TEST_CASE("the full pipeline writes every artifact") {
  fs::path scratch = scratch_dir("all");
  fs::path out = scratch / "run";
  RunResult r = run_cli("all --system " + fixture("golden_mean.json") +
                            " --out " + out.string() +
                            " --depth 6 --seed 7 --lags 10"
                            " --samples 2000 --block 200",
                        scratch);
  CAPTURE(r.err);
  CHECK(r.exit_code == 0);

  const char* artifacts[] = {"gibbs.json",  "certificate.json", "bowen.csv",
                             "bowen.json",  "correlations.csv", "decay.json",
                             "clt_hist.csv", "clt.json",        "manifest.json"};
  for (const char* name : artifacts) {
    CAPTURE(name);
    fs::path p = out / name;
    REQUIRE(fs::exists(p));
    CHECK(fs::file_size(p) > 0);
  }

  CHECK(first_line(slurp(out / "bowen.csv")) == "m,cylinder,ratio,lower,upper\r");
  CHECK(first_line(slurp(out / "correlations.csv")) == "m,correlation,envelope\r");
  CHECK(first_line(slurp(out / "clt_hist.csv")) == "bin_lo,bin_hi,mass\r");

  std::string manifest = slurp(out / "manifest.json");
  CHECK(contains(manifest, "\"system_sha256\""));
  CHECK(contains(manifest, "\"stage_seconds\""));
  CHECK(contains(manifest, "\"solve\""));
  CHECK(contains(manifest, "\"clt\""));

  std::string gibbs = slurp(out / "gibbs.json");
  CHECK(contains(gibbs, "\"lambda\""));
  CHECK(contains(gibbs, "\"shift_residual\""));
}

TEST_CASE("solve reruns produce byte-identical reports") {
  fs::path scratch = scratch_dir("rerun");
  fs::path out1 = scratch / "a";
  fs::path out2 = scratch / "b";
  std::string common = "solve --system " + fixture("golden_mean.json") +
                       " --depth 5 --seed 11 --out ";
  RunResult r1 = run_cli(common + out1.string(), scratch);
  RunResult r2 = run_cli(common + out2.string(), scratch);
  CHECK(r1.exit_code == 0);
  CHECK(r2.exit_code == 0);
  std::string a = slurp(out1 / "gibbs.json");
  REQUIRE(!a.empty());
  CHECK(a == slurp(out2 / "gibbs.json"));
}

TEST_CASE("option validation failures exit as input faults") {
  fs::path scratch = scratch_dir("badtol");
  RunResult r = run_cli("solve --system " + fixture("golden_mean.json") +
                            " --out " + (scratch / "x").string() + " --tol -1",
                        scratch);
  CHECK(r.exit_code == 2);
  CHECK(contains(r.err, "ValidationError"));
  CHECK(contains(r.err, "tol must be positive"));
}

TEST_CASE("a missing required flag is a parse failure") {
  fs::path scratch = scratch_dir("noflag");
  RunResult r = run_cli("solve", scratch);
  CHECK(r.exit_code == 2);
  CHECK(contains(r.err, "--system"));
}

TEST_CASE("a missing input file is an io fault") {
  fs::path scratch = scratch_dir("nofile");
  RunResult r = run_cli("solve --system " + fixture("no_such_system.json") +
                            " --out " + (scratch / "x").string(),
                        scratch);
  CHECK(r.exit_code == 2);
  CHECK(contains(r.err, "IoError"));
}

TEST_CASE("numeric failures surface as a structured envelope") {
  fs::path scratch = scratch_dir("envelope");
  RunResult r = run_cli("decay --system " + fixture("period2.json") +
                            " --out " + (scratch / "x").string() +
                            " --json-errors",
                        scratch);
  CHECK(r.exit_code == 3);
  CHECK(contains(r.out, "\"code\": \"InsufficientDecayData\""));
  CHECK(contains(r.out, "\"exit\": 3"));
  CHECK(contains(r.out, "\"message\""));
  CHECK(r.err.empty());
}

TEST_CASE("notices about defaulted sections go to stderr") {
  fs::path scratch = scratch_dir("notices");
  RunResult r = run_cli("solve --system " + fixture("bernoulli_fair.json") +
                            " --out " + (scratch / "x").string(),
                        scratch);
  CHECK(r.exit_code == 0);
  if (!r.err.empty()) {
    CHECK(contains(r.err, "gibbslab: notice:"));
  }
}
