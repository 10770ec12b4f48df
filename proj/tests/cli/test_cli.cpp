// Drives the installed binary through the shell and checks exit codes,
// stream separation and byte-for-byte reproducibility.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

const fs::path& scratch() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("cdloss_cli_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void spit(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

std::string at(const std::string& name) { return (scratch() / name).string(); }

Result run(const std::string& args) {
  const auto out = scratch() / "stdout.txt", err = scratch() / "stderr.txt";
  const std::string cmd = std::string("\"") + CDLOSS_CLI + "\" " + args + " >\"" + out.string() + "\" 2>\"" +
                          err.string() + "\"";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

const char* kPhantom = R"({"kind": "folded_shape", "dims": [24, 24, 16], "spacing_mm": [1.5, 1.5, 3.0],
  "seed": 5, "fold_count": 5, "fold_depth": 0.3, "boundary_blur_mm": 1.5, "noise_amplitude": 0.2})";

void make_phantom() {
  spit(at("phantom.json"), kPhantom);
  const auto r = run("synth --spec " + at("phantom.json") + " --out-truth " + at("truth.mvol") + " --out-prob " +
                     at("prob.mvol"));
  REQUIRE(r.code == 0);
}

}  // namespace

TEST_CASE("usage errors exit 2 with usage on stderr") {
  auto r = run("frobnicate");
  CHECK(r.code == 2);
  CHECK(r.out.empty());
  CHECK(r.err.find("unknown subcommand 'frobnicate'") != std::string::npos);
  CHECK(r.err.find("Usage:") != std::string::npos);

  r = run("");
  CHECK(r.code == 2);
  r = run("eval --pred x.mvol");
  CHECK(r.code == 2);
  CHECK(r.err.find("--truth") != std::string::npos);
  r = run("report --in " + at("none.csv") + " --format md");
  CHECK(r.code == 2);
  r = run("contour --in a.mvol --out b.mvol --band 3");
  CHECK(r.code == 2);

  r = run("--help");
  CHECK(r.code == 0);
  CHECK(r.out.find("Subcommands:") != std::string::npos);
  r = run("--version");
  CHECK(r.code == 0);
  CHECK(r.out == "0.1.0\n");
}

TEST_CASE("domain errors exit 1") {
  auto r = run("eval --pred " + at("missing.mvol") + " --truth " + at("missing.mvol"));
  CHECK(r.code == 1);
  CHECK(r.out.empty());
  CHECK(r.err.find("io_error") != std::string::npos);
  spit(at("bad.json"), R"({"kind": "fuzzy_blob", "dims": [8, 8, 8]})");
  r = run("synth --spec " + at("bad.json") + " --out-truth " + at("t.mvol") + " --out-prob " + at("p.mvol"));
  CHECK(r.code == 1);
  CHECK(r.err.find("grid_too_small") != std::string::npos);
}

TEST_CASE("eval on identical volumes") {
  make_phantom();
  auto r = run("eval --pred " + at("truth.mvol") + " --truth " + at("truth.mvol"));
  CHECK(r.code == 0);
  CHECK(r.out == "dice,hausdorff,assd2d,contour_dice\n1.0,0.0,0.0,1.0\n");
  r = run("eval --pred " + at("truth.mvol") + " --truth " + at("truth.mvol") + " --out " + at("report.json"));
  CHECK(r.code == 0);
  CHECK(slurp(at("report.json")).find("\"dice\": 1.0") != std::string::npos);
  r = run("eval --pred " + at("prob.mvol") + " --truth " + at("truth.mvol") + " --percentile 95 --contour-iters 2");
  CHECK(r.code == 0);
  CHECK(r.out.rfind("dice,", 0) == 0);
  // A probability volume is not accepted as the truth.
  CHECK(run("eval --pred " + at("truth.mvol") + " --truth " + at("prob.mvol")).code == 1);
}

TEST_CASE("loss, grad-check and contour") {
  make_phantom();
  spit(at("cfg.json"), R"({"t": 0.5})");
  auto r = run("loss --name contour_dice --pred " + at("prob.mvol") + " --truth " + at("truth.mvol") +
               " --config " + at("cfg.json") + " --out " + at("loss.json") + " --grad-out " + at("grad.mvol"));
  CHECK(r.code == 0);
  CHECK(slurp(at("loss.json")).find("\"value\": -0.") != std::string::npos);
  CHECK(fs::exists(at("grad.mvol")));
  r = run("grad-check --name contour_dice --pred " + at("prob.mvol") + " --truth " + at("truth.mvol") +
          " --config " + at("cfg.json") + " --samples 100 --h 1e-6");
  CHECK(r.code == 0);
  CHECK(r.out.find("checked=100") != std::string::npos);
  r = run("grad-check --name soft_dice --pred " + at("prob.mvol") + " --truth " + at("truth.mvol") +
          " --tolerance 1e-30");
  CHECK(r.code == 1);
  CHECK(r.err.find("exceeds") != std::string::npos);

  r = run("contour --in " + at("truth.mvol") + " --out " + at("ring.mvol"));
  CHECK(r.code == 0);
  r = run("contour --in " + at("truth.mvol") + " --band 1:1 --out " + at("band.nii"));
  CHECK(r.code == 0);
  CHECK(fs::file_size(at("band.nii")) == 352 + 24 * 24 * 16);
}

TEST_CASE("fit, ablate and report are reproducible") {
  make_phantom();
  spit(at("loss_cfg.json"), R"({"companion": "contour_dice", "t": 0.5})");
  spit(at("opt.json"), R"({"learning_rate": 50, "max_epochs": 8})");
  const std::string fit = "fit --phantom " + at("phantom.json") + " --loss " + at("loss_cfg.json") + " --opt " +
                          at("opt.json") + " --out ";
  REQUIRE(run(fit + at("run1.json")).code == 0);
  REQUIRE(run(fit + at("run2.json")).code == 0);
  CHECK(slurp(at("run1.json")) == slurp(at("run2.json")));
  CHECK(slurp(at("run1.json")).find("timestamp") == std::string::npos);
  REQUIRE(run(fit + at("run3.json") + " --timestamp").code == 0);
  CHECK(slurp(at("run3.json")).find("\"timestamp\"") != std::string::npos);

  spit(at("grid.json"), std::string(R"({"phantoms": [{"name": "small", )") + std::string(kPhantom).substr(1) +
                            R"(], "optimizer": {"learning_rate": 50, "max_epochs": 5}})");
  REQUIRE(run("ablate --grid " + at("grid.json") + " --out " + at("t1.csv")).code == 0);
  REQUIRE(run("ablate --grid " + at("grid.json") + " --out " + at("t2.csv")).code == 0);
  const auto table = slurp(at("t1.csv"));
  CHECK(table == slurp(at("t2.csv")));
  std::istringstream lines(table);
  std::string line;
  std::getline(lines, line);
  CHECK(line == "phantom,loss,t,dice,hausdorff,assd2d,contour_dice,status");
  for (const char* prefix : {"small,DCD,0.5,", "small,DCD,1.0,", "small,DP,0.5,", "small,DP,1.0,"}) {
    std::getline(lines, line);
    CHECK(line.rfind(prefix, 0) == 0);
  }

  auto r = run("report --in " + at("t1.csv") + " --format md");
  CHECK(r.code == 0);
  CHECK(r.out.find("| DCD | 0.5 |") != std::string::npos);
  REQUIRE(run("report --in " + at("t1.csv") + " --format svg --out " + at("a.svg")).code == 0);
  REQUIRE(run("report --in " + at("t1.csv") + " --format svg --out " + at("b.svg")).code == 0);
  CHECK(slurp(at("a.svg")) == slurp(at("b.svg")));
  CHECK(run("report --in " + at("t1.csv") + " --format pdf").code == 2);
}
