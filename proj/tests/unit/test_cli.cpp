#include <cstdlib>
#include <sys/wait.h>

#include "doctest.h"
#include "support.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int status = -1;
  std::string err;
};

Run sls_cli(const std::string& args, const fs::path& scratch) {
  const fs::path err = scratch / "stderr.txt";
  const std::string cmd = std::string("\"") + SLS_CLI_PATH + "\" " + args + " >/dev/null 2>\"" + err.string() + "\"";
  const int raw = std::system(cmd.c_str());
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, sls::test::read_file(err)};
}

std::string data(const char* name) { return std::string(SLS_DATA_DIR) + "/" + name; }

std::size_t count_pgm(const fs::path& dir) {
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(dir)) n += e.path().extension() == ".pgm";
  return n;
}

}  // namespace

TEST_CASE("help and bad arguments") {
  const auto dir = sls::test::scratch_dir("cli_args");
  CHECK(sls_cli("--help", dir).status == 0);
  CHECK(sls_cli("", dir).status == 2);
  CHECK(sls_cli("patterns --res banana --out " + (dir / "p").string(), dir).status == 2);
  CHECK(sls_cli("frobnicate", dir).status == 2);
}

TEST_CASE("patterns at 1024x768") {
  const auto dir = sls::test::scratch_dir("cli_patterns");
  REQUIRE(sls_cli("patterns --res 1024x768 --out " + (dir / "p").string(), dir).status == 0);
  CHECK(count_pgm(dir / "p") == 42);
  CHECK(fs::exists(dir / "p" / "sequence.json"));
}

TEST_CASE("truncated acquisition fails to decode") {
  const auto dir = sls::test::scratch_dir("cli_truncated");
  const auto acq = dir / "acq";
  REQUIRE(sls_cli("simulate --scene " + data("scene_plane.json") + " --out " + acq.string(), dir).status == 0);
  fs::remove(acq / "cam0" / "img_29.pgm");
  const Run r = sls_cli("decode --acq " + acq.string() + " --out " + (dir / "dec").string(), dir);
  CHECK(r.status == 2);
  CHECK(r.err.find("error: code=invalid-argument") != std::string::npos);
  CHECK(r.err.find("stack length 29") != std::string::npos);
}

TEST_CASE("locked output directory") {
  const auto dir = sls::test::scratch_dir("cli_lock");
  fs::create_directories(dir / "out");
  std::ofstream(dir / "out" / ".sls.lock") << "held";
  const Run r = sls_cli("patterns --out " + (dir / "out").string(), dir);
  CHECK(r.status == 6);
  CHECK(r.err.find("code=lock-held") != std::string::npos);
  CHECK(fs::exists(dir / "out" / ".sls.lock"));
}

TEST_CASE("missing input and malformed files") {
  const auto dir = sls::test::scratch_dir("cli_inputs");
  std::ofstream(dir / "bad.json") << "{ nope";
  CHECK(sls_cli("simulate --scene " + (dir / "bad.json").string() + " --out " + (dir / "a").string(), dir).status == 4);
  CHECK(sls_cli("simulate --scene " + (dir / "none.json").string() + " --out " + (dir / "a").string(), dir).status == 2);
}

TEST_CASE("pipeline matches individual stages and is deterministic") {
  const auto dir = sls::test::scratch_dir("cli_pipeline");
  const std::string eval_args = " --measure 24,64,104,64 --patch 64,64,1,1";
  const std::string scene = data("scene_plane.json");
  REQUIRE(sls_cli("pipeline --scene " + scene + " --noise 4 --seed 9" + eval_args + " --out " + (dir / "a").string(), dir)
              .status == 0);
  REQUIRE(sls_cli("pipeline --scene " + scene + " --noise 4 --seed 9" + eval_args + " --out " + (dir / "b").string(), dir)
              .status == 0);
  for (const char* f : {"cloud.ply", "mesh.ply", "report.json", "acquisition/cam1/img_17.pgm"})
    CHECK_MESSAGE(sls::test::read_file(dir / "a" / f) == sls::test::read_file(dir / "b" / f), f);

  const fs::path s = dir / "s";
  REQUIRE(sls_cli("patterns --out " + (s / "patterns").string(), dir).status == 0);
  REQUIRE(sls_cli("simulate --scene " + scene + " --patterns " + (s / "patterns").string() +
                      " --noise 4 --seed 9 --out " + (s / "acquisition").string(),
                  dir)
              .status == 0);
  REQUIRE(sls_cli("decode --acq " + (s / "acquisition").string() + " --out " + (s / "decode").string(), dir).status == 0);
  REQUIRE(sls_cli("reconstruct --decode " + (s / "decode").string() + " --acq " + (s / "acquisition").string() +
                      " --out " + (s / "cloud.ply").string(),
                  dir)
              .status == 0);
  REQUIRE(sls_cli("mesh --cloud " + (s / "cloud.ply").string() + " --out " + (s / "mesh.ply").string(), dir).status == 0);
  REQUIRE(sls_cli("eval --cloud " + (s / "cloud.ply").string() + " --mesh " + (s / "mesh.ply").string() + " --scene " +
                      scene + " --seed 9" + eval_args + " --out " + s.string(),
                  dir)
              .status == 0);
  for (const char* f : {"decode/correspondences.bin", "cloud.ply", "cloud.idx", "mesh.ply", "report.json"})
    CHECK_MESSAGE(sls::test::read_file(dir / "a" / f) == sls::test::read_file(s / f), f);
}
