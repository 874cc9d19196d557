#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <iterator>

#include "foilmetric/cli.hpp"
#include "foilmetric/error.hpp"
#include "foilmetric/image_io.hpp"
#include "tmpdir.hpp"

using namespace foilmetric;
namespace fs = std::filesystem;

namespace {

int call(std::vector<std::string> args) {
  args.insert(args.begin(), "foilmetric");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return cli::run(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

const char* const kArtifacts[] = {".pred.pgm",       ".pred.mask.json",  ".cells.csv",
                                  ".stats.json",     ".overlay.png",     ".line1.dx.svg",
                                  ".line4.area.svg", ".verdict.json"};

}  // namespace

TEST_CASE("run configuration from JSON") {
  const auto j = nlohmann::json::parse(R"({
    "input": "a.png", "output": "out/a", "k_sample": 12, "seed": 5, "threshold": 0.2,
    "orientation": "horizontal", "px_per_unit": 2.5,
    "preproc": {"gauss_sigma": 0.5, "gradients": true, "dilation_direction": "east-west"},
    "native": {"polarity": "bright", "grow_px": 0, "exclude_border_cells": true}})");
  const cli::RunConfig c = cli::run_config_from_json(j);
  CHECK(c.inputs == std::vector<std::string>{"a.png"});
  CHECK(c.output == "out/a");
  CHECK(c.k_sample == 12);
  CHECK(c.seed == 5);
  CHECK(c.threshold == 0.2);
  CHECK(c.orientation == stats::Orientation::Horizontal);
  CHECK(*c.px_per_unit == 2.5);
  CHECK(c.preproc.gauss_sigma == 0.5);
  CHECK(c.preproc.gradients);
  CHECK(c.native_config().preproc.gauss_sigma == 0.5);
  CHECK(c.native.grow_px == 0);
  CHECK(c.native.exclude_border_cells);
  CHECK(c.n_lines == 4);

  const cli::RunConfig d = cli::run_config_from_json(nlohmann::json::object());
  CHECK(d.preproc.gauss_sigma == 1.0);
  CHECK(d.threshold == 0.10);
  CHECK(d.k_sample == 10);
  CHECK(d.backend == "native");

  CHECK_THROWS_AS(cli::run_config_from_json(nlohmann::json::parse(R"({"sigma": 1})")),
                  ValidationError);
  CHECK_THROWS_AS(cli::run_config_from_json(nlohmann::json::parse(R"({"preproc": {"sigma": 1}})")),
                  ValidationError);
  CHECK_THROWS_AS(cli::run_config_from_json(nlohmann::json::parse(R"({"k_sample": "ten"})")),
                  ValidationError);
  CHECK_THROWS_AS(cli::run_config_from_json(nlohmann::json::parse("[1]")), ValidationError);

  TempDir dir;
  std::ofstream(dir / "bad.json") << "{ nope";
  CHECK_THROWS_AS(cli::load_run_config(dir / "bad.json"), ValidationError);
  const auto round = cli::run_config_from_json(nlohmann::json::parse(cli::to_json(c).dump()));
  CHECK(cli::to_json(round) == cli::to_json(c));
}

TEST_CASE("exit codes") {
  TempDir dir;
  CHECK(call({"pipeline", "--in", dir / "missing.png", "--out", dir / "x"}) == 2);
  CHECK(call({"generate", "--out", dir / "f", "--width", "200", "--height", "200"}) == 0);
  CHECK(call({"segment", "--in", dir / "f.png", "--out", dir / "m.pgm", "--backend",
              "external"}) == 2);
  CHECK(call({"segment", "--in", dir / "f.png", "--out", dir / "m.pgm", "--bogus"}) == 2);
  CHECK(call({"segment", "--in", dir / "f.png", "--out", dir / "m.pgm", "--grow", "-1"}) == 2);
  CHECK(call({"--help"}) == 0);
  CHECK(call({}) == 2);
  CHECK(cli::exit_code_for(SegmentationError("x")) == 3);
  CHECK(cli::exit_code_for(IoError("x")) == 2);
  CHECK(cli::exit_code_for(std::runtime_error("x")) == 2);
}

TEST_CASE("flags override the configuration file") {
  TempDir dir;
  REQUIRE(call({"generate", "--out", dir / "f", "--width", "160", "--height", "160"}) == 0);
  std::ofstream(dir / "c.json") << R"({"preproc": {"gauss_sigma": 2.0}})";
  REQUIRE(call({"preprocess", "--config", dir / "c.json", "--in", dir / "f.png", "--out",
                dir / "a.pgm"}) == 0);
  REQUIRE(call({"preprocess", "--sigma", "2", "--in", dir / "f.png", "--out", dir / "b.pgm"}) == 0);
  REQUIRE(call({"preprocess", "--config", dir / "c.json", "--sigma", "0", "--in", dir / "f.png",
                "--out", dir / "c.pgm"}) == 0);
  REQUIRE(call({"preprocess", "--sigma", "0", "--in", dir / "f.png", "--out", dir / "d.pgm"}) == 0);
  CHECK(slurp(dir / "a.pgm") == slurp(dir / "b.pgm"));
  CHECK(slurp(dir / "c.pgm") == slurp(dir / "d.pgm"));
  CHECK(slurp(dir / "a.pgm") != slurp(dir / "c.pgm"));
}

TEST_CASE("generate then pipeline reproduces the lattice") {
  TempDir dir;
  REQUIRE(call({"generate", "--out", dir / "foil"}) == 0);
  CHECK(fs::exists(dir / "foil.png"));
  CHECK(fs::exists(dir / "foil.truth.pgm"));
  CHECK(fs::exists(dir / "foil.truth.mask.json"));
  REQUIRE(call({"pipeline", "--in", dir / "foil.png", "--out", dir / "run", "--truth",
                dir / "foil.truth.pgm"}) == 0);
  for (const char* a : kArtifacts) CHECK_MESSAGE(fs::exists(dir / ("run" + std::string(a))), a);
  const auto v = nlohmann::json::parse(slurp(dir / "run.verdict.json"));
  CHECK(v.at("success") == true);
  CHECK(v.at("true_dx").get<double>() == doctest::Approx(48.0));
  CHECK(v.at("rel_err_dx").get<double>() < 0.10);
  CHECK(v.at("rel_err_dy").get<double>() < 0.10);
  const auto truth = cli::load_truth(dir / "foil.truth.pgm");
  CHECK(truth.true_dy == doctest::Approx(48.0));
}

TEST_CASE("pipeline equals its subcommands") {
  TempDir dir;
  REQUIRE(call({"generate", "--out", dir / "foil", "--dy", "120", "--sigma", "2"}) == 0);
  REQUIRE(call({"pipeline", "--in", dir / "foil.png", "--out", dir / "p", "--truth",
                dir / "foil.truth.pgm"}) == 0);
  REQUIRE(call({"segment", "--in", dir / "foil.png", "--out", dir / "s.pred.pgm"}) == 0);
  REQUIRE(call({"measure", "--mask", dir / "s.pred.pgm", "--out", dir / "s.cells.csv"}) == 0);
  REQUIRE(call({"stats", "--mask", dir / "s.pred.pgm", "--out", dir / "s"}) == 0);
  REQUIRE(call({"overlay", "--in", dir / "foil.png", "--mask", dir / "s.pred.pgm", "--out",
                dir / "s.overlay.png"}) == 0);
  REQUIRE(call({"eval", "--mask", dir / "s.pred.pgm", "--truth", dir / "foil.truth.pgm", "--out",
                dir / "s.verdict.json"}) == 0);
  for (const char* a : kArtifacts) {
    CHECK_MESSAGE(slurp(dir / ("p" + std::string(a))) == slurp(dir / ("s" + std::string(a))), a);
  }
}

TEST_CASE("batch over a glob with a thread cap") {
  TempDir dir;
  fs::create_directories(dir / "in");
  REQUIRE(call({"generate", "--out", dir / "in/a", "--seed", "1"}) == 0);
  REQUIRE(call({"generate", "--out", dir / "in/b", "--seed", "2", "--dx", "120"}) == 0);
  REQUIRE(call({"generate", "--out", dir / "in/c", "--seed", "3", "--dy", "120"}) == 0);
  CHECK(cli::expand_inputs({dir / "in/*.png"}) ==
        std::vector<std::string>{dir / "in/a.png", dir / "in/b.png", dir / "in/c.png"});
  CHECK_THROWS_AS(cli::expand_inputs({dir / "in/*.tif"}), ValidationError);

  ::setenv("FOILMETRIC_THREADS", "2", 1);
  CHECK(cli::thread_cap() == 2);
  REQUIRE(call({"pipeline", "--in", dir / "in/*.png", "--out", dir / "batch", "--truth", "auto"}) ==
          0);
  ::setenv("FOILMETRIC_THREADS", "zero", 1);
  CHECK_THROWS_AS(cli::thread_cap(), ValidationError);
  ::unsetenv("FOILMETRIC_THREADS");

  for (const char* stem : {"a", "b", "c"}) {
    REQUIRE(call({"pipeline", "--in", dir / ("in/" + std::string(stem) + ".png"), "--out",
                  dir / stem, "--truth", "auto"}) == 0);
    for (const char* a : kArtifacts) {
      CHECK(slurp(dir / ("batch/" + std::string(stem) + a)) == slurp(dir / (stem + std::string(a))));
    }
  }
  CHECK(call({"pipeline", "--in", dir / "in/*.png", "--out", dir / "x", "--truth",
              dir / "in/a.truth.pgm"}) == 2);
}

TEST_CASE("external masks through the pipeline") {
  TempDir dir;
  REQUIRE(call({"generate", "--out", dir / "foil"}) == 0);
  REQUIRE(call({"pipeline", "--in", dir / "foil.png", "--out", dir / "ext", "--backend",
                "external", "--mask", dir / "foil.truth.pgm", "--truth",
                dir / "foil.truth.pgm"}) == 0);
  const auto v = nlohmann::json::parse(slurp(dir / "ext.verdict.json"));
  CHECK(v.at("rel_err_dx").get<double>() == 0.0);
  const auto side = nlohmann::json::parse(slurp(dir / "ext.pred.mask.json"));
  CHECK(side.at("backend_name") == "foilgen");

  REQUIRE(call({"generate", "--out", dir / "small", "--width", "200", "--height", "100"}) == 0);
  CHECK(call({"pipeline", "--in", dir / "foil.png", "--out", dir / "bad", "--backend", "external",
              "--mask", dir / "small.truth.pgm"}) == 3);
}
