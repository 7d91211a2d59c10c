#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hydronav/scenario.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kWork = fs::temp_directory_path() / "hydronav_cli_test";

struct Run {
  int code;
  std::string out;
};

Run run(const std::string& args) {
  const fs::path log = kWork / "last.log";
  const std::string cmd = std::string(HYDRONAV_CLI) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

std::string path(const fs::path& p) { return "'" + p.string() + "'"; }

std::string config(const char* name) { return path(fs::path(HYDRONAV_CONFIG_DIR) / name); }

int count_lines(const fs::path& p) {
  std::ifstream in(p);
  int n = 0;
  for (std::string line; std::getline(in, line);) n += !line.empty();
  return n;
}

double bench_rate(const std::string& args) {
  const Run r = run("bench-fluid " + args);
  REQUIRE(r.code == 0);
  std::smatch m;
  REQUIRE(std::regex_search(r.out, m, std::regex("particle_steps_per_s=([0-9.e+]+)")));
  return std::stod(m[1]);
}

/// One shared smoke training run.
const fs::path& smoke_run() {
  static const fs::path dir = [] {
    const fs::path d = kWork / "smoke";
    const Run r = run("train --plan " + config("smoke.json") + " --seed 3 --quiet --out " + path(d));
    REQUIRE_MESSAGE(r.code == 0, r.out);
    return d;
  }();
  return dir;
}

struct Setup {
  Setup() {
    fs::remove_all(kWork);
    fs::create_directories(kWork);
  }
};
const Setup setup;

}  // namespace

TEST_CASE("gen writes valid, reproducible scenario files") {
  REQUIRE(run("gen --archetype train1 --seed 7 --out " + path(kWork / "a.json")).code == 0);
  REQUIRE(run("gen --archetype train1 --seed 7 --out " + path(kWork / "b.json")).code == 0);
  CHECK(slurp(kWork / "a.json") == slurp(kWork / "b.json"));
  CHECK(hydronav::validate_scenario(json::parse(slurp(kWork / "a.json"))).empty());
  // Existing files are not overwritten without --force.
  CHECK(run("gen --archetype train1 --seed 8 --out " + path(kWork / "a.json")).code == 2);
  CHECK(run("gen --archetype train1 --seed 8 --force --out " + path(kWork / "a.json")).code == 0);
}

TEST_CASE("gen rejects unknown archetypes") {
  const Run r = run("gen --archetype cave9 --seed 1 --out " + path(kWork / "c.json"));
  CHECK(r.code == 2);
  CHECK(r.out.find("unknown archetype") != std::string::npos);
  CHECK_FALSE(fs::exists(kWork / "c.json"));
}

TEST_CASE("usage errors exit with 2") {
  CHECK(run("").code == 2);
  CHECK(run("frobnicate").code == 2);
  CHECK(run("gen --seed 1").code == 2);
}

TEST_CASE("train with a missing plan exits with 2") {
  CHECK(run("train --plan " + path(kWork / "nope.json") + " --out " + path(kWork / "t0")).code == 2);
}

TEST_CASE("smoke training writes a curve, checkpoint and manifest") {
  const fs::path& d = smoke_run();
  CHECK(count_lines(d / "curve.csv") >= 6);
  CHECK(fs::exists(d / "policy.ckpt"));
  const json m = json::parse(slurp(d / "manifest.json"));
  CHECK(m["command"] == "train");
  CHECK(m["seed"] == 3);
  CHECK(m.contains("version"));
  CHECK(m.contains("wall_clock_s"));
  CHECK(slurp(d / "curve.csv").rfind("timestep,mean_return,success_rate,collision_rate", 0) == 0);
}

TEST_CASE("identical seeds give identical curves") {
  const fs::path d = kWork / "smoke_again";
  REQUIRE(run("train --plan " + config("smoke.json") + " --seed 3 --quiet --out " + path(d)).code == 0);
  CHECK(slurp(d / "curve.csv") == slurp(smoke_run() / "curve.csv"));
  CHECK(slurp(d / "policy.ckpt") == slurp(smoke_run() / "policy.ckpt"));
}

TEST_CASE("resume continues from the saved timestep") {
  const fs::path overlay = kWork / "longer.json";
  std::ofstream(overlay) << R"({"lessons": [{"name": "smoke", "scenario": "train1", "segments": 1,
                                             "segment_length": 2.5, "max_steps": 200, "budget": 8000}]})";
  const fs::path d = kWork / "resumed";
  const Run r = run("train --plan " + config("smoke.json") + " --config " + path(overlay) + " --seed 3 --quiet --resume " +
                    path(smoke_run() / "policy.ckpt") + " --out " + path(d));
  REQUIRE_MESSAGE(r.code == 0, r.out);
  std::ifstream in(d / "curve.csv");
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  CHECK(std::stol(line.substr(0, line.find(','))) > 5000);
  CHECK(json::parse(slurp(d / "config.json"))["resume"]["timestep"] == 5000);
}

TEST_CASE("eval reports, traces and overwrite protection") {
  const std::string base = "eval --policy " + path(smoke_run() / "policy.ckpt") + " --scenario train1 --episodes 10 --seed 4";
  const fs::path strict = kWork / "eval_strict", lenient = kWork / "eval_lenient";
  REQUIRE(run(base + " --out " + path(strict)).code == 0);
  REQUIRE(run(base + " --lenient --out " + path(lenient)).code == 0);
  const json rs = json::parse(slurp(strict / "report.json"));
  const json rl = json::parse(slurp(lenient / "report.json"));
  CHECK(rs["episodes"] == 10);
  CHECK(rs["episodes_detail"].size() == 10);
  CHECK(rs["success_rate"].get<double>() <= rl["success_rate"].get<double>());
  int traces = 0;
  for (const auto& e : fs::directory_iterator(strict / "traces")) traces += e.path().extension() == ".jsonl";
  CHECK(traces == 10);
  CHECK(fs::exists(strict / "report.csv"));
  CHECK(fs::exists(strict / "episodes.csv"));

  CHECK(run(base + " --out " + path(strict)).code == 2);
  CHECK(run(base + " --force --out " + path(strict)).code == 0);

  const fs::path cmp = kWork / "cmp";
  const Run c = run("compare --label-a strict --a " + path(strict) + " --label-b lenient --b " + path(lenient) +
                    " --out " + path(cmp));
  CHECK_MESSAGE(c.code == 0, c.out);
  CHECK(fs::exists(cmp / "comparison.csv"));
}

TEST_CASE("corrupt checkpoints exit with 3") {
  const std::string bytes = slurp(smoke_run() / "policy.ckpt");
  std::ofstream(kWork / "bad.ckpt", std::ios::binary) << bytes.substr(0, bytes.size() / 2);
  CHECK(run("eval --policy " + path(kWork / "bad.ckpt") + " --scenario train1 --out " + path(kWork / "e_bad")).code == 3);
}

TEST_CASE("replay and play subcommands") {
  REQUIRE(run("gen --archetype train3 --seed 2 --out " + path(kWork / "t3.json")).code == 0);
  std::ofstream(kWork / "acts.json") << "[1,1,1,2,2,1,1,3,3,1,0,0,1,1,1,1]";
  const fs::path rp = kWork / "replay";
  REQUIRE(run("replay --scenario " + path(kWork / "t3.json") + " --actions " + path(kWork / "acts.json") +
              " --seed 1 --out " + path(rp))
              .code == 0);
  CHECK(count_lines(rp / "divergence.csv") == 18);
  const fs::path pl = kWork / "play";
  REQUIRE(run("play --scenario " + path(kWork / "t3.json") + " --actions " + path(kWork / "acts.json") +
              " --seed 1 --out " + path(pl))
              .code == 0);
  CHECK(count_lines(pl / "trace.jsonl") == 16);
  // Traces are accepted as action input too.
  CHECK(run("replay --scenario " + path(kWork / "t3.json") + " --actions " + path(pl / "trace.jsonl") +
            " --seed 1 --out " + path(kWork / "replay2"))
            .code == 0);
  CHECK(slurp(kWork / "replay2" / "divergence.csv") == slurp(rp / "divergence.csv"));
}

TEST_CASE("bench-fluid validation, determinism and scaling") {
  CHECK(run("bench-fluid --steps 0").code == 2);
  const Run a = run("bench-fluid --particles 1000 --steps 20");
  const Run b = run("bench-fluid --particles 1000 --steps 20");
  REQUIRE(a.code == 0);
  std::smatch ma, mb;
  REQUIRE(std::regex_search(a.out, ma, std::regex("state_hash=([0-9a-f]+)")));
  REQUIRE(std::regex_search(b.out, mb, std::regex("state_hash=([0-9a-f]+)")));
  CHECK(ma[1] == mb[1]);

  // Throughput per particle-step holds within 25% from 1k to 10k particles.
  const double small = bench_rate("--particles 1000 --steps 300");
  const double large = bench_rate("--particles 10000 --steps 30");
  CHECK(large >= 0.75 * small);
  CHECK(large <= 1.25 * small);
}
