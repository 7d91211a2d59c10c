#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "hydronav/evaluation.hpp"
#include "hydronav/fluid.hpp"
#include "hydronav/ppo.hpp"
#include "hydronav/scenario.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hydronav;

#ifndef HYDRONAV_VERSION
#define HYDRONAV_VERSION "dev"
#endif

namespace {

enum ExitCode { kOk = 0, kUsage = 2, kData = 3, kNumerical = 4 };

/// Worker cap: hardware threads, lowered by HYDRONAV_THREADS.
int worker_threads() {
  int n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("HYDRONAV_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1) throw ConfigError("HYDRONAV_THREADS must be a positive integer");
    n = std::min<int>(n, static_cast<int>(v));
  }
  return n;
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

/// Refuse to clobber an existing output unless forced. A forced directory is
/// only cleared when it looks like one of our run directories.
void claim_output(const fs::path& out, bool force, bool directory) {
  if (fs::exists(out)) {
    if (!force) throw ConfigError("refusing to overwrite " + out.string() + " (pass --force)");
    if (directory) {
      if (!fs::is_directory(out)) throw ConfigError(out.string() + " exists and is not a directory");
      if (!fs::is_empty(out) && !fs::exists(out / "manifest.json"))
        throw ConfigError("refusing to clear " + out.string() + ": not a run directory");
      fs::remove_all(out);
    }
  }
  if (directory) {
    fs::create_directories(out);
  } else if (out.has_parent_path()) {
    fs::create_directories(out.parent_path());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path.string());
  f << text;
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

struct Manifest {
  std::string command;
  std::vector<std::string> argv;
  std::uint64_t seed = 0;
  json config = json::object();
  std::vector<std::string> artifacts;
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  std::string started = utc_now();

  void write(const fs::path& dir) const {
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    json j = {{"command", command},   {"argv", argv},           {"seed", seed},
              {"config", config},     {"artifacts", artifacts}, {"version", HYDRONAV_VERSION},
              {"started", started},   {"wall_clock_s", wall}};
    write_text(dir / "manifest.json", j.dump(2) + "\n");
  }
};

/// Archetype name or scenario file.
Scenario resolve_scenario(const std::string& arg) {
  for (const char* a : {"train1", "train2", "train3", "test", "surface"})
    if (arg == a) return archetype_scenario(arg, 0);
  if (!fs::exists(arg)) throw ConfigError("no such scenario file or archetype: " + arg);
  return load_scenario(arg);
}

json plan_json(const CurriculumPlan& plan) {
  json arr = json::array();
  for (const auto& l : plan.lessons)
    arr.push_back({{"name", l.name}, {"scenario", to_json(l.scenario)}, {"budget", l.budget}, {"clip", l.clip},
                   {"lr", l.lr}});
  return arr;
}

// --- gen -------------------------------------------------------------------

struct GenArgs {
  std::string archetype;
  std::uint64_t seed = 0;
  std::string out;
  int segments = 0;
  double segment_length = 0.0;
  std::string current;
  bool force = false;
};

int cmd_gen(const GenArgs& a) {
  Scenario s = archetype_scenario(a.archetype, a.seed);
  s.segments = a.segments;
  s.segment_length = a.segment_length;
  if (!a.current.empty()) s.current.mode = parse_current_mode(a.current);
  // Generate once so an infeasible recipe fails here rather than later.
  build_map(s);
  claim_output(a.out, a.force, false);
  save_scenario(a.out, s);
  std::cout << "wrote " << a.out << "\n";
  return kOk;
}

// --- train -----------------------------------------------------------------

struct TrainArgs {
  std::string plan;
  std::string config;
  std::uint64_t seed = 0;
  std::string out;
  std::string resume;
  bool force = false;
  bool quiet = false;
};

int cmd_train(const TrainArgs& a, Manifest& m) {
  json merged = json::object();
  fs::path base_dir;
  if (a.plan != "standard") {
    merged = read_json(a.plan);
    base_dir = fs::path(a.plan).parent_path();
  }
  if (!a.config.empty()) merged.merge_patch(read_json(a.config));
  const TrainConfig tc = train_config_from_json(merged, base_dir);

  std::optional<Checkpoint> resume;
  if (!a.resume.empty()) resume = load_checkpoint(a.resume);

  claim_output(a.out, a.force, true);
  const fs::path out(a.out);
  m.seed = a.seed;
  m.config = {{"ppo", to_json(tc.ppo)}, {"lessons", plan_json(tc.plan)}};
  if (resume) m.config["resume"] = {{"path", a.resume}, {"timestep", resume->timestep}};
  write_text(out / "config.json", m.config.dump(2) + "\n");

  TrainHooks hooks;
  hooks.on_log = [&](const CurvePoint& c) {
    if (!a.quiet)
      std::cout << "t=" << c.timestep << " lesson=" << c.lesson << " return=" << c.mean_return
                << " success=" << c.success_rate << " collision=" << c.collision_rate << std::endl;
  };
  TrainResult r;
  try {
    r = train(tc.plan, tc.ppo, a.seed, hooks, resume ? &*resume : nullptr);
  } catch (const NumericalError&) {
    m.artifacts = {"config.json"};
    m.write(out);
    throw;
  }

  std::ofstream curve(out / "curve.csv");
  write_curve_csv(curve, r.curve);
  curve.close();
  Checkpoint ck{r.network, static_cast<std::uint64_t>(r.timesteps), static_cast<std::uint32_t>(r.lesson),
                tc.ppo.layout};
  save_checkpoint(out / "policy.ckpt", ck);
  m.artifacts = {"config.json", "curve.csv", "policy.ckpt"};
  m.write(out);
  std::cout << "trained " << r.timesteps << " steps -> " << (out / "policy.ckpt").string() << "\n";
  return kOk;
}

// --- eval ------------------------------------------------------------------

struct EvalArgs {
  std::string policy;
  std::string scenario;
  int episodes = 10;
  bool strict = true;
  std::uint64_t seed = 0;
  std::string out;
  bool vary_maps = false;
  bool terminate_on_collision = false;
  std::string label;
  bool force = false;
};

int cmd_eval(const EvalArgs& a, Manifest& m) {
  const Checkpoint ck = load_checkpoint(a.policy);
  Scenario s = resolve_scenario(a.scenario);
  EvalOptions opt;
  opt.vary_maps = a.vary_maps;
  opt.terminate_on_collision = a.terminate_on_collision;
  opt.base.layout = ck.layout;
  opt.threads = worker_threads();
  if (a.episodes < 1) throw ConfigError("--episodes must be >= 1");

  claim_output(a.out, a.force, true);
  const fs::path out(a.out);
  opt.trace_dir = out / "traces";
  EvalReport r = run_eval(greedy_controller(ck.network, ck.layout), s, a.episodes, a.seed, a.strict, opt);
  r.label = a.label.empty() ? s.source : a.label;

  write_text(out / "report.json", to_json(r, true).dump(2) + "\n");
  std::ofstream csv(out / "report.csv");
  write_report_csv(csv, {r});
  csv.close();
  std::ofstream eps(out / "episodes.csv");
  write_episodes_csv(eps, r);
  eps.close();
  m.seed = a.seed;
  m.config = {{"policy", a.policy},
              {"scenario", to_json(s)},
              {"episodes", a.episodes},
              {"strict", a.strict},
              {"vary_maps", a.vary_maps},
              {"terminate_on_collision", a.terminate_on_collision},
              {"threads", opt.threads}};
  m.artifacts = {"report.json", "report.csv", "episodes.csv", "traces/"};
  m.write(out);
  std::cout << r.label << ": episodes=" << r.episodes << " success=" << r.success_rate
            << " strict=" << r.strict_success_rate << " lenient=" << r.lenient_success_rate
            << " collisions=" << r.collisions_mean << "+-" << r.collisions_sd << " clearance=" << r.avg_clearance
            << "\n";
  return kOk;
}

// --- bench-fluid -----------------------------------------------------------

struct BenchArgs {
  long particles = 10000;
  long steps = 100;
  double cell = 0.05;
  std::string out;
  bool force = false;
};

int cmd_bench(const BenchArgs& a, Manifest& m) {
  if (a.steps < 1) throw ConfigError("--steps must be >= 1");
  if (a.particles < 1) throw ConfigError("--particles must be >= 1");
  FluidParams p;
  FluidState st = make_tank(static_cast<std::size_t>(a.particles), p, a.cell);
  const auto t0 = std::chrono::steady_clock::now();
  for (long i = 0; i < a.steps; ++i) step(st, p);
  const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double rate = static_cast<double>(st.particles.count()) * static_cast<double>(a.steps) / sec;
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(state_hash(st.particles)));
  const json result = {{"particles", st.particles.count()},
                       {"steps", a.steps},
                       {"cell_size", a.cell},
                       {"seconds", sec},
                       {"ms_per_step", 1e3 * sec / static_cast<double>(a.steps)},
                       {"particle_steps_per_s", rate},
                       {"state_hash", hash}};
  if (!a.out.empty()) {
    claim_output(a.out, a.force, true);
    write_text(fs::path(a.out) / "bench.json", result.dump(2) + "\n");
    m.config = {{"particles", a.particles}, {"steps", a.steps}, {"cell_size", a.cell}};
    m.artifacts = {"bench.json"};
    m.write(a.out);
  }
  std::cout << "particles=" << st.particles.count() << " steps=" << a.steps << " seconds=" << sec
            << " particle_steps_per_s=" << rate << " state_hash=" << hash << "\n";
  return kOk;
}

// --- replay ----------------------------------------------------------------

struct ReplayArgs {
  std::string scenario;
  std::string actions;
  std::uint64_t seed = 0;
  double strength = -1.0;
  std::string out;
  bool force = false;
};

/// A JSON array of indices or a JSONL episode trace.
std::vector<int> read_actions(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  if (path.extension() == ".jsonl") {
    std::vector<int> acts;
    for (const auto& rec : read_trace(in)) acts.push_back(rec.action);
    return acts;
  }
  try {
    return json::parse(in).get<std::vector<int>>();
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": expected a JSON array of action indices (" + e.what() + ")");
  }
}

int cmd_replay(const ReplayArgs& a, Manifest& m) {
  Scenario s = resolve_scenario(a.scenario);
  if (a.strength >= 0.0) s.current.strength = a.strength;
  const std::vector<int> actions = read_actions(a.actions);
  claim_output(a.out, a.force, true);
  const fs::path out(a.out);
  const DivergenceResult d = replay_divergence(s, a.seed, actions);

  std::ofstream csv(out / "divergence.csv");
  csv << "step,deviation,collided_with_current,collided_without_current\n";
  char buf[128];
  for (std::size_t t = 0; t < d.deviation.size(); ++t) {
    const bool cw = t > 0 && t - 1 < d.with_current.collisions.size() && d.with_current.collisions[t - 1];
    const bool cs = t > 0 && t - 1 < d.without_current.collisions.size() && d.without_current.collisions[t - 1];
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%d,%d\n", t, d.deviation[t], cw ? 1 : 0, cs ? 1 : 0);
    csv << buf;
  }
  csv.close();
  const json summary = {{"steps", d.deviation.empty() ? 0 : d.deviation.size() - 1},
                        {"collisions_with_current", d.collisions_with_current},
                        {"collisions_without_current", d.collisions_without_current},
                        {"final_deviation", d.final_deviation},
                        {"max_deviation", d.max_deviation}};
  write_text(out / "summary.json", summary.dump(2) + "\n");
  m.seed = a.seed;
  m.config = {{"scenario", to_json(s)}, {"actions", a.actions}, {"action_count", actions.size()}};
  m.artifacts = {"divergence.csv", "summary.json"};
  m.write(out);
  std::cout << "max_deviation=" << d.max_deviation << " collisions_with_current=" << d.collisions_with_current
            << " collisions_without_current=" << d.collisions_without_current << "\n";
  return kOk;
}

// --- play ------------------------------------------------------------------

struct PlayArgs {
  std::string scenario;
  std::string actions;
  std::uint64_t seed = 0;
  std::string out;
  bool force = false;
};

/// Scripted episode under the scenario's own settings, traced step by step.
int cmd_play(const PlayArgs& a, Manifest& m) {
  const Scenario s = resolve_scenario(a.scenario);
  const std::vector<int> actions = read_actions(a.actions);
  claim_output(a.out, a.force, true);
  const fs::path out(a.out);
  Environment env(s);
  env.reset(a.seed);
  std::ofstream trace(out / "trace.jsonl");
  for (const int act : actions) {
    if (env.done()) break;
    const StepResult r = env.step(act);
    write_trace_line(trace, make_trace_record(env.steps(), act, r, env.config().sensor_range));
  }
  trace.close();
  m.seed = a.seed;
  m.config = {{"scenario", to_json(s)}, {"actions", a.actions}};
  m.artifacts = {"trace.jsonl"};
  m.write(out);
  std::cout << "steps=" << env.steps() << " done=" << (env.done() ? 1 : 0) << "\n";
  return kOk;
}

// --- compare ---------------------------------------------------------------

struct CompareArgs {
  std::string label_a = "a", label_b = "b";
  std::vector<std::string> runs_a, runs_b;
  std::string out;
  bool force = false;
};

EvalReport report_from_run(const fs::path& dir) {
  const json j = read_json(dir / "report.json");
  try {
    EvalReport r;
    r.label = j.at("label").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.strict = j.at("strict").get<bool>();
    r.episodes = j.at("episodes").get<int>();
    r.success_rate = j.at("success_rate").get<double>();
    r.strict_success_rate = j.at("strict_success_rate").get<double>();
    r.lenient_success_rate = j.at("lenient_success_rate").get<double>();
    r.collisions_mean = j.at("collisions_mean").get<double>();
    r.collisions_sd = j.at("collisions_sd").get<double>();
    r.avg_clearance = j.at("avg_clearance").get<double>();
    r.avg_sensor_clearance = j.at("avg_sensor_clearance").get<double>();
    r.mean_return = j.at("mean_return").get<double>();
    r.total_steps = j.at("total_steps").get<std::int64_t>();
    return r;
  } catch (const json::exception& e) {
    throw DataError((dir / "report.json").string() + ": " + e.what());
  }
}

int cmd_compare(const CompareArgs& a, Manifest& m) {
  std::vector<EvalReport> ra, rb;
  for (const auto& d : a.runs_a) ra.push_back(report_from_run(d));
  for (const auto& d : a.runs_b) rb.push_back(report_from_run(d));
  const Comparison c = compare(a.label_a, ra, a.label_b, rb);
  claim_output(a.out, a.force, true);
  const fs::path out(a.out);
  std::ofstream csv(out / "comparison.csv");
  write_comparison_csv(csv, c);
  csv.close();
  auto sign = [](const SignTest& s) {
    json j = {{"a_better", s.a_better}, {"b_better", s.b_better}, {"ties", s.ties},
              {"mean_difference", s.mean_difference}};
    j["p_value"] = s.p_value ? json(*s.p_value) : json(nullptr);
    return j;
  };
  const json summary = {{"label_a", c.label_a},
                        {"label_b", c.label_b},
                        {"seeds", c.rows.size()},
                        {"collisions", sign(c.collisions)},
                        {"clearance", sign(c.clearance)}};
  write_text(out / "comparison.json", summary.dump(2) + "\n");
  m.config = {{"label_a", a.label_a}, {"runs_a", a.runs_a}, {"label_b", a.label_b}, {"runs_b", a.runs_b}};
  m.artifacts = {"comparison.csv", "comparison.json"};
  m.write(out);
  std::cout << summary.dump(2) << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Aquatic navigation benchmark: worlds, training, evaluation"};
  app.set_version_flag("--version", std::string(HYDRONAV_VERSION));
  app.require_subcommand(1);

  Manifest manifest;
  manifest.argv.assign(argv, argv + argc);

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Write a scenario file for a generated world");
  g->add_option("--archetype", gen.archetype, "train1 | train2 | train3 | test | surface")->required();
  g->add_option("--seed", gen.seed, "World seed");
  g->add_option("--out", gen.out, "Scenario JSON path")->required();
  g->add_option("--segments", gen.segments, "Override the archetype's segment count");
  g->add_option("--segment-length", gen.segment_length, "Override the archetype's segment length (m)");
  g->add_option("--current", gen.current, "none | procedural | mpm");
  g->add_flag("--force", gen.force, "Overwrite an existing file");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train a PPO policy over a lesson plan");
  t->add_option("--plan", tr.plan, "Training plan JSON, or 'standard'")->required();
  t->add_option("--config", tr.config, "JSON merged over the plan (e.g. a ppo block)");
  t->add_option("--seed", tr.seed, "Training seed");
  t->add_option("--out", tr.out, "Run directory")->required();
  t->add_option("--resume", tr.resume, "Continue from a checkpoint");
  t->add_flag("--force", tr.force, "Replace an existing run directory");
  t->add_flag("--quiet", tr.quiet, "No progress output");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Greedy evaluation of a checkpoint");
  e->add_option("--policy", ev.policy, "Checkpoint file")->required();
  e->add_option("--scenario", ev.scenario, "Scenario file or archetype name")->required();
  e->add_option("--episodes", ev.episodes, "Number of episodes");
  e->add_flag("--strict,!--lenient", ev.strict, "Count any collision as failure (default)");
  e->add_option("--seed", ev.seed, "Evaluation seed");
  e->add_option("--out", ev.out, "Run directory")->required();
  e->add_flag("--vary-maps", ev.vary_maps, "New generated map per episode");
  e->add_flag("--terminate-on-collision", ev.terminate_on_collision, "End episodes at the first contact");
  e->add_option("--label", ev.label, "Report label");
  e->add_flag("--force", ev.force, "Replace an existing run directory");

  BenchArgs be;
  auto* b = app.add_subcommand("bench-fluid", "Fluid solver throughput");
  b->add_option("--particles", be.particles, "Approximate particle count");
  b->add_option("--steps", be.steps, "Solver steps");
  b->add_option("--cell", be.cell, "Grid cell size (m)");
  b->add_option("--out", be.out, "Optional run directory");
  b->add_flag("--force", be.force, "Replace an existing run directory");

  ReplayArgs rp;
  auto* r = app.add_subcommand("replay", "Open-loop replay with and without the current");
  r->add_option("--scenario", rp.scenario, "Scenario file or archetype name")->required();
  r->add_option("--actions", rp.actions, "JSON array of actions or a JSONL episode trace")->required();
  r->add_option("--seed", rp.seed, "Reset seed of the recorded episode");
  r->add_option("--strength", rp.strength, "Override the current strength");
  r->add_option("--out", rp.out, "Run directory")->required();
  r->add_flag("--force", rp.force, "Replace an existing run directory");

  PlayArgs pl;
  auto* p = app.add_subcommand("play", "Run a scripted action file and write its trace");
  p->add_option("--scenario", pl.scenario, "Scenario file or archetype name")->required();
  p->add_option("--actions", pl.actions, "JSON array of actions or a JSONL episode trace")->required();
  p->add_option("--seed", pl.seed, "Reset seed");
  p->add_option("--out", pl.out, "Run directory")->required();
  p->add_flag("--force", pl.force, "Replace an existing run directory");

  CompareArgs cp;
  auto* c = app.add_subcommand("compare", "Paired per-seed comparison of two sets of eval runs");
  c->add_option("--label-a", cp.label_a, "Name of condition a");
  c->add_option("--a", cp.runs_a, "Eval run directories for condition a")->required();
  c->add_option("--label-b", cp.label_b, "Name of condition b");
  c->add_option("--b", cp.runs_b, "Eval run directories for condition b")->required();
  c->add_option("--out", cp.out, "Run directory")->required();
  c->add_flag("--force", cp.force, "Replace an existing run directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (g->parsed()) return cmd_gen(gen);
    manifest.command = app.get_subcommands().front()->get_name();
    if (t->parsed()) return cmd_train(tr, manifest);
    if (e->parsed()) return cmd_eval(ev, manifest);
    if (b->parsed()) return cmd_bench(be, manifest);
    if (r->parsed()) return cmd_replay(rp, manifest);
    if (p->parsed()) return cmd_play(pl, manifest);
    if (c->parsed()) return cmd_compare(cp, manifest);
  } catch (const DataError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kData;
  } catch (const NumericalError& err) {
    std::cerr << "numerical failure: " << err.what() << "\n";
    return kNumerical;
  } catch (const DomainEscapeError& err) {
    std::cerr << "numerical failure: " << err.what() << "\n";
    return kNumerical;
  } catch (const Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kUsage;
  } catch (const fs::filesystem_error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kData;
  }
  return kUsage;
}
