// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fail.
// Pass criterion names as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "hydronav/cave.hpp"
#include "hydronav/env.hpp"
#include "hydronav/evaluation.hpp"
#include "hydronav/fluid.hpp"
#include "hydronav/ppo.hpp"

using namespace hydronav;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

TrainConfig load_config(const char* name) { return load_train_config(fs::path(HYDRONAV_CONFIG_DIR) / name); }

Scenario mini_train1(std::uint64_t seed) {
  Scenario s = archetype_scenario("train1", seed);
  s.segments = 1;
  s.segment_length = 2.5;
  return s;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Follows the panel chain: turn toward the next panel, match its depth,
/// otherwise thrust. Aims one panel ahead once the target is close.
int follow_chain(const Environment& env, DistanceRewarder& progress) {
  const VehicleState& v = env.vehicle();
  progress.update(v.position);
  const auto& pts = env.map().panels.points();
  std::size_t k = progress.target();
  if (k + 1 < pts.size() && (pts[k] - v.position).norm() < 1.5) ++k;
  const Vec3 d = pts[k] - v.position;
  const double err = std::remainder(std::atan2(-d.z(), d.x()) - v.yaw, 2.0 * kPi);
  if (err > 0.25) return 2;
  if (err < -0.25) return 3;
  if (d.y() > 0.4) return 4;
  if (d.y() < -0.4) return 5;
  return 1;
}

/// Panel points pushed sideways (left of the chain) until the wall gap is `gap`.
std::vector<Vec3> hug_targets(const CaveMap& map, double radius, double gap) {
  const auto& pts = map.panels.points();
  std::vector<Vec3> out;
  for (std::size_t j = 0; j < pts.size(); ++j) {
    const Vec3 t = j + 1 < pts.size() ? pts[j + 1] - pts[j] : pts[j] - pts[j - 1];
    const Vec3 side = Vec3(t.z(), 0.0, -t.x()).normalized();
    Vec3 p = pts[j];
    while (map.signed_distance(p + 0.02 * side) > radius + gap) p += 0.02 * side;
    out.push_back(p);
  }
  return out;
}

/// Steers through `targets` in order, moving on when within `reach`.
struct TargetFollower {
  std::vector<Vec3> targets;
  double reach = 0.5;
  std::size_t k = 0;

  int act(const VehicleState& v) {
    while (k + 1 < targets.size() && (targets[k] - v.position).norm() < reach) ++k;
    const Vec3 d = targets[k] - v.position;
    const double err = std::remainder(std::atan2(-d.z(), d.x()) - v.yaw, 2.0 * kPi);
    if (err > 0.2) return 2;
    if (err < -0.2) return 3;
    if (d.y() > 0.3) return 4;
    if (d.y() < -0.3) return 5;
    return 1;
  }
};

// --- fluid -----------------------------------------------------------------

Outcome fluid_conservation() {
  const auto t0 = std::chrono::steady_clock::now();
  FluidParams p;
  FluidState st = make_tank(10000, p);
  const double m0 = st.particles.total_mass();
  double worst_grid = 0.0;
  bool mass_exact = true;
  for (int i = 0; i < 1000; ++i) {
    step(st, p);
    mass_exact = mass_exact && st.particles.total_mass() == m0;
    worst_grid = std::max(worst_grid, std::abs(st.grid.total_mass() - m0) / m0);
  }
  const double run_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  // Transfer round trip on the settled state and on a randomly stirred one.
  FluidParams quiet = p;
  quiet.gravity = Vec3::Zero();
  quiet.box_walls = false;
  quiet.stiffness = 0.0;
  double worst_rt = 0.0;
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 0.3);
  for (int trial = 0; trial < 2; ++trial) {
    FluidState s = st;
    if (trial == 1)
      for (auto& v : s.particles.velocities) v = Vec3(n(rng), n(rng), n(rng));
    const Vec3 before = s.particles.total_momentum();
    p2g(s.particles, s.grid, quiet);
    grid_update(s.grid, nullptr, quiet);
    g2p(s.grid, s.particles, quiet);
    worst_rt = std::max(worst_rt, (s.particles.total_momentum() - before).norm() / before.norm());
  }
  const bool pass = mass_exact && worst_grid <= 1e-12 && worst_rt <= 1e-9 && run_s < 120.0;
  return {pass, fmt("%zu particles x 1000 steps in %.1f s; particle mass drift %s; grid mass rel err %.2e; "
                    "p2g->g2p momentum rel err %.2e (<= 1e-9)",
                    st.particles.count(), run_s, mass_exact ? "0" : "NONZERO", worst_grid, worst_rt)};
}

Outcome fluid_free_fall() {
  FluidParams p;
  p.dt = 0.01;
  p.box_walls = false;
  FluidState st;
  st.grid = MacGrid(Vec3::Zero(), 0.5, {8, 24, 8});
  st.particles.add(Vec3(2.0, 11.0, 2.0), Vec3::Zero(), 1.0, 1e-3);
  for (int i = 0; i < 100; ++i) step(st, p);
  const double err = std::abs(st.particles.velocities[0].norm() - 9.81);
  return {err <= 1e-6, fmt("speed after 1 s = %.12f (|err| %.2e <= 1e-6)", st.particles.velocities[0].norm(), err)};
}

// --- rewards ---------------------------------------------------------------

/// Panel progress recomputed from scratch for the oracle.
struct OracleProgress {
  const std::vector<Vec3>* pts;
  double capture;
  std::size_t k = 0;

  double via(std::size_t j, const Vec3& p) const {
    double tail = 0.0;
    for (std::size_t i = j; i + 1 < pts->size(); ++i) tail += ((*pts)[i + 1] - (*pts)[i]).norm();
    return (p - (*pts)[j]).norm() + tail;
  }
  void advance(const Vec3& p) {
    const std::size_t last = pts->size() - 1;
    for (std::size_t j = last + 1; j-- > k;)
      if ((p - (*pts)[j]).norm() <= capture) {
        k = std::min(j + 1, last);
        break;
      }
    std::size_t best = k;
    for (std::size_t j = k + 1; j <= last; ++j)
      if ((p - (*pts)[j]).norm() < (p - (*pts)[best]).norm()) best = j;
    k = best;
  }
};

Outcome reward_exactness() {
  // Scripted trajectory: chain following with random bursts, on a curved cave
  // with currents so collisions and captures both occur.
  const Scenario base = archetype_scenario("train3", 11);
  std::vector<int> script;
  {
    Environment env(base);
    env.reset(3);
    DistanceRewarder prog(&env.map().panels, 0.6);
    prog.reset(env.vehicle().position);
    std::mt19937_64 rng(4);
    // Phases of 4000 steps: follow the chain, then turn sideways and drive into rock.
    for (int t = 0; t < 20000 && !env.done(); ++t) {
      const int phase = t % 4000;
      int a = follow_chain(env, prog);
      if (phase >= 1500) a = phase < 1620 ? 2 + static_cast<int>((t / 4000) % 2) : 1;
      if (phase >= 1620 && rng() % 10 == 0) a = static_cast<int>(rng() % 6);
      script.push_back(a);
      env.step(a);
    }
  }

  const RewardMode modes[] = {RewardMode::sparse, RewardMode::dense, RewardMode::safety};
  std::vector<std::vector<StepResult>> runs(3);
  std::vector<Vec3> starts(3);
  for (int m = 0; m < 3; ++m) {
    Scenario s = base;
    s.reward.mode = modes[m];
    Environment env(s);
    env.reset(3);
    starts[static_cast<std::size_t>(m)] = env.vehicle().position;
    for (int a : script) runs[static_cast<std::size_t>(m)].push_back(env.step(a));
  }

  const CaveMap map = build_map(base);
  double worst = 0.0, worst_total = 0.0, worst_equiv = 0.0;
  int collisions = 0, captures = 0;
  for (int m = 0; m < 3; ++m) {
    const auto& run = runs[static_cast<std::size_t>(m)];
    OracleProgress prog{&map.panels.points(), 0.6};
    prog.advance(starts[static_cast<std::size_t>(m)]);
    Vec3 prev = starts[static_cast<std::size_t>(m)];
    double total = 0.0, oracle_total = 0.0;
    for (std::size_t t = 0; t < run.size(); ++t) {
      const StepResult& r = run[t];
      const std::size_t k_before = prog.k;
      prog.advance(r.info.position);
      if (m == 1) captures += prog.k != k_before;
      const double d_now = prog.via(prog.k, r.info.position);
      const double d_prev = prog.via(prog.k, prev);
      const bool goal = r.info.goal_reached, hit = r.info.collided;
      const bool timeout = r.truncated && !r.terminated;
      double expect = 0.0;
      if (modes[m] == RewardMode::sparse) {
        expect = goal ? 10.0 : hit ? -10.0 : timeout ? -1.0 : 0.0;
      } else {
        expect = goal ? 500.0 : 10.0 * (d_prev - d_now) - 0.01 - (hit ? 0.01 : 0.0);
        if (modes[m] == RewardMode::safety && !goal)
          for (std::size_t i = 0; i < kNumRays; ++i) expect -= (1.0 - r.observation[i]) * 0.6 / 28.0;
      }
      worst = std::max(worst, std::abs(expect - r.reward));
      total += r.reward;
      oracle_total += expect;
      if (m == 1) collisions += hit;
      prev = r.info.position;
    }
    worst_total = std::max(worst_total, std::abs(total - oracle_total));
  }
  for (std::size_t t = 0; t < runs[1].size(); ++t)
    worst_equiv = std::max(worst_equiv, std::abs((runs[2][t].reward - runs[2][t].info.sensor) - runs[1][t].reward));

  // Bounds over 10,000 random steps under currents.
  double sensor_min = 0.0, sensor_max = -1.0, move_max = 0.0;
  {
    Scenario s = archetype_scenario("test", 2);
    s.reward.mode = RewardMode::safety;
    Environment env(s);
    std::mt19937_64 rng(6);
    std::discrete_distribution<int> pick({1, 5, 2, 2, 1, 1});
    env.reset(0);
    for (int i = 0; i < 10000; ++i) {
      if (env.done()) env.reset(static_cast<std::uint64_t>(i));
      const StepResult r = env.step(pick(rng));
      sensor_min = std::min(sensor_min, r.info.sensor);
      sensor_max = std::max(sensor_max, r.info.sensor);
      move_max = std::max(move_max, std::abs(r.info.movement));
    }
  }
  const bool pass = worst <= 1e-9 && worst_total <= 1e-9 && worst_equiv <= 1e-12 && sensor_min > -0.6 &&
                    sensor_max <= 0.0 && move_max < 0.03;
  return {pass, fmt("%zu steps (%d collision steps, %d panel advances): max step err %.2e, max return err %.2e; "
                    "safety-sensor vs dense max diff %.1e; 10k random steps: sensor in [%.4f, %.4f], |movement| max "
                    "%.5f (< 0.03)",
                    runs[1].size(), collisions, captures, worst, worst_total, worst_equiv, sensor_min, sensor_max,
                    move_max)};
}

// --- distance rewarder -----------------------------------------------------

Outcome rewarder_arc_length() {
  double worst = 0.0;
  bool monotone = true;
  int samples = 0;
  for (auto arch : {Archetype::train2, Archetype::train3, Archetype::test}) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const CaveMap m = generate_cave(arch, seed);
      const auto& line = m.centerline;
      std::vector<double> arc(line.size(), 0.0);
      for (std::size_t i = 1; i < line.size(); ++i) arc[i] = arc[i - 1] + (line[i] - line[i - 1]).norm();
      std::vector<Vec3> pts;
      std::vector<double> remaining;
      std::size_t seg = 0;
      for (int k = 0; k < 1000; ++k) {
        const double s = arc.back() * k / 999.0;
        while (seg + 2 < line.size() && arc[seg + 1] < s) ++seg;
        const double t = (s - arc[seg]) / (arc[seg + 1] - arc[seg]);
        pts.push_back(line[seg] + t * (line[seg + 1] - line[seg]));
        remaining.push_back(arc.back() - s);
      }
      // Random walk with forward drift along the centerline.
      DistanceRewarder r(&m.panels, 0.6);
      r.reset(pts.front());
      std::mt19937_64 rng(seed * 7 + static_cast<std::uint64_t>(arch));
      std::uniform_int_distribution<int> stride(-3, 8);
      int k = 0;
      while (k < 999) {
        k = std::clamp(k + stride(rng), 0, 999);
        const double d = r.update(pts[static_cast<std::size_t>(k)]);
        const double want = remaining[static_cast<std::size_t>(k)];
        if (want > 0.5) {
          worst = std::max(worst, std::abs(d - want) / want);
          ++samples;
        }
      }
      // Forward sweep is non-increasing.
      r.reset(pts.front());
      double prev = 1e300;
      for (const auto& p : pts) {
        const double d = r.update(p);
        monotone = monotone && d <= prev + 1e-12;
        prev = d;
      }
    }
  }
  return {worst <= 0.05 && monotone,
          fmt("60 generated caves, %d samples: worst relative error %.2f%% (<= 5%%); forward sweep monotone: %s", samples,
              100.0 * worst, monotone ? "yes" : "no")};
}

// --- GAE and gradients -----------------------------------------------------

Outcome gae_and_gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0.0, 2.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst_gae = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 100;
    std::vector<double> r(n), v(n + 1);
    std::vector<std::uint8_t> term(n);
    for (auto& x : r) x = g(rng);
    for (auto& x : v) x = g(rng);
    for (auto& x : term) x = u(rng) < 0.05;
    const double gamma = 0.99, lambda = 0.95;
    const GaeResult res = compute_gae(r, v, term, gamma, lambda);
    for (std::size_t t = 0; t < n; ++t) {
      double total = 0.0, w = 1.0;
      for (std::size_t k = t; k < n; ++k) {
        total += w * (r[k] + gamma * v[k + 1] * (term[k] ? 0.0 : 1.0) - v[k]);
        if (term[k]) break;
        w *= gamma * lambda;
      }
      worst_gae = std::max(worst_gae, std::abs(total - res.advantages[t]));
    }
  }

  PolicyNetwork net(static_cast<int>(kObservationSize), 8, 8, 6);
  net.init_orthogonal(rng);
  std::normal_distribution<double> jitter(0.0, 0.3);
  for (Eigen::Index i = 0; i < net.parameters().size(); ++i) net.parameters()(i) += jitter(rng);
  Batch b;
  b.obs = MatX::Random(static_cast<Eigen::Index>(kObservationSize), 32);
  const MatX lp = log_softmax_columns(net.forward(b.obs).logits);
  b.logp_old.resize(32);
  b.advantages.resize(32);
  b.returns.resize(32);
  for (int i = 0; i < 32; ++i) {
    b.actions.push_back(static_cast<int>(rng() % 6));
    b.logp_old(i) = lp(b.actions.back(), i) + 0.3 * (u(rng) - 0.5);
    b.advantages(i) = g(rng);
    b.returns(i) = g(rng);
  }
  double worst_fd = 0.0;
  for (auto [vc, ec] : {std::pair{0.0, 0.0}, std::pair{1.0, 0.0}, std::pair{0.5, 0.01}}) {
    VecX grad;
    ppo_loss(net, b, 0.2, vc, ec, &grad);
    for (Eigen::Index i = 0; i < grad.size(); ++i) {
      const double keep = net.parameters()(i);
      net.parameters()(i) = keep + 1e-6;
      const double fp = ppo_loss(net, b, 0.2, vc, ec).loss;
      net.parameters()(i) = keep - 1e-6;
      const double fm = ppo_loss(net, b, 0.2, vc, ec).loss;
      net.parameters()(i) = keep;
      const double fd = (fp - fm) / 2e-6;
      const double scale = std::max(std::abs(fd), std::abs(grad(i)));
      if (scale > 1e-7) worst_fd = std::max(worst_fd, std::abs(fd - grad(i)) / scale);
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {worst_gae <= 1e-10 && worst_fd <= 1e-4,
          fmt("GAE vs double loop, 100 x 100 steps: max err %.2e (<= 1e-10); ppo_loss vs central differences "
              "(policy, value, entropy heads): max rel err %.2e (<= 1e-4); %.2f s",
              worst_gae, worst_fd, secs)};
}

// --- learning --------------------------------------------------------------

Outcome learning_smoke() {
  const auto t0 = std::chrono::steady_clock::now();
  const TrainConfig tc = load_config("desk_smoke.json");
  std::vector<double> rates;
  std::string per_seed;
  EvalOptions opt;
  opt.vary_maps = true;
  opt.terminate_on_collision = true;
  opt.base.layout = tc.ppo.layout;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const TrainResult r = train(tc.plan, tc.ppo, seed);
    const EvalReport rep =
        run_eval(greedy_controller(r.network, tc.ppo.layout), mini_train1(5000), 20, 77, true, opt);
    rates.push_back(rep.success_rate);
    per_seed += fmt("%.2f ", rep.success_rate);
  }
  const double med = median(rates);
  const double mins = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / 60.0;
  return {med >= 0.9 && mins <= 60.0,
          fmt("10 seeds x %lld steps on mini-train1, strict success on 20 unseen maps: [ %s] median %.2f (>= 0.9); "
              "%.1f min (<= 60)",
              static_cast<long long>(tc.plan.total_budget()), per_seed.c_str(), med, mins)};
}

Outcome curriculum_and_safety() {
  const auto t0 = std::chrono::steady_clock::now();
  const TrainConfig curriculum = load_config("curriculum.json");
  const TrainConfig e2e = load_config("e2e.json");
  TrainConfig safety = curriculum;
  safety.ppo.reward_mode = RewardMode::safety;
  if (curriculum.plan.total_budget() != e2e.plan.total_budget())
    return {false, "curriculum and end-to-end budgets differ"};

  Scenario test = archetype_scenario("test", 9000);
  EvalOptions opt;
  opt.vary_maps = true;
  opt.base.layout = curriculum.ppo.layout;
  std::vector<EvalReport> rc, re, rs;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto eval = [&](const TrainConfig& tc, const char* label) {
      const TrainResult r = train(tc.plan, tc.ppo, seed);
      EvalReport rep = run_eval(greedy_controller(r.network, tc.ppo.layout), test, 10, 100 + seed, true, opt);
      rep.label = label;
      return rep;
    };
    rc.push_back(eval(curriculum, "curriculum"));
    re.push_back(eval(e2e, "e2e"));
    rs.push_back(eval(safety, "safety"));
    std::printf("  seed %llu: collisions curriculum %.2f e2e %.2f safety %.2f | clearance curriculum %.3f safety %.3f "
                "| strict success curriculum %.2f e2e %.2f safety %.2f\n",
                static_cast<unsigned long long>(seed), rc.back().collisions_mean, re.back().collisions_mean,
                rs.back().collisions_mean, rc.back().avg_clearance, rs.back().avg_clearance,
                rc.back().success_rate, re.back().success_rate, rs.back().success_rate);
    std::fflush(stdout);
  }
  const Comparison ce = compare("curriculum", rc, "e2e", re);
  const Comparison sd = compare("safety", rs, "dense", rc);
  auto mean = [](const std::vector<EvalReport>& v, double EvalReport::*f) {
    double s = 0.0;
    for (const auto& r : v) s += r.*f;
    return s / static_cast<double>(v.size());
  };
  const bool a = ce.collisions.a_better >= 8;
  const bool b = sd.collisions.a_better >= 8 && sd.clearance.a_better >= 8;
  const double mins = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / 60.0;
  return {a && b,
          fmt("(a) curriculum fewer collisions than e2e in %d/10 seeds (mean %.2f vs %.2f) -> %s; (b) safety fewer "
              "collisions than dense in %d/10 (mean %.2f vs %.2f) and larger clearance in %d/10 (mean %.3f vs %.3f) "
              "-> %s; need >= 8/10; %.1f min",
              ce.collisions.a_better, mean(rc, &EvalReport::collisions_mean), mean(re, &EvalReport::collisions_mean),
              a ? "ok" : "not met", sd.collisions.a_better, mean(rs, &EvalReport::collisions_mean),
              mean(rc, &EvalReport::collisions_mean), sd.clearance.a_better, mean(rs, &EvalReport::avg_clearance),
              mean(rc, &EvalReport::avg_clearance), b ? "ok" : "not met", mins)};
}

// --- replay ----------------------------------------------------------------

Outcome replay_divergence_check() {
  const Scenario s = archetype_scenario("train3", 3);
  // Record a path in still water that runs about 0.3 m off the left wall.
  EnvConfig still;
  still.current_enabled = false;
  Environment env(s, still);
  env.reset(1);
  TargetFollower hug{hug_targets(env.map(), env.vehicle().radius, 0.3)};
  hug.targets.push_back(env.map().goal.position);
  std::vector<int> actions;
  double min_clear = 1e9;
  int recorded_hits = 0;
  while (!env.done()) {
    const int a = hug.act(env.vehicle());
    actions.push_back(a);
    const StepResult r = env.step(a);
    min_clear = std::min(min_clear, r.info.clearance - env.vehicle().radius);
    recorded_hits += r.info.collided;
  }
  const DivergenceResult d = replay_divergence(s, 1, actions);
  Scenario off = s;
  off.current.mode = CurrentMode::none;
  const DivergenceResult z = replay_divergence(off, 1, actions);
  Scenario zero = s;
  zero.current.strength = 0.0;
  const DivergenceResult z2 = replay_divergence(zero, 1, actions);
  const double radius = 0.4;
  const bool pass = d.final_deviation >= radius && d.collisions_with_current >= 1 && z.max_deviation == 0.0 &&
                    z2.max_deviation == 0.0 && z.collisions_with_current == z.collisions_without_current;
  return {pass, fmt("train3 path of %zu actions (min wall gap %.3f m, %d contact steps in still water): "
                    "final deviation %.2f m, max %.2f m (>= %.1f); collisions with current %d, without %d (>= 1); "
                    "current off max deviation %.1f, strength 0 max deviation %.1f (== 0)",
                    actions.size(), min_clear, recorded_hits, d.final_deviation, d.max_deviation, radius,
                    d.collisions_with_current, d.collisions_without_current, z.max_deviation, z2.max_deviation)};
}

// --- determinism -----------------------------------------------------------

Outcome determinism() {
  const fs::path dir = fs::temp_directory_path() / "hydronav_acceptance_det";
  fs::remove_all(dir);
  fs::create_directories(dir);
  bool scenarios = true;
  for (const char* a : {"train1", "train2", "train3", "test", "surface"}) {
    save_scenario(dir / "a.json", archetype_scenario(a, 7));
    save_scenario(dir / "b.json", archetype_scenario(a, 7));
    scenarios = scenarios && slurp(dir / "a.json") == slurp(dir / "b.json");
    const CaveMap m1 = build_map(load_scenario(dir / "a.json")), m2 = build_map(load_scenario(dir / "b.json"));
    scenarios = scenarios && m1.panels.points() == m2.panels.points() && m1.spawn.position == m2.spawn.position;
  }

  bool traces = true;
  for (int run = 0; run < 2; ++run) {
    EvalOptions opt;
    opt.trace_dir = dir / ("traces" + std::to_string(run));
    opt.vary_maps = true;
    Scenario s = archetype_scenario("train3", 40);
    s.max_steps = 1500;
    run_eval(random_controller(6, 9), s, 4, 5, true, opt);
  }
  int files = 0;
  for (const auto& e : fs::directory_iterator(dir / "traces0")) {
    ++files;
    traces = traces && slurp(e.path()) == slurp(dir / "traces1" / e.path().filename());
  }
  traces = traces && files == 4;

  TrainConfig tc = load_config("desk_smoke.json");
  tc.plan.lessons[0].budget = 20480;
  tc.plan.lessons[0].scenario.max_steps = 300;
  tc.ppo.log_interval = 2048;
  std::ostringstream c1, c2;
  const TrainResult r1 = train(tc.plan, tc.ppo, 13), r2 = train(tc.plan, tc.ppo, 13);
  write_curve_csv(c1, r1.curve);
  write_curve_csv(c2, r2.curve);
  const bool curves = c1.str() == c2.str() && r1.network.parameters() == r2.network.parameters() && !r1.curve.empty();
  fs::remove_all(dir);
  return {scenarios && traces && curves,
          fmt("scenario files byte-identical: %s; %d episode traces byte-identical: %s; training curve (%zu rows) and "
              "weights identical: %s",
              scenarios ? "yes" : "no", files, traces ? "yes" : "no", r1.curve.size(), curves ? "yes" : "no")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"fluid-conservation", fluid_conservation},
      {"fluid-kinematics", fluid_free_fall},
      {"reward-exactness", reward_exactness},
      {"distance-rewarder", rewarder_arc_length},
      {"gae-and-gradients", gae_and_gradients},
      {"learning-smoke", learning_smoke},
      {"curriculum-safety-direction", curriculum_and_safety},
      {"replay-divergence", replay_divergence_check},
      {"determinism", determinism},
  };
  std::set<std::string> only(argv + 1, argv + argc);
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    if (!only.empty() && !only.count(name)) continue;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s  %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
