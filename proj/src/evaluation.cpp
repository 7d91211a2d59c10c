#include "hydronav/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <thread>

namespace hydronav {

Controller greedy_controller(const PolicyNetwork& net, ObservationLayout layout) {
  return {[net](const Observation& o) { return net.greedy_action(o); }, net.action_count(), layout, true};
}

Controller random_controller(int action_count, std::uint64_t seed) {
  auto rng = std::make_shared<std::mt19937_64>(seed);
  return {[rng, action_count](const Observation&) { return static_cast<int>((*rng)() % action_count); },
          action_count, std::nullopt};
}

EvalReport summarize(std::vector<EpisodeRecord> records, bool strict, std::uint64_t seed, std::string label) {
  EvalReport r;
  r.label = std::move(label);
  r.seed = seed;
  r.strict = strict;
  r.episodes = static_cast<int>(records.size());
  if (records.empty()) return r;
  double clearance = 0.0, sensor = 0.0;
  for (const auto& e : records) {
    r.strict_success_rate += e.strict_success() ? 1.0 : 0.0;
    r.lenient_success_rate += e.goal ? 1.0 : 0.0;
    r.collisions_mean += e.collisions;
    r.mean_return += e.ret;
    clearance += e.clearance_sum;
    sensor += e.sensor_clearance_sum;
    r.total_steps += e.steps;
  }
  const double n = static_cast<double>(records.size());
  r.strict_success_rate /= n;
  r.lenient_success_rate /= n;
  r.success_rate = strict ? r.strict_success_rate : r.lenient_success_rate;
  r.collisions_mean /= n;
  r.mean_return /= n;
  double var = 0.0;
  for (const auto& e : records) var += (e.collisions - r.collisions_mean) * (e.collisions - r.collisions_mean);
  r.collisions_sd = records.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
  if (r.total_steps > 0) {
    r.avg_clearance = clearance / static_cast<double>(r.total_steps);
    r.avg_sensor_clearance = sensor / static_cast<double>(r.total_steps);
  }
  r.records = std::move(records);
  return r;
}

namespace {

std::uint64_t episode_seed(std::uint64_t seed, int i) {
  std::uint64_t z = seed * 0x9E3779B97F4A7C15ull + static_cast<std::uint64_t>(i) + 1;
  z = (z ^ (z >> 31)) * 0xD6E8FEB86659FD93ull;
  return z ^ (z >> 32);
}

void accumulate(EpisodeRecord& ep, bool& in_contact, const TraceRecord& rec) {
  ++ep.steps;
  ep.ret += rec.reward;
  if (rec.collided && !in_contact) ++ep.collisions;
  in_contact = rec.collided;
  ep.clearance_sum += rec.clearance;
  ep.sensor_clearance_sum += rec.sensor_clearance;
  ep.goal = ep.goal || rec.goal_reached;
  ep.final_distance = rec.distance_to_goal;
}

std::filesystem::path trace_path(const std::filesystem::path& dir, int i) {
  char name[64];
  std::snprintf(name, sizeof name, "episode_%04d.jsonl", i);
  return dir / name;
}

}  // namespace

EvalReport run_eval(const Controller& ctl, const Scenario& scenario, int n_episodes, std::uint64_t seed, bool strict,
                    const EvalOptions& options) {
  if (n_episodes < 1) throw ContractViolation("run_eval: n_episodes must be >= 1");
  if (!ctl.act) throw ContractViolation("run_eval: controller has no policy");
  EnvConfig cfg = env_config_for(scenario, options.base);
  cfg.terminate_on_collision = options.terminate_on_collision;
  if (ctl.layout && *ctl.layout != cfg.layout)
    throw ConfigError("policy was trained with observation layout '" + to_string(*ctl.layout) +
                      "' but the evaluation uses '" + to_string(cfg.layout) + "'");
  const bool generated = scenario.source != "mesh";
  std::shared_ptr<const CaveMap> fixed;
  if (!(options.vary_maps && generated))
    fixed = std::make_shared<const CaveMap>(build_map(scenario, cfg.vehicle.radius));
  if (options.trace_dir) std::filesystem::create_directories(*options.trace_dir);

  auto run_episode = [&](int i) {
    EpisodeRecord ep;
    std::shared_ptr<const CaveMap> map = fixed;
    ep.map_seed = scenario.seed;
    if (!map) {
      Scenario s = scenario;
      s.seed = scenario.seed + static_cast<std::uint64_t>(i);
      ep.map_seed = s.seed;
      map = std::make_shared<const CaveMap>(build_map(s, cfg.vehicle.radius));
    }
    Environment env(map, cfg);
    if (static_cast<int>(env.action_spec().size()) != ctl.action_count)
      throw ConfigError("policy has " + std::to_string(ctl.action_count) + " actions but the scenario offers " +
                        std::to_string(env.action_spec().size()));
    ep.reset_seed = episode_seed(seed, i);
    Observation obs = env.reset(ep.reset_seed);
    ep.final_distance = env.distance_to_goal();
    std::ofstream trace;
    if (options.trace_dir) {
      trace.open(trace_path(*options.trace_dir, i));
      if (!trace) throw DataError("cannot write trace in " + options.trace_dir->string());
    }
    bool contact = false;
    while (!env.done()) {
      const int a = ctl.act(obs);
      const StepResult r = env.step(a);
      const TraceRecord rec = make_trace_record(env.steps(), a, r, cfg.sensor_range);
      accumulate(ep, contact, rec);
      if (trace.is_open()) write_trace_line(trace, rec);
      obs = r.observation;
    }
    return ep;
  };

  std::vector<EpisodeRecord> records(static_cast<std::size_t>(n_episodes));
  const int threads = ctl.thread_safe ? std::clamp(options.threads, 1, n_episodes) : 1;
  if (threads == 1) {
    for (int i = 0; i < n_episodes; ++i) records[static_cast<std::size_t>(i)] = run_episode(i);
  } else {
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&, t] {
        try {
          for (int i = next++; i < n_episodes; i = next++) records[static_cast<std::size_t>(i)] = run_episode(i);
        } catch (...) {
          errors[static_cast<std::size_t>(t)] = std::current_exception();
          next = n_episodes;
        }
      });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  return summarize(std::move(records), strict, seed, scenario.source);
}

EvalReport report_from_traces(const std::filesystem::path& dir, bool strict, std::uint64_t seed) {
  std::vector<EpisodeRecord> records;
  for (int i = 0;; ++i) {
    const auto path = trace_path(dir, i);
    if (!std::filesystem::exists(path)) break;
    std::ifstream in(path);
    EpisodeRecord ep;
    bool contact = false;
    for (const auto& rec : read_trace(in)) accumulate(ep, contact, rec);
    records.push_back(ep);
  }
  if (records.empty()) throw DataError("no episode traces in " + dir.string());
  return summarize(std::move(records), strict, seed);
}

nlohmann::json to_json(const EvalReport& r, bool with_records) {
  nlohmann::json j = {{"label", r.label},
                      {"seed", r.seed},
                      {"strict", r.strict},
                      {"episodes", r.episodes},
                      {"success_rate", r.success_rate},
                      {"strict_success_rate", r.strict_success_rate},
                      {"lenient_success_rate", r.lenient_success_rate},
                      {"collisions_mean", r.collisions_mean},
                      {"collisions_sd", r.collisions_sd},
                      {"avg_clearance", r.avg_clearance},
                      {"avg_sensor_clearance", r.avg_sensor_clearance},
                      {"mean_return", r.mean_return},
                      {"total_steps", r.total_steps}};
  if (with_records) {
    auto& arr = j["episodes_detail"] = nlohmann::json::array();
    for (const auto& e : r.records)
      arr.push_back({{"map_seed", e.map_seed},
                     {"reset_seed", e.reset_seed},
                     {"steps", e.steps},
                     {"goal", e.goal},
                     {"collisions", e.collisions},
                     {"return", e.ret},
                     {"final_distance", e.final_distance}});
  }
  return j;
}

void write_report_csv(std::ostream& out, const std::vector<EvalReport>& reports) {
  out << "label,seed,strict,episodes,success_rate,strict_success_rate,lenient_success_rate,collisions_mean,"
         "collisions_sd,avg_clearance,avg_sensor_clearance,mean_return\n";
  char buf[512];
  for (const auto& r : reports) {
    std::snprintf(buf, sizeof buf, "%s,%llu,%d,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.label.c_str(),
                  static_cast<unsigned long long>(r.seed), r.strict ? 1 : 0, r.episodes, r.success_rate,
                  r.strict_success_rate, r.lenient_success_rate, r.collisions_mean, r.collisions_sd, r.avg_clearance,
                  r.avg_sensor_clearance, r.mean_return);
    out << buf;
  }
}

void write_episodes_csv(std::ostream& out, const EvalReport& r) {
  out << "episode,map_seed,reset_seed,steps,goal,collisions,return,mean_clearance,final_distance\n";
  char buf[512];
  for (std::size_t i = 0; i < r.records.size(); ++i) {
    const auto& e = r.records[i];
    std::snprintf(buf, sizeof buf, "%zu,%llu,%llu,%d,%d,%d,%.17g,%.17g,%.17g\n", i,
                  static_cast<unsigned long long>(e.map_seed), static_cast<unsigned long long>(e.reset_seed), e.steps,
                  e.goal ? 1 : 0, e.collisions, e.ret, e.steps > 0 ? e.clearance_sum / e.steps : 0.0,
                  e.final_distance);
    out << buf;
  }
}

// ---------------------------------------------------------------------------

DivergenceResult replay_divergence(const Scenario& scenario, std::uint64_t seed, const std::vector<int>& actions,
                                   EnvConfig base) {
  auto map = std::make_shared<const CaveMap>(build_map(scenario, base.vehicle.radius));
  const EnvConfig cfg = env_config_for(scenario, base);
  DivergenceResult d;
  d.with_current = replay(actions, map, seed, true, cfg);
  d.without_current = replay(actions, map, seed, false, cfg);
  const std::size_t n = std::min(d.with_current.positions.size(), d.without_current.positions.size());
  for (std::size_t i = 0; i < n; ++i) {
    const double dev = (d.with_current.positions[i] - d.without_current.positions[i]).norm();
    d.deviation.push_back(dev);
    d.max_deviation = std::max(d.max_deviation, dev);
  }
  d.final_deviation = d.deviation.empty() ? 0.0 : d.deviation.back();
  auto edges = [](const Trajectory& t) {
    int n_edges = 0;
    bool prev = false;
    for (bool c : t.collisions) {
      if (c && !prev) ++n_edges;
      prev = c;
    }
    return n_edges;
  };
  d.collisions_with_current = edges(d.with_current);
  d.collisions_without_current = edges(d.without_current);
  return d;
}

// ---------------------------------------------------------------------------

double sign_test_p(int k, int n) {
  if (n <= 0) return 1.0;
  const int lo = std::min(k, n - k);
  // Sum in log space to stay exact enough for large n.
  double tail = 0.0;
  for (int i = 0; i <= lo; ++i)
    tail += std::exp(std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0) - n * std::log(2.0));
  return std::min(1.0, 2.0 * tail);
}

namespace {

SignTest sign_test(const std::vector<double>& diff_better_a) {
  SignTest s;
  for (double d : diff_better_a) {
    if (d > 0)
      ++s.a_better;
    else if (d < 0)
      ++s.b_better;
    else
      ++s.ties;
  }
  if (diff_better_a.size() >= 2) s.p_value = sign_test_p(s.a_better, s.a_better + s.b_better);
  return s;
}

}  // namespace

Comparison compare(const std::string& label_a, const std::vector<EvalReport>& a, const std::string& label_b,
                   const std::vector<EvalReport>& b) {
  std::map<std::uint64_t, const EvalReport*> ma, mb;
  for (const auto& r : a)
    if (!ma.emplace(r.seed, &r).second) throw ContractViolation("compare: duplicate seed in '" + label_a + "'");
  for (const auto& r : b)
    if (!mb.emplace(r.seed, &r).second) throw ContractViolation("compare: duplicate seed in '" + label_b + "'");
  if (ma.size() != mb.size() || !std::equal(ma.begin(), ma.end(), mb.begin(),
                                            [](const auto& x, const auto& y) { return x.first == y.first; }))
    throw ContractViolation("compare: '" + label_a + "' and '" + label_b + "' were run on different seed sets");
  if (ma.empty()) throw ContractViolation("compare: no reports");

  Comparison c;
  c.label_a = label_a;
  c.label_b = label_b;
  std::vector<double> dcol, dclr;
  for (const auto& [seed, ra] : ma) {
    const EvalReport* rb = mb.at(seed);
    ComparisonRow row{seed,
                      ra->collisions_mean,
                      rb->collisions_mean,
                      ra->avg_clearance,
                      rb->avg_clearance,
                      ra->success_rate,
                      rb->success_rate};
    c.rows.push_back(row);
    dcol.push_back(row.collisions_b - row.collisions_a);
    dclr.push_back(row.clearance_a - row.clearance_b);
  }
  c.collisions = sign_test(dcol);
  c.clearance = sign_test(dclr);
  double mc = 0.0, ml = 0.0;
  for (const auto& r : c.rows) {
    mc += r.collisions_a - r.collisions_b;
    ml += r.clearance_a - r.clearance_b;
  }
  c.collisions.mean_difference = mc / static_cast<double>(c.rows.size());
  c.clearance.mean_difference = ml / static_cast<double>(c.rows.size());
  return c;
}

void write_comparison_csv(std::ostream& out, const Comparison& c) {
  out << "seed,collisions_" << c.label_a << ",collisions_" << c.label_b << ",collisions_diff,clearance_" << c.label_a
      << ",clearance_" << c.label_b << ",clearance_diff,success_" << c.label_a << ",success_" << c.label_b << "\n";
  char buf[512];
  for (const auto& r : c.rows) {
    std::snprintf(buf, sizeof buf, "%llu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  static_cast<unsigned long long>(r.seed), r.collisions_a, r.collisions_b, r.collisions_a - r.collisions_b,
                  r.clearance_a, r.clearance_b, r.clearance_a - r.clearance_b, r.success_a, r.success_b);
    out << buf;
  }
  auto p = [](const SignTest& s) { return s.p_value ? std::to_string(*s.p_value) : std::string("undefined"); };
  out << "# collisions: " << c.label_a << " better in " << c.collisions.a_better << ", " << c.label_b << " better in "
      << c.collisions.b_better << ", ties " << c.collisions.ties << ", mean diff " << c.collisions.mean_difference
      << ", sign-test p " << p(c.collisions) << "\n";
  out << "# clearance: " << c.label_a << " better in " << c.clearance.a_better << ", " << c.label_b << " better in "
      << c.clearance.b_better << ", ties " << c.clearance.ties << ", mean diff " << c.clearance.mean_difference
      << ", sign-test p " << p(c.clearance) << "\n";
}

}  // namespace hydronav
