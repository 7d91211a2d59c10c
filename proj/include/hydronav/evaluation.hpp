#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hydronav/env.hpp"
#include "hydronav/policy.hpp"
#include "hydronav/scenario.hpp"

namespace hydronav {

/// Anything that maps observations to actions.
struct Controller {
  std::function<int(const Observation&)> act;
  int action_count = 0;
  /// Layout the controller was trained on, if it cares.
  std::optional<ObservationLayout> layout;
  /// Stateless controllers may act for several episodes at once.
  bool thread_safe = false;
};

Controller greedy_controller(const PolicyNetwork& net, ObservationLayout layout);
/// Uniform random actions from its own seeded engine.
Controller random_controller(int action_count, std::uint64_t seed);

struct EpisodeRecord {
  std::uint64_t map_seed = 0;
  std::uint64_t reset_seed = 0;
  int steps = 0;
  bool goal = false;
  /// Number of separate contacts (a run of colliding steps counts once).
  int collisions = 0;
  double ret = 0.0;
  double clearance_sum = 0.0;
  double sensor_clearance_sum = 0.0;
  double final_distance = 0.0;

  bool strict_success() const { return goal && collisions == 0; }
};

struct EvalOptions {
  /// Draw a fresh map per episode (scenario seed + episode index) for
  /// generated worlds; otherwise every episode uses the scenario's map.
  bool vary_maps = false;
  bool terminate_on_collision = false;
  /// Write one JSONL trace per episode here when set.
  std::optional<std::filesystem::path> trace_dir;
  EnvConfig base;
  /// Episodes run concurrently when > 1 and the controller is thread safe.
  /// Results do not depend on the thread count.
  int threads = 1;
};

struct EvalReport {
  std::string label;
  /// Seed the report was run with; compare() pairs reports by it.
  std::uint64_t seed = 0;
  bool strict = true;
  int episodes = 0;
  /// Under the report's own semantics (strict or lenient).
  double success_rate = 0.0;
  double strict_success_rate = 0.0;
  double lenient_success_rate = 0.0;
  double collisions_mean = 0.0;
  double collisions_sd = 0.0;
  /// Mean signed distance at the vehicle centre over all steps.
  double avg_clearance = 0.0;
  /// Mean shortest ray distance over all steps.
  double avg_sensor_clearance = 0.0;
  double mean_return = 0.0;
  std::int64_t total_steps = 0;
  std::vector<EpisodeRecord> records;
};

/// Aggregates from per-episode records.
EvalReport summarize(std::vector<EpisodeRecord> records, bool strict, std::uint64_t seed, std::string label = {});

/// Rollouts of `ctl` from seeded spawns. Throws ContractViolation for
/// n_episodes < 1 and ConfigError when the controller does not fit the
/// scenario's action set or observation layout.
EvalReport run_eval(const Controller& ctl, const Scenario& scenario, int n_episodes, std::uint64_t seed, bool strict,
                    const EvalOptions& options = {});

/// Rebuild a report from the JSONL traces written by run_eval.
EvalReport report_from_traces(const std::filesystem::path& trace_dir, bool strict, std::uint64_t seed);

void write_report_csv(std::ostream& out, const std::vector<EvalReport>& reports);
void write_episodes_csv(std::ostream& out, const EvalReport& report);
nlohmann::json to_json(const EvalReport& r, bool with_records = false);

struct DivergenceResult {
  /// |p_current(t) - p_still(t)| for t over the shorter trajectory.
  std::vector<double> deviation;
  int collisions_with_current = 0;
  int collisions_without_current = 0;
  double final_deviation = 0.0;
  double max_deviation = 0.0;
  Trajectory with_current;
  Trajectory without_current;
};

/// Re-run a recorded action sequence with and without the current.
DivergenceResult replay_divergence(const Scenario& scenario, std::uint64_t seed, const std::vector<int>& actions,
                                   EnvConfig base = {});

struct ComparisonRow {
  std::uint64_t seed = 0;
  double collisions_a = 0.0, collisions_b = 0.0;
  double clearance_a = 0.0, clearance_b = 0.0;
  double success_a = 0.0, success_b = 0.0;
};

struct SignTest {
  /// Seeds where a is better, b is better, or tied.
  int a_better = 0;
  int b_better = 0;
  int ties = 0;
  double mean_difference = 0.0;  // a - b
  /// Two-sided exact binomial p; unset with fewer than two paired seeds.
  std::optional<double> p_value;
};

struct Comparison {
  std::string label_a, label_b;
  std::vector<ComparisonRow> rows;
  /// Fewer collisions is better.
  SignTest collisions;
  /// Larger clearance is better.
  SignTest clearance;
};

/// Pair per-seed reports of two conditions. Throws ContractViolation when
/// the seed sets differ.
Comparison compare(const std::string& label_a, const std::vector<EvalReport>& a, const std::string& label_b,
                   const std::vector<EvalReport>& b);
/// Two-sided sign-test p-value for k successes out of n non-tied pairs.
double sign_test_p(int k, int n);
void write_comparison_csv(std::ostream& out, const Comparison& c);

}  // namespace hydronav
