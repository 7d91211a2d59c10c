#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hydronav/policy.hpp"
#include "hydronav/scenario.hpp"

namespace hydronav {

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

/// Generalised advantage estimation over one trajectory segment. `values`
/// has one more entry than `rewards`: the last is the bootstrap value of the
/// state after the segment. terminals[t] != 0 stops bootstrapping past t.
GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values,
                      std::span<const std::uint8_t> terminals, double gamma, double lambda);

struct PpoConfig {
  double gamma = 0.99;
  double lambda = 0.95;
  double clip = 0.2;
  double lr = 3e-4;
  /// Steps per environment per update.
  int rollout_length = 2048;
  int num_envs = 8;
  int minibatch = 512;
  int epochs = 4;
  double entropy_coef = 0.005;
  double value_coef = 0.5;
  double max_grad_norm = 0.5;
  int hidden1 = 128;
  int hidden2 = 128;
  bool normalize_advantages = true;
  ObservationLayout layout = ObservationLayout::bearing_speed_yawrate;
  /// Overrides every lesson's reward mode when set.
  std::optional<RewardMode> reward_mode;
  /// Distinct maps generated per lesson; episodes draw from this pool.
  int maps_per_lesson = 8;
  /// Training-curve sampling period (timesteps) and rolling episode window.
  int log_interval = 10000;
  int curve_window = 20;
  /// Vehicle, sensor and timing settings shared by every lesson.
  EnvConfig env;

  void validate() const;
};

struct Lesson {
  std::string name;
  Scenario scenario;
  std::int64_t budget = 0;
  double clip = 0.2;
  double lr = 3e-4;
};

/// Lessons run in order; weights carry over in full.
struct CurriculumPlan {
  std::vector<Lesson> lessons;

  /// train1 -> train2 -> train3 with the clip and learning-rate schedule.
  static CurriculumPlan standard();
  static CurriculumPlan single(const Scenario& s, std::int64_t budget, double clip = 0.2, double lr = 3e-4);
  std::int64_t total_budget() const;
  void validate(const PpoConfig& cfg) const;
};

/// One PPO batch, observations in columns.
struct Batch {
  MatX obs;
  std::vector<int> actions;
  VecX logp_old;
  VecX advantages;
  VecX returns;

  Eigen::Index size() const { return obs.cols(); }
  Batch subset(std::span<const Eigen::Index> idx) const;
};

struct LossTerms {
  double loss = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
};

/// Clipped surrogate + value_coef * MSE(value, return) - entropy_coef *
/// entropy, averaged over the batch. Fills `grad` when non-null.
LossTerms ppo_loss(const PolicyNetwork& net, const Batch& batch, double clip, double value_coef, double entropy_coef,
                   VecX* grad = nullptr);

struct UpdateStats {
  LossTerms mean;
  int minibatches = 0;
  /// Clip range and learning rate the update ran with.
  double clip = 0.0;
  double lr = 0.0;
};

/// Epochs of shuffled minibatch Adam steps. Advantages are normalised per
/// minibatch when configured. Throws NumericalError on a non-finite loss.
UpdateStats ppo_update(PolicyNetwork& net, Adam& opt, const Batch& batch, const PpoConfig& cfg, double clip,
                       double lr, std::mt19937_64& rng);

struct CurvePoint {
  std::int64_t timestep = 0;
  double mean_return = 0.0;
  double success_rate = 0.0;
  double collision_rate = 0.0;
  int lesson = 0;
};

struct TrainHooks {
  std::function<void(const CurvePoint&)> on_log;
  /// Called every `eval_interval` timesteps; return false to stop training.
  std::int64_t eval_interval = 0;
  std::function<bool(std::int64_t timestep, const PolicyNetwork&)> on_eval;
  std::function<void(std::int64_t timestep, int lesson, const UpdateStats&)> on_update;
};

struct TrainResult {
  PolicyNetwork network;
  std::vector<CurvePoint> curve;
  std::int64_t timesteps = 0;
  int lesson = 0;
  bool stopped_early = false;
};

/// Runs the plan. `resume` continues from a checkpoint's weights and
/// timestep (optimiser moments restart from zero).
TrainResult train(const CurriculumPlan& plan, const PpoConfig& cfg, std::uint64_t seed, const TrainHooks& hooks = {},
                  const Checkpoint* resume = nullptr);

void write_curve_csv(std::ostream& out, const std::vector<CurvePoint>& curve);

struct TrainConfig {
  PpoConfig ppo;
  CurriculumPlan plan;
};

/// JSON with a "ppo" object and a "lessons" array; lesson scenarios are an
/// archetype name or a scenario-file path, relative to the config file.
TrainConfig train_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
TrainConfig load_train_config(const std::filesystem::path& path);
nlohmann::json to_json(const PpoConfig& c);

}  // namespace hydronav
