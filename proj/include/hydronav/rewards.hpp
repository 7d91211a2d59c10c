#pragma once

#include <span>
#include <string>

namespace hydronav {

enum class RewardMode { sparse, dense, safety };

RewardMode parse_reward_mode(const std::string& s);
std::string to_string(RewardMode m);

/// Reward constants. Defaults are the published values; sparse and dense
/// regimes use different goal and collision constants.
struct RewardConfig {
  RewardMode mode = RewardMode::dense;

  double sparse_goal = 10.0;
  double sparse_collision = -10.0;
  double sparse_fail = -1.0;

  double dense_goal = 500.0;
  double dense_collision = -0.01;
  double timestep = -0.01;
  /// Reward per metre of progress along the panel chain.
  double movement_scale = 10.0;

  /// Per-ray multiplier; 0.6/28 maps 28 fully-blocked rays to -0.6.
  double sensor_scale = 0.6 / 28.0;

  void validate() const;
};

enum class StepEvent { none, goal, collision, timeout };

/// Sparse regime: goal, collision and timeout constants, zero otherwise.
double sparse_reward(StepEvent event, const RewardConfig& cfg = {});

/// Movement term alone: (d_prev - d_now) * movement_scale.
double movement_reward(double d_prev, double d_now, const RewardConfig& cfg = {});

/// Dense regime: goal bonus, else movement + timestep (+ collision penalty).
/// Throws ContractViolation on non-finite distances.
double dense_reward(double d_prev, double d_now, bool collided, bool goal, const RewardConfig& cfg = {});

/// Lidar penalty: sum_i -(1 - v_i) * sensor_scale. Values must lie in [0,1].
double sensor_penalty(std::span<const double> rays, const RewardConfig& cfg = {});

}  // namespace hydronav
