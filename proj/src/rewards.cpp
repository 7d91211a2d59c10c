#include "hydronav/rewards.hpp"

#include <cmath>

#include "hydronav/common.hpp"

namespace hydronav {

RewardMode parse_reward_mode(const std::string& s) {
  if (s == "sparse") return RewardMode::sparse;
  if (s == "dense") return RewardMode::dense;
  if (s == "safety") return RewardMode::safety;
  throw ConfigError("unknown reward mode '" + s + "'");
}

std::string to_string(RewardMode m) {
  switch (m) {
    case RewardMode::sparse: return "sparse";
    case RewardMode::dense: return "dense";
    case RewardMode::safety: return "safety";
  }
  return "dense";
}

void RewardConfig::validate() const {
  const double all[] = {sparse_goal, sparse_collision, sparse_fail, dense_goal,
                        dense_collision, timestep, movement_scale, sensor_scale};
  for (double v : all)
    if (!std::isfinite(v)) throw ConfigError("reward: constants must be finite");
  if (sensor_scale < 0.0) throw ConfigError("reward: sensor_scale must be >= 0");
}

double sparse_reward(StepEvent event, const RewardConfig& cfg) {
  switch (event) {
    case StepEvent::goal: return cfg.sparse_goal;
    case StepEvent::collision: return cfg.sparse_collision;
    case StepEvent::timeout: return cfg.sparse_fail;
    case StepEvent::none: return 0.0;
  }
  return 0.0;
}

double movement_reward(double d_prev, double d_now, const RewardConfig& cfg) {
  if (!std::isfinite(d_prev) || !std::isfinite(d_now))
    throw ContractViolation("reward: distances must be finite");
  return (d_prev - d_now) * cfg.movement_scale;
}

double dense_reward(double d_prev, double d_now, bool collided, bool goal, const RewardConfig& cfg) {
  const double movement = movement_reward(d_prev, d_now, cfg);
  if (goal) return cfg.dense_goal;
  double r = movement + cfg.timestep;
  if (collided) r += cfg.dense_collision;
  return r;
}

double sensor_penalty(std::span<const double> rays, const RewardConfig& cfg) {
  double r = 0.0;
  for (double v : rays) {
    if (!(v >= 0.0 && v <= 1.0)) throw ContractViolation("reward: ray reading outside [0,1]");
    r += -(1.0 - v) * cfg.sensor_scale;
  }
  return r;
}

}  // namespace hydronav
