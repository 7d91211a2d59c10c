#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "hydronav/cave.hpp"
#include "hydronav/fluid.hpp"
#include "hydronav/rewards.hpp"
#include "hydronav/scenario.hpp"

namespace hydronav {

inline constexpr std::size_t kNumRays = 28;
inline constexpr std::size_t kObservationSize = 31;

/// Point mass with yaw-only orientation and linear drag.
struct VehicleParams {
  double mass = 1.0;
  double radius = 0.4;
  /// Linear drag k_d (N s/m) against velocity relative to the water.
  double drag = 5.0;
  /// Thrust magnitude for forward and depth actions (N).
  double max_thrust = 0.6;
  double inertia = 0.1;
  /// Rotational drag (N m s/rad).
  double angular_drag = 2.0;
  /// Torque for the yaw actions; the default gives a 45 deg/s steady turn.
  double yaw_torque = 2.0 * kPi / 4.0;

  double max_speed() const { return max_thrust / drag; }
  double max_yaw_rate() const { return yaw_torque / angular_drag; }
  void validate() const;
};

struct VehicleState {
  Vec3 position = Vec3::Zero();
  Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity();
  Vec3 velocity = Vec3::Zero();
  Vec3 angular_velocity = Vec3::Zero();
  double radius = 0.4;
  /// Heading angle about +y; orientation is kept in sync with it.
  double yaw = 0.0;

  /// Body +x in world coordinates.
  Vec3 forward() const;
  void set_yaw(double y);
};

struct Action {
  std::string name;
  /// Thrust along the body heading (N).
  double forward = 0.0;
  /// Thrust along world +y (N).
  double vertical = 0.0;
  /// Torque about +y (N m); positive turns left.
  double torque = 0.0;
};

struct ActionSpec {
  std::vector<Action> actions;

  std::size_t size() const { return actions.size(); }
  /// noop, forward, yaw_left, yaw_right, ascend, descend.
  static ActionSpec underwater(const VehicleParams& v);
  /// Same without ascend/descend.
  static ActionSpec surface(const VehicleParams& v);
  static ActionSpec for_mode(WorldMode m, const VehicleParams& v);
  void validate() const;
};

/// Rays are cast from the vehicle centre in the body frame. Body axes:
/// +x forward, +y up, -z left.
struct SensorLayout {
  /// Elevation of each fan (radians); rays split evenly between fans.
  std::vector<double> elevations{15.0 * kPi / 180.0, -15.0 * kPi / 180.0};
  /// Azimuth span, centred on the heading (radians).
  double azimuth_span = kPi;
  double max_range = 5.0;

  static SensorLayout underwater() { return {}; }
  static SensorLayout surface() { return {{0.0}, kPi, 5.0}; }
  static SensorLayout for_mode(WorldMode m) { return m == WorldMode::surface ? surface() : underwater(); }
  /// Unit body-frame ray directions, fan by fan, right to left.
  std::vector<Vec3> directions() const;
  void validate() const;
};

enum class ObservationLayout {
  /// rays, bearing, forward speed, yaw rate.
  bearing_speed_yawrate,
  /// rays, bearing, distance to goal / initial distance, forward speed.
  bearing_distance_speed,
};

ObservationLayout parse_observation_layout(const std::string& s);
std::string to_string(ObservationLayout l);

using Observation = std::array<double, kObservationSize>;

struct EnvConfig {
  VehicleParams vehicle;
  /// Empty means the default set for the map's mode.
  std::vector<Action> actions;
  /// Unset fans mean the default layout for the map's mode.
  std::vector<double> sensor_elevations;
  double sensor_range = 5.0;
  ObservationLayout layout = ObservationLayout::bearing_speed_yawrate;
  RewardConfig reward;
  double dt = 1.0 / 60.0;
  /// 0 sizes the limit from the panel-chain length.
  int max_steps = 0;
  bool terminate_on_collision = false;
  /// Spawn heading is drawn within +-jitter of the tunnel direction.
  double spawn_yaw_jitter = 0.3;
  /// Turning the current off keeps the water still regardless of the map.
  bool current_enabled = true;
  /// Fluid sub-steps per tick in MPM current mode.
  int fluid_substeps = 4;
  /// MPM grid cell size (m).
  double fluid_cell = 0.5;

  void validate() const;
};

/// Episode settings carried by a scenario applied on top of `base`.
EnvConfig env_config_for(const Scenario& s, EnvConfig base = {});

struct StepInfo {
  bool collided = false;
  double distance_to_goal = 0.0;
  double clearance = 0.0;
  Vec3 position = Vec3::Zero();
  bool goal_reached = false;
  StepEvent event = StepEvent::none;
  /// Reward parts: movement term, sensor term (safety only).
  double movement = 0.0;
  double sensor = 0.0;
  /// Set when the vehicle left the current field's domain this tick.
  bool out_of_domain = false;
};

struct StepResult {
  Observation observation{};
  double reward = 0.0;
  bool terminated = false;
  bool truncated = false;
  StepInfo info;
};

/// One navigation episode at a time on a fixed map.
class Environment {
 public:
  Environment(std::shared_ptr<const CaveMap> map, EnvConfig config = {});
  /// Builds the scenario's world and takes its episode settings.
  explicit Environment(const Scenario& scenario, EnvConfig base = {});

  Observation reset(std::uint64_t seed);
  StepResult step(int action);

  Observation observe() const;
  /// Normalised ray readings at the current state.
  std::array<double, kNumRays> rays() const;

  const CaveMap& map() const { return *map_; }
  std::shared_ptr<const CaveMap> map_ptr() const { return map_; }
  const EnvConfig& config() const { return config_; }
  const ActionSpec& action_spec() const { return actions_; }
  const VehicleState& vehicle() const { return vehicle_; }
  int max_steps() const { return max_steps_; }
  int steps() const { return steps_; }
  double time() const { return steps_ * config_.dt; }
  bool done() const { return done_; }
  double distance_to_goal() const { return rewarder_.distance(vehicle_.position); }
  /// Live fluid state in MPM current mode, else null.
  const FluidState* fluid() const { return fluid_.get(); }

  /// Place the vehicle directly (tests, replays from recorded states).
  void set_vehicle(const VehicleState& v);

 private:
  Observation observe_with(const std::array<double, kNumRays>& r) const;
  CurrentSample current_at(const Vec3& p) const;
  void integrate(const Action& a, const Vec3& water);
  bool resolve_collision(const Vec3& from);

  std::shared_ptr<const CaveMap> map_;
  EnvConfig config_;
  ActionSpec actions_;
  SensorLayout sensors_;
  std::vector<Vec3> ray_dirs_;
  CurrentField current_;
  std::shared_ptr<FluidState> fluid_;
  FluidParams fluid_params_;
  DistanceRewarder rewarder_;
  VehicleState vehicle_;
  int max_steps_ = 0;
  int steps_ = 0;
  bool done_ = true;
  double initial_distance_ = 1.0;
};

/// Open-loop replay: positions[0] is the start, one entry per executed
/// action after it; collisions[i] flags contact during action i. Stops
/// early only on reaching the goal.
struct Trajectory {
  std::vector<Vec3> positions;
  std::vector<bool> collisions;
  int collision_count() const;
};

Trajectory replay(const std::vector<int>& actions, const Scenario& scenario, std::uint64_t seed, bool current_on,
                  EnvConfig base = {});
Trajectory replay(const std::vector<int>& actions, std::shared_ptr<const CaveMap> map, std::uint64_t seed,
                  bool current_on, EnvConfig base = {});

/// One JSONL line per step.
struct TraceRecord {
  int t = 0;
  Vec3 position = Vec3::Zero();
  int action = 0;
  double reward = 0.0;
  bool collided = false;
  double clearance = 0.0;
  double distance_to_goal = 0.0;
  bool terminated = false;
  bool truncated = false;
  bool goal_reached = false;
  /// Shortest ray hit distance (m); the sensor view of wall clearance.
  double sensor_clearance = 0.0;
};

TraceRecord make_trace_record(int t, int action, const StepResult& r, double sensor_range);
void write_trace_line(std::ostream& out, const TraceRecord& rec);
/// Throws DataError on malformed lines.
std::vector<TraceRecord> read_trace(std::istream& in);

}  // namespace hydronav
