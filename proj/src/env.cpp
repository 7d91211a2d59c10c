#include "hydronav/env.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>

#include <nlohmann/json.hpp>

namespace hydronav {

void VehicleParams::validate() const {
  if (!(mass > 0 && radius > 0 && drag > 0 && inertia > 0 && angular_drag > 0))
    throw ConfigError("vehicle: mass, radius, drag, inertia and angular_drag must be > 0");
  if (!(max_thrust >= 0 && yaw_torque >= 0)) throw ConfigError("vehicle: thrust and torque must be >= 0");
}

Vec3 VehicleState::forward() const { return {std::cos(yaw), 0.0, -std::sin(yaw)}; }

void VehicleState::set_yaw(double y) {
  yaw = y;
  orientation = Eigen::Quaterniond(Eigen::AngleAxisd(y, Vec3::UnitY()));
}

ActionSpec ActionSpec::underwater(const VehicleParams& v) {
  return {{{"noop", 0, 0, 0},
           {"forward", v.max_thrust, 0, 0},
           {"yaw_left", 0, 0, v.yaw_torque},
           {"yaw_right", 0, 0, -v.yaw_torque},
           {"ascend", 0, v.max_thrust, 0},
           {"descend", 0, -v.max_thrust, 0}}};
}

ActionSpec ActionSpec::surface(const VehicleParams& v) {
  ActionSpec s = underwater(v);
  s.actions.resize(4);
  return s;
}

ActionSpec ActionSpec::for_mode(WorldMode m, const VehicleParams& v) {
  return m == WorldMode::surface ? surface(v) : underwater(v);
}

void ActionSpec::validate() const {
  if (actions.empty()) throw ConfigError("action set is empty");
  for (const auto& a : actions)
    if (!std::isfinite(a.forward) || !std::isfinite(a.vertical) || !std::isfinite(a.torque))
      throw ConfigError("action '" + a.name + "' has non-finite magnitudes");
}

std::vector<Vec3> SensorLayout::directions() const {
  std::vector<Vec3> out;
  const std::size_t per_fan = kNumRays / elevations.size();
  for (double e : elevations) {
    for (std::size_t i = 0; i < per_fan; ++i) {
      const double a = -0.5 * azimuth_span + azimuth_span * static_cast<double>(i) / (per_fan - 1);
      out.emplace_back(std::cos(e) * std::cos(a), std::sin(e), -std::cos(e) * std::sin(a));
    }
  }
  return out;
}

void SensorLayout::validate() const {
  if (elevations.empty() || kNumRays % elevations.size() != 0 || kNumRays / elevations.size() < 2)
    throw ConfigError("sensor fans must split 28 rays evenly, at least 2 per fan");
  if (!(max_range > 0)) throw ConfigError("sensor range must be > 0");
  if (!(azimuth_span > 0 && azimuth_span <= 2 * kPi)) throw ConfigError("azimuth span must be in (0, 2pi]");
}

ObservationLayout parse_observation_layout(const std::string& s) {
  if (s == "bearing_speed_yawrate") return ObservationLayout::bearing_speed_yawrate;
  if (s == "bearing_distance_speed") return ObservationLayout::bearing_distance_speed;
  throw ConfigError("unknown observation layout '" + s + "'");
}

std::string to_string(ObservationLayout l) {
  return l == ObservationLayout::bearing_distance_speed ? "bearing_distance_speed" : "bearing_speed_yawrate";
}

void EnvConfig::validate() const {
  vehicle.validate();
  reward.validate();
  if (!(dt > 0)) throw ConfigError("dt must be > 0");
  if (max_steps < 0) throw ConfigError("max_steps must be >= 0");
  if (spawn_yaw_jitter < 0) throw ConfigError("spawn_yaw_jitter must be >= 0");
  if (fluid_substeps < 1) throw ConfigError("fluid_substeps must be >= 1");
  if (!(fluid_cell > 0)) throw ConfigError("fluid_cell must be > 0");
  if (!(sensor_range > 0)) throw ConfigError("sensor range must be > 0");
}

EnvConfig env_config_for(const Scenario& s, EnvConfig base) {
  base.max_steps = s.max_steps;
  base.terminate_on_collision = s.terminate_on_collision;
  base.spawn_yaw_jitter = s.spawn_yaw_jitter;
  base.reward = s.reward;
  return base;
}

// ---------------------------------------------------------------------------

Environment::Environment(std::shared_ptr<const CaveMap> map, EnvConfig config)
    : map_(std::move(map)), config_(std::move(config)) {
  if (!map_ || !map_->sdf) throw ConfigError("environment needs a map");
  config_.validate();
  actions_ = config_.actions.empty() ? ActionSpec::for_mode(map_->mode, config_.vehicle) : ActionSpec{config_.actions};
  actions_.validate();
  sensors_ = SensorLayout::for_mode(map_->mode);
  if (!config_.sensor_elevations.empty()) sensors_.elevations = config_.sensor_elevations;
  sensors_.max_range = config_.sensor_range;
  sensors_.validate();
  ray_dirs_ = sensors_.directions();
  rewarder_ = DistanceRewarder(&map_->panels, 1.5 * config_.vehicle.radius);

  max_steps_ = config_.max_steps;
  if (max_steps_ == 0) {
    const double length = map_->chain_length() + (map_->spawn.position - map_->panels.points().front()).norm();
    const double per_step = config_.vehicle.max_speed() * config_.dt;
    max_steps_ = static_cast<int>(std::ceil(3.0 * length / per_step)) + 200;
  }
}

Environment::Environment(const Scenario& scenario, EnvConfig base)
    : Environment(std::make_shared<const CaveMap>(build_map(scenario, base.vehicle.radius)),
                  env_config_for(scenario, base)) {}

Observation Environment::reset(std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0xD1B54A32D192ED03ull);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  const bool surface = map_->mode == WorldMode::surface;
  const double r = config_.vehicle.radius;

  VehicleState v;
  v.radius = r;
  v.position = map_->constrain(map_->spawn.position);
  for (int attempt = 0; attempt < 64; ++attempt) {
    Vec3 o(uni(rng), surface ? 0.0 : uni(rng), uni(rng));
    if (o.squaredNorm() > 1.0) continue;
    const Vec3 p = map_->constrain(map_->spawn.position + map_->spawn.radius * o);
    if (map_->signed_distance(p) >= r) {
      v.position = p;
      break;
    }
  }
  const auto& panels = map_->panels.points();
  Vec3 dir = panels.front() - v.position;
  if (Vec3(dir.x(), 0, dir.z()).norm() < 1e-6 && panels.size() > 1) dir = panels[1] - v.position;
  v.set_yaw(std::atan2(-dir.z(), dir.x()) + config_.spawn_yaw_jitter * uni(rng));
  vehicle_ = v;

  current_ = CurrentField();
  fluid_.reset();
  if (config_.current_enabled) {
    const CurrentSpec& cs = map_->current;
    if (cs.mode == CurrentMode::procedural) {
      current_ = CurrentField::procedural(cs, map_->centerline, map_->bounds);
    } else if (cs.mode == CurrentMode::mpm) {
      const double dx = config_.fluid_cell;
      const Vec3 ext = map_->bounds.extent();
      const Vec3 origin = map_->bounds.min - Vec3::Constant(3 * dx);
      std::array<int, 3> res;
      for (int a = 0; a < 3; ++a) res[a] = static_cast<int>(std::ceil(ext[a] / dx)) + 6;
      MacGrid grid(origin, dx, res);
      fluid_params_ = FluidParams{};
      fluid_params_.gravity = Vec3::Zero();
      fluid_params_.dt = config_.dt / config_.fluid_substeps;
      fluid_params_.current_strength = cs.strength;
      auto state = std::make_shared<FluidState>(make_block(grid, map_->bounds, fluid_params_, 1, map_->sdf.get()));
      // Seed the flow along the tunnel; the solver carries it from there.
      const CurrentField seed_flow = CurrentField::procedural(cs, map_->centerline, map_->bounds);
      for (std::size_t i = 0; i < state->particles.count(); ++i) {
        Vec3 u = seed_flow.sample(state->particles.positions[i], 0.0).velocity;
        if (cs.strength > 0) u /= cs.strength;
        state->particles.velocities[i] = u;
      }
      fluid_ = state;
      current_ = CurrentField::mpm(fluid_, cs.strength);
    }
  }

  initial_distance_ = std::max(1e-9, rewarder_.reset(vehicle_.position));
  steps_ = 0;
  done_ = false;
  return observe();
}

void Environment::set_vehicle(const VehicleState& v) {
  vehicle_ = v;
  vehicle_.set_yaw(v.yaw);
  rewarder_.update(vehicle_.position);
}

CurrentSample Environment::current_at(const Vec3& p) const { return current_.sample(p, time()); }

void Environment::integrate(const Action& a, const Vec3& water) {
  const VehicleParams& vp = config_.vehicle;
  const double dt = config_.dt;
  const bool surface = map_->mode == WorldMode::surface;

  // Linear drag toward the water velocity has an exact solution for forces
  // held constant over the tick.
  Vec3 force = a.forward * vehicle_.forward() + Vec3(0, a.vertical, 0);
  Vec3 u = water;
  if (surface) {
    force.y() = 0;
    u.y() = 0;
  }
  const double k = vp.drag / vp.mass;
  const double e = std::exp(-k * dt);
  const Vec3 v_inf = force / vp.drag + u;
  const Vec3 dv = vehicle_.velocity - v_inf;
  vehicle_.position += v_inf * dt + dv * ((1.0 - e) / k);
  vehicle_.velocity = v_inf + dv * e;

  const double kb = vp.angular_drag / vp.inertia;
  const double eb = std::exp(-kb * dt);
  const double w_inf = a.torque / vp.angular_drag;
  const double dw = vehicle_.angular_velocity.y() - w_inf;
  const double yaw = vehicle_.yaw + w_inf * dt + dw * ((1.0 - eb) / kb);
  vehicle_.angular_velocity = Vec3(0, w_inf + dw * eb, 0);
  vehicle_.set_yaw(std::remainder(yaw, 2.0 * kPi));

  if (surface) {
    vehicle_.position.y() = map_->water_height;
    vehicle_.velocity.y() = 0;
  }
}

bool Environment::resolve_collision(const Vec3& from) {
  const double r = vehicle_.radius;
  Vec3& p = vehicle_.position;
  if (map_->signed_distance(p) >= r) return false;

  if (map_->signed_distance(from) >= r) {
    // Back up along the motion to the last point at contact distance.
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 40; ++i) {
      const double mid = 0.5 * (lo + hi);
      if (map_->signed_distance(from + mid * (p - from)) >= r)
        lo = mid;
      else
        hi = mid;
    }
    p = map_->constrain(from + lo * (p - from));
  } else {
    // Already in contact at the start of the tick: push out along the normal.
    for (int i = 0; i < 16; ++i) {
      const double d = map_->signed_distance(p);
      if (d >= r) break;
      Vec3 n = map_->normal(p);
      if (map_->mode == WorldMode::surface) n.y() = 0;
      if (n.norm() < 1e-12) break;
      p = map_->constrain(p + (r - d + 1e-9) * n.normalized());
    }
    if (map_->signed_distance(p) < r) p = from;
  }
  Vec3 n = map_->normal(p);
  if (map_->mode == WorldMode::surface) n.y() = 0;
  if (n.norm() > 1e-12) {
    n.normalize();
    const double vn = vehicle_.velocity.dot(n);
    if (vn < 0) vehicle_.velocity -= vn * n;
  }
  return true;
}

StepResult Environment::step(int action) {
  if (done_) throw ContractViolation("step() called on a finished episode; call reset() first");
  if (action < 0 || static_cast<std::size_t>(action) >= actions_.size())
    throw ContractViolation("action " + std::to_string(action) + " out of range [0, " +
                            std::to_string(actions_.size()) + ")");
  StepResult out;
  const Vec3 from = vehicle_.position;

  const CurrentSample water = current_at(from);
  out.info.out_of_domain = water.out_of_domain;
  integrate(actions_.actions[static_cast<std::size_t>(action)], water.velocity);
  if (fluid_)
    for (int i = 0; i < config_.fluid_substeps; ++i) hydronav::step(*fluid_, fluid_params_, map_->sdf.get());
  const bool collided = resolve_collision(from);
  ++steps_;

  const Vec3& p = vehicle_.position;
  const double d_now = rewarder_.update(p);
  const double d_prev = rewarder_.distance(from);
  const bool goal = (p - map_->goal.position).norm() <= map_->goal.radius;

  out.terminated = goal || (collided && config_.terminate_on_collision);
  out.truncated = !out.terminated && steps_ >= max_steps_;
  done_ = out.terminated || out.truncated;

  const auto r = rays();
  out.observation = observe_with(r);
  StepInfo& info = out.info;
  info.collided = collided;
  info.goal_reached = goal;
  info.distance_to_goal = d_now;
  info.clearance = map_->signed_distance(p);
  info.position = p;
  info.event = goal ? StepEvent::goal
                    : collided ? StepEvent::collision
                    : out.truncated ? StepEvent::timeout
                    : StepEvent::none;
  info.movement = movement_reward(d_prev, d_now, config_.reward);

  const RewardConfig& rc = config_.reward;
  switch (rc.mode) {
    case RewardMode::sparse:
      out.reward = sparse_reward(info.event, rc);
      break;
    case RewardMode::dense:
      out.reward = dense_reward(d_prev, d_now, collided, goal, rc);
      break;
    case RewardMode::safety:
      info.sensor = goal ? 0.0 : sensor_penalty(r, rc);
      out.reward = dense_reward(d_prev, d_now, collided, goal, rc) + info.sensor;
      break;
  }
  return out;
}

std::array<double, kNumRays> Environment::rays() const {
  std::array<double, kNumRays> out{};
  const Eigen::Matrix3d R = vehicle_.orientation.toRotationMatrix();
  for (std::size_t i = 0; i < kNumRays; ++i)
    out[i] = raycast(*map_, vehicle_.position, (R * ray_dirs_[i]).normalized(), sensors_.max_range);
  return out;
}

Observation Environment::observe() const { return observe_with(rays()); }

Observation Environment::observe_with(const std::array<double, kNumRays>& r) const {
  Observation o{};
  std::copy(r.begin(), r.end(), o.begin());
  const Vec3 to_goal = vehicle_.orientation.conjugate() * (map_->goal.position - vehicle_.position);
  const double bearing = (std::abs(to_goal.x()) + std::abs(to_goal.z()) > 0.0)
                             ? std::atan2(-to_goal.z(), to_goal.x()) / kPi
                             : 0.0;
  const double speed = std::clamp(vehicle_.velocity.dot(vehicle_.forward()) / config_.vehicle.max_speed(), -1.0, 1.0);
  const double yaw_rate = config_.vehicle.max_yaw_rate() > 0
                              ? std::clamp(vehicle_.angular_velocity.y() / config_.vehicle.max_yaw_rate(), -1.0, 1.0)
                              : 0.0;
  o[kNumRays] = bearing;
  switch (config_.layout) {
    case ObservationLayout::bearing_speed_yawrate:
      o[kNumRays + 1] = speed;
      o[kNumRays + 2] = yaw_rate;
      break;
    case ObservationLayout::bearing_distance_speed:
      o[kNumRays + 1] = std::clamp(rewarder_.distance(vehicle_.position) / initial_distance_, 0.0, 1.0);
      o[kNumRays + 2] = speed;
      break;
  }
  return o;
}

// ---------------------------------------------------------------------------

int Trajectory::collision_count() const {
  return static_cast<int>(std::count(collisions.begin(), collisions.end(), true));
}

Trajectory replay(const std::vector<int>& actions, std::shared_ptr<const CaveMap> map, std::uint64_t seed,
                  bool current_on, EnvConfig base) {
  base.current_enabled = current_on;
  base.terminate_on_collision = false;
  base.max_steps = std::numeric_limits<int>::max();
  Environment env(std::move(map), base);
  env.reset(seed);
  Trajectory tr;
  tr.positions.push_back(env.vehicle().position);
  for (int a : actions) {
    const StepResult r = env.step(a);
    tr.positions.push_back(r.info.position);
    tr.collisions.push_back(r.info.collided);
    if (r.terminated) break;
  }
  return tr;
}

Trajectory replay(const std::vector<int>& actions, const Scenario& scenario, std::uint64_t seed, bool current_on,
                  EnvConfig base) {
  auto map = std::make_shared<const CaveMap>(build_map(scenario, base.vehicle.radius));
  return replay(actions, std::move(map), seed, current_on, env_config_for(scenario, base));
}

TraceRecord make_trace_record(int t, int action, const StepResult& r, double sensor_range) {
  TraceRecord rec;
  rec.t = t;
  rec.position = r.info.position;
  rec.action = action;
  rec.reward = r.reward;
  rec.collided = r.info.collided;
  rec.clearance = r.info.clearance;
  rec.distance_to_goal = r.info.distance_to_goal;
  rec.terminated = r.terminated;
  rec.truncated = r.truncated;
  rec.goal_reached = r.info.goal_reached;
  rec.sensor_clearance =
      sensor_range * *std::min_element(r.observation.begin(), r.observation.begin() + kNumRays);
  return rec;
}

void write_trace_line(std::ostream& out, const TraceRecord& rec) {
  nlohmann::json j;
  j["t"] = rec.t;
  j["position"] = {rec.position.x(), rec.position.y(), rec.position.z()};
  j["action"] = rec.action;
  j["reward"] = rec.reward;
  j["collided"] = rec.collided;
  j["clearance"] = rec.clearance;
  j["distance_to_goal"] = rec.distance_to_goal;
  j["terminated"] = rec.terminated;
  j["truncated"] = rec.truncated;
  j["goal_reached"] = rec.goal_reached;
  j["sensor_clearance"] = rec.sensor_clearance;
  out << j.dump() << '\n';
}

std::vector<TraceRecord> read_trace(std::istream& in) {
  std::vector<TraceRecord> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      TraceRecord r;
      r.t = j.at("t").get<int>();
      const auto& p = j.at("position");
      r.position = Vec3(p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>());
      r.action = j.at("action").get<int>();
      r.reward = j.at("reward").get<double>();
      r.collided = j.at("collided").get<bool>();
      r.clearance = j.at("clearance").get<double>();
      r.distance_to_goal = j.at("distance_to_goal").get<double>();
      r.terminated = j.value("terminated", false);
      r.truncated = j.value("truncated", false);
      r.goal_reached = j.value("goal_reached", false);
      r.sensor_clearance = j.value("sensor_clearance", 0.0);
      out.push_back(r);
    } catch (const nlohmann::json::exception& e) {
      throw DataError("trace line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace hydronav
