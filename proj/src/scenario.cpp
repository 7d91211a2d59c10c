#include "hydronav/scenario.hpp"

#include <fstream>
#include <sstream>

namespace hydronav {

using nlohmann::json;

namespace {

json region_json(const Region& r) {
  return {{"position", {r.position.x(), r.position.y(), r.position.z()}}, {"radius", r.radius}};
}

Region region_from(const json& j) {
  const auto& p = j.at("position");
  return {Vec3(p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>()), j.at("radius").get<double>()};
}

json reward_json(const RewardConfig& r) {
  return {{"mode", to_string(r.mode)},
          {"sparse_goal", r.sparse_goal},
          {"sparse_collision", r.sparse_collision},
          {"sparse_fail", r.sparse_fail},
          {"dense_goal", r.dense_goal},
          {"dense_collision", r.dense_collision},
          {"timestep", r.timestep},
          {"movement_scale", r.movement_scale},
          {"sensor_scale", r.sensor_scale}};
}

RewardConfig reward_from(const json& j) {
  RewardConfig r;
  if (j.contains("mode")) r.mode = parse_reward_mode(j["mode"].get<std::string>());
  r.sparse_goal = j.value("sparse_goal", r.sparse_goal);
  r.sparse_collision = j.value("sparse_collision", r.sparse_collision);
  r.sparse_fail = j.value("sparse_fail", r.sparse_fail);
  r.dense_goal = j.value("dense_goal", r.dense_goal);
  r.dense_collision = j.value("dense_collision", r.dense_collision);
  r.timestep = j.value("timestep", r.timestep);
  r.movement_scale = j.value("movement_scale", r.movement_scale);
  r.sensor_scale = j.value("sensor_scale", r.sensor_scale);
  return r;
}

bool is_archetype_name(const std::string& s) {
  return s == "train1" || s == "train2" || s == "train3" || s == "test" || s == "surface";
}

}  // namespace

json to_json(const Scenario& s) {
  json j;
  j["scenario_version"] = kScenarioVersion;
  if (s.source == "mesh")
    j["mesh"] = {{"path", s.mesh_path}, {"panels", s.panels_path}};
  else
    j["archetype"] = s.source;
  j["seed"] = s.seed;
  j["mode"] = to_string(s.mode);
  json cur = json::object();
  if (s.current.mode) cur["mode"] = to_string(*s.current.mode);
  if (s.current.strength) cur["strength"] = *s.current.strength;
  if (s.current.base_speed) cur["base_speed"] = *s.current.base_speed;
  if (s.current.noise_amp) cur["noise_amp"] = *s.current.noise_amp;
  if (s.current.frequency) cur["frequency"] = *s.current.frequency;
  j["current"] = cur;
  if (s.spawn) j["spawn"] = region_json(*s.spawn);
  if (s.goal) j["goal"] = region_json(*s.goal);
  j["panel_spacing"] = s.panel_spacing;
  j["segments"] = s.segments;
  j["segment_length"] = s.segment_length;
  if (s.source == "surface") j["obstacle_density"] = s.obstacle_density;
  j["episode"] = {{"max_steps", s.max_steps},
                  {"terminate_on_collision", s.terminate_on_collision},
                  {"spawn_yaw_jitter", s.spawn_yaw_jitter}};
  j["reward"] = reward_json(s.reward);
  return j;
}

std::vector<std::string> validate_scenario(const json& j) {
  std::vector<std::string> err;
  auto need_number = [&](const json& obj, const char* key, bool non_negative) {
    if (!obj.contains(key)) return;
    if (!obj[key].is_number()) {
      err.push_back(std::string(key) + " must be a number");
      return;
    }
    if (non_negative && obj[key].get<double>() < 0.0) err.push_back(std::string(key) + " must be >= 0");
  };
  if (!j.is_object()) return {"scenario must be a JSON object"};
  if (!j.contains("scenario_version"))
    err.push_back("missing scenario_version");
  else if (!j["scenario_version"].is_number_integer() || j["scenario_version"].get<int>() != kScenarioVersion)
    err.push_back("unsupported scenario_version (expected " + std::to_string(kScenarioVersion) + ")");
  const bool has_arch = j.contains("archetype"), has_mesh = j.contains("mesh");
  if (has_arch == has_mesh) err.push_back("exactly one of 'archetype' or 'mesh' is required");
  if (has_arch && (!j["archetype"].is_string() || !is_archetype_name(j["archetype"].get<std::string>())))
    err.push_back("archetype must be one of train1, train2, train3, test, surface");
  if (has_mesh) {
    const auto& m = j["mesh"];
    if (!m.is_object() || !m.contains("path") || !m["path"].is_string() || !m.contains("panels") ||
        !m["panels"].is_string())
      err.push_back("mesh must be {\"path\": string, \"panels\": string}");
  }
  if (!j.contains("seed") || !j["seed"].is_number_unsigned()) err.push_back("seed must be a non-negative integer");
  if (j.contains("mode")) {
    if (!j["mode"].is_string() || (j["mode"] != "underwater" && j["mode"] != "surface"))
      err.push_back("mode must be underwater or surface");
    else if (has_arch && j["archetype"].is_string() &&
             ((j["archetype"] == "surface") != (j["mode"] == "surface")))
      err.push_back("mode must be surface exactly when archetype is surface");
  }
  if (j.contains("current")) {
    const auto& c = j["current"];
    if (!c.is_object()) {
      err.push_back("current must be an object");
    } else {
      if (c.contains("mode") && (!c["mode"].is_string() || (c["mode"] != "none" && c["mode"] != "procedural" &&
                                                            c["mode"] != "mpm")))
        err.push_back("current.mode must be none, procedural or mpm");
      for (const char* k : {"strength", "base_speed", "noise_amp", "frequency"}) need_number(c, k, true);
    }
  }
  for (const char* r : {"spawn", "goal"}) {
    if (!j.contains(r)) continue;
    const auto& o = j[r];
    if (!o.is_object() || !o.contains("position") || !o["position"].is_array() || o["position"].size() != 3 ||
        !o.contains("radius") || !o["radius"].is_number() || o["radius"].get<double>() <= 0.0)
      err.push_back(std::string(r) + " must be {\"position\": [x,y,z], \"radius\": > 0}");
  }
  need_number(j, "panel_spacing", true);
  if (j.contains("panel_spacing") && j["panel_spacing"].is_number() && j["panel_spacing"].get<double>() <= 0.0)
    err.push_back("panel_spacing must be > 0");
  if (j.contains("segments") && !j["segments"].is_number_integer()) err.push_back("segments must be an integer");
  need_number(j, "segment_length", true);
  need_number(j, "obstacle_density", true);
  if (j.contains("episode")) {
    const auto& e = j["episode"];
    if (!e.is_object()) {
      err.push_back("episode must be an object");
    } else {
      if (e.contains("max_steps") && (!e["max_steps"].is_number_integer() || e["max_steps"].get<int>() < 0))
        err.push_back("episode.max_steps must be an integer >= 0");
      if (e.contains("terminate_on_collision") && !e["terminate_on_collision"].is_boolean())
        err.push_back("episode.terminate_on_collision must be a boolean");
      need_number(e, "spawn_yaw_jitter", true);
    }
  }
  if (j.contains("reward")) {
    const auto& r = j["reward"];
    if (!r.is_object()) {
      err.push_back("reward must be an object");
    } else {
      if (r.contains("mode") &&
          (!r["mode"].is_string() || (r["mode"] != "sparse" && r["mode"] != "dense" && r["mode"] != "safety")))
        err.push_back("reward.mode must be sparse, dense or safety");
      for (const char* k : {"sparse_goal", "sparse_collision", "sparse_fail", "dense_goal", "dense_collision",
                            "timestep", "movement_scale", "sensor_scale"})
        need_number(r, k, false);
    }
  }
  return err;
}

Scenario scenario_from_json(const json& j) {
  const auto errors = validate_scenario(j);
  if (!errors.empty()) {
    std::ostringstream os;
    os << "invalid scenario:";
    for (const auto& e : errors) os << "\n  - " << e;
    throw ConfigError(os.str());
  }
  Scenario s;
  if (j.contains("mesh")) {
    s.source = "mesh";
    s.mesh_path = j["mesh"]["path"].get<std::string>();
    s.panels_path = j["mesh"]["panels"].get<std::string>();
  } else {
    s.source = j["archetype"].get<std::string>();
  }
  s.seed = j["seed"].get<std::uint64_t>();
  s.mode = s.source == "surface" ? WorldMode::surface : WorldMode::underwater;
  if (j.contains("current")) {
    const auto& c = j["current"];
    if (c.contains("mode")) s.current.mode = parse_current_mode(c["mode"].get<std::string>());
    if (c.contains("strength")) s.current.strength = c["strength"].get<double>();
    if (c.contains("base_speed")) s.current.base_speed = c["base_speed"].get<double>();
    if (c.contains("noise_amp")) s.current.noise_amp = c["noise_amp"].get<double>();
    if (c.contains("frequency")) s.current.frequency = c["frequency"].get<double>();
  }
  if (j.contains("spawn")) s.spawn = region_from(j["spawn"]);
  if (j.contains("goal")) s.goal = region_from(j["goal"]);
  s.panel_spacing = j.value("panel_spacing", s.panel_spacing);
  s.segments = j.value("segments", s.segments);
  s.segment_length = j.value("segment_length", s.segment_length);
  s.obstacle_density = j.value("obstacle_density", s.obstacle_density);
  if (j.contains("episode")) {
    const auto& e = j["episode"];
    s.max_steps = e.value("max_steps", s.max_steps);
    s.terminate_on_collision = e.value("terminate_on_collision", s.terminate_on_collision);
    s.spawn_yaw_jitter = e.value("spawn_yaw_jitter", s.spawn_yaw_jitter);
  }
  if (j.contains("reward")) s.reward = reward_from(j["reward"]);
  s.reward.validate();
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("scenario " + path.string() + ": " + e.what());
  }
  Scenario s = scenario_from_json(j);
  if (s.source == "mesh") {
    const auto dir = path.parent_path();
    if (std::filesystem::path(s.mesh_path).is_relative()) s.mesh_path = (dir / s.mesh_path).string();
    if (std::filesystem::path(s.panels_path).is_relative()) s.panels_path = (dir / s.panels_path).string();
  }
  return s;
}

void save_scenario(const std::filesystem::path& path, const Scenario& s) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write scenario " + path.string());
  out << to_json(s).dump(2) << '\n';
}

Scenario archetype_scenario(const std::string& source, std::uint64_t seed) {
  if (!is_archetype_name(source))
    throw ConfigError("unknown archetype '" + source + "' (expected train1, train2, train3, test or surface)");
  Scenario s;
  s.source = source;
  s.seed = seed;
  s.mode = source == "surface" ? WorldMode::surface : WorldMode::underwater;
  return s;
}

CaveMap build_map(const Scenario& s, double vehicle_radius) {
  CaveMap map;
  if (s.source == "mesh") {
    MeshImportOptions opt;
    opt.vehicle_radius = vehicle_radius;
    map = load_mesh_cave(s.mesh_path, s.panels_path, opt);
  } else if (s.source == "surface") {
    SurfaceOptions opt;
    opt.vehicle_radius = vehicle_radius;
    opt.panel_spacing = s.panel_spacing;
    opt.obstacle_density = s.obstacle_density;
    map = generate_surface_map(s.seed, opt);
  } else {
    CaveOptions opt;
    opt.vehicle_radius = vehicle_radius;
    opt.panel_spacing = s.panel_spacing;
    opt.segments = s.segments;
    opt.segment_length = s.segment_length;
    map = generate_cave(parse_archetype(s.source), s.seed, opt);
  }
  map.current.seed = s.seed;
  if (s.current.mode) map.current.mode = *s.current.mode;
  if (s.current.strength) map.current.strength = *s.current.strength;
  if (s.current.base_speed) map.current.base_speed = *s.current.base_speed;
  if (s.current.noise_amp) map.current.noise_amp = *s.current.noise_amp;
  if (s.current.frequency) map.current.frequency = *s.current.frequency;
  if (s.spawn) map.spawn = *s.spawn;
  if (s.goal) {
    map.goal = *s.goal;
    // Keep the chain ending inside the goal region.
    std::vector<Vec3> pts = map.panels.points();
    if ((pts.back() - map.goal.position).norm() > map.goal.radius) {
      pts.push_back(map.goal.position);
      map.panels = PanelChain(pts);
    }
  }
  const std::string broken = map.check_invariants(vehicle_radius);
  if (!broken.empty()) throw ConfigError("scenario world violates invariants: " + broken);
  return map;
}

}  // namespace hydronav
