#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hydronav/cave.hpp"
#include "hydronav/rewards.hpp"

namespace hydronav {

inline constexpr int kScenarioVersion = 1;

/// Optional overrides on top of the archetype's default current.
struct CurrentOverride {
  std::optional<CurrentMode> mode;
  std::optional<double> strength;
  std::optional<double> base_speed;
  std::optional<double> noise_amp;
  std::optional<double> frequency;
};

/// A scenario is a recipe: the world is rebuilt from it deterministically.
struct Scenario {
  /// "train1" | "train2" | "train3" | "test" | "surface" | "mesh".
  std::string source = "train1";
  std::uint64_t seed = 0;
  std::string mesh_path;
  std::string panels_path;
  WorldMode mode = WorldMode::underwater;
  CurrentOverride current;
  std::optional<Region> spawn;
  std::optional<Region> goal;
  double panel_spacing = 4.0;
  /// Archetype shape overrides (0 keeps the archetype default).
  int segments = 0;
  double segment_length = 0.0;
  /// Surface maps only.
  double obstacle_density = 0.12;

  /// Episode settings. max_steps 0 sizes the limit from the chain length.
  int max_steps = 0;
  bool terminate_on_collision = false;
  double spawn_yaw_jitter = 0.3;
  RewardConfig reward;
};

nlohmann::json to_json(const Scenario& s);
Scenario scenario_from_json(const nlohmann::json& j);
/// Schema violations as human-readable messages; empty when valid.
std::vector<std::string> validate_scenario(const nlohmann::json& j);

Scenario load_scenario(const std::filesystem::path& path);
void save_scenario(const std::filesystem::path& path, const Scenario& s);

/// Archetype scenario with the archetype's default settings.
Scenario archetype_scenario(const std::string& source, std::uint64_t seed);

/// Build the world described by a scenario.
CaveMap build_map(const Scenario& s, double vehicle_radius = 0.4);

}  // namespace hydronav
