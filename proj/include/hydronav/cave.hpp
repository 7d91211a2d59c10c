#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hydronav/common.hpp"
#include "hydronav/current.hpp"
#include "hydronav/sdf.hpp"

namespace hydronav {

enum class Archetype { train1, train2, train3, test };
enum class WorldMode { underwater, surface };

Archetype parse_archetype(const std::string& s);
std::string to_string(Archetype a);
WorldMode parse_world_mode(const std::string& s);
std::string to_string(WorldMode m);

/// Value the map returns for points outside its bounds.
inline constexpr double kOutsideDistance = -1.0e3;

struct Region {
  Vec3 position = Vec3::Zero();
  double radius = 1.0;
};

/// Ordered panel points tracing the tunnel from the spawn side to the goal.
class PanelChain {
 public:
  PanelChain() = default;
  explicit PanelChain(std::vector<Vec3> points);

  const std::vector<Vec3>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  /// Sum of segment lengths from panel k to the last panel.
  double tail_length(std::size_t k) const { return tail_[k]; }
  /// |p - panels[k]| + tail_length(k).
  double distance_via(std::size_t k, const Vec3& p) const;

 private:
  std::vector<Vec3> points_;
  std::vector<double> tail_;
};

/// A navigable world: SDF geometry plus everything an episode needs.
struct CaveMap {
  SdfPtr sdf;
  Aabb bounds;
  PanelChain panels;
  Region spawn;
  Region goal;
  CurrentSpec current;
  WorldMode mode = WorldMode::underwater;
  /// Fixed water-plane height for surface maps.
  double water_height = 0.0;

  // Generator metadata (empty for imported meshes).
  std::vector<Vec3> centerline;
  /// Radius of each generated segment, in order.
  std::vector<double> segment_radii;
  /// Signed yaw change of each generated segment, radians.
  std::vector<double> segment_turns;

  /// Surface maps pin the query height to the water plane.
  Vec3 constrain(const Vec3& p) const;
  /// Clearance to the nearest wall (positive in water). Outside bounds
  /// returns kOutsideDistance.
  double signed_distance(const Vec3& p) const;
  /// Unit gradient of the SDF (points into water).
  Vec3 normal(const Vec3& p) const;
  /// Check spawn/goal clearance and panel reachability for a vehicle of
  /// the given radius. Returns an empty string when all invariants hold.
  std::string check_invariants(double vehicle_radius) const;
  /// Total panel-chain length from the first panel.
  double chain_length() const { return panels.empty() ? 0.0 : panels.tail_length(0); }
};

/// Normalised hit distance in [0,1] by sphere tracing; exactly 1.0 when
/// nothing is hit within max_range, 0.0 when the origin is inside rock.
double raycast(const Sdf& sdf, const Vec3& origin, const Vec3& dir, double max_range);
double raycast(const CaveMap& map, const Vec3& origin, const Vec3& dir, double max_range);

/// Along-tunnel distance to the goal from the panel chain. Panels are passed
/// once the agent comes within the capture radius, or once a later panel
/// becomes the nearest unpassed one; progress never goes backwards.
class DistanceRewarder {
 public:
  DistanceRewarder() = default;
  DistanceRewarder(const PanelChain* chain, double capture_radius);

  /// Forget progress, then update at p.
  double reset(const Vec3& p);
  /// Advance progress using p and return the distance to goal.
  double update(const Vec3& p);
  /// Distance at p under the current progress, without advancing it.
  double distance(const Vec3& p) const;
  std::size_t target() const { return target_; }
  double capture_radius() const { return capture_; }

 private:
  const PanelChain* chain_ = nullptr;
  double capture_ = 0.6;
  std::size_t target_ = 0;
};

/// Stateless distance_to_goal: progress computed from scratch at p.
double distance_to_goal(const CaveMap& map, const Vec3& p, double capture_radius);

struct CaveOptions {
  double vehicle_radius = 0.4;
  double panel_spacing = 4.0;
  /// Override the archetype's segment count / length (0 keeps defaults).
  int segments = 0;
  double segment_length = 0.0;
  /// Lattice spacing used to bake the SDF (0 keeps the analytic field).
  double lattice_spacing = 0.25;
  int max_retries = 16;
};

/// Procedural swept-capsule cave for one of the training/test archetypes.
CaveMap generate_cave(Archetype archetype, std::uint64_t seed, const CaveOptions& options = {});

struct SurfaceOptions {
  double vehicle_radius = 0.4;
  double panel_spacing = 4.0;
  /// Rocks per square metre of water.
  double obstacle_density = 0.12;
  double width = 10.0;
  double depth = 7.0;
  int max_retries = 32;
};

/// Planar water region with random rock columns; spawn, goal and layout
/// are drawn from the seed and a feasible path is guaranteed.
CaveMap generate_surface_map(std::uint64_t seed, const SurfaceOptions& options = {});

struct MeshImportOptions {
  /// Lattice nodes along the longest axis.
  int resolution = 128;
  double vehicle_radius = 0.4;
};

class MeshImportError : public DataError {
 public:
  using DataError::DataError;
};

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
};

/// Wavefront OBJ (v / f records; polygons are fan-triangulated).
TriangleMesh read_obj(const std::filesystem::path& path);
/// True when every undirected edge is shared by exactly two triangles.
bool is_watertight(const TriangleMesh& mesh);
/// Signed distance lattice of a closed mesh; inside is positive. Sign from
/// ray-parity counting along +x.
std::shared_ptr<SampledSdf> mesh_to_sdf(const TriangleMesh& mesh, int resolution);

/// Mesh cave: SDF from the OBJ file, panels/spawn/goal from the JSON panel
/// spec {"panels": [[x,y,z],...], "spawn": {...}, "goal": {...}}.
CaveMap load_mesh_cave(const std::filesystem::path& mesh_path, const std::filesystem::path& panel_spec,
                       const MeshImportOptions& options = {});

/// Breadth-first search on the water lattice (cells whose clearance exceeds
/// `clearance`) from `from` to `to`. Returns the cell-centre path, empty if
/// unreachable. Works in the xz-plane for surface maps.
std::vector<Vec3> lattice_path(const CaveMap& map, const Vec3& from, const Vec3& to, double spacing,
                               double clearance);

}  // namespace hydronav
