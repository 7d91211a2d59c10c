#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "hydronav/common.hpp"
#include "hydronav/sdf.hpp"

namespace hydronav {

/// Solver parameters for the weakly compressible MLS-MPM fluid.
struct FluidParams {
  /// Fraction of the per-particle velocity gradient discarded at each
  /// grid-to-particle transfer. 0 keeps full APIC detail, 1 is pure PIC.
  double viscosity = 0.5;
  /// Tait bulk stiffness (Pa): p = stiffness * ((1/J)^7 - 1), clamped at 0.
  double stiffness = 50.0;
  double rest_density = 1000.0;
  Vec3 gravity{0.0, -9.81, 0.0};
  double dt = 1.0 / 240.0;
  double current_strength = 1.0;
  /// Free-slip walls on the outermost `wall_cells` node layers of the grid.
  bool box_walls = true;
  int wall_cells = 2;

  void validate() const;
};

/// Particle state, structure-of-arrays.
struct ParticleSet {
  std::vector<Vec3> positions;
  std::vector<Vec3> velocities;
  std::vector<double> masses;
  /// Affine velocity matrix C (APIC / MLS).
  std::vector<Mat3> affine;
  /// Volume ratio J = V / V0.
  std::vector<double> volume_ratio;
  std::vector<double> rest_volume;

  std::size_t count() const { return positions.size(); }
  void add(const Vec3& x, const Vec3& v, double mass, double rest_vol);
  double total_mass() const;
  Vec3 total_momentum() const;
  double kinetic_energy() const;
};

/// Collocated background grid. Nodes sit at origin + i * cell_size for
/// i in [0, resolution]. Only nodes touched by the last transfer are active,
/// so clearing and updating cost scales with particle count.
class MacGrid {
 public:
  MacGrid() = default;
  MacGrid(Vec3 origin, double cell_size, std::array<int, 3> resolution);

  const Vec3& origin() const { return origin_; }
  double cell_size() const { return cell_size_; }
  std::array<int, 3> resolution() const { return resolution_; }
  std::array<int, 3> node_dims() const {
    return {resolution_[0] + 1, resolution_[1] + 1, resolution_[2] + 1};
  }
  std::size_t node_count() const { return node_mass_.size(); }
  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(node_dims()[0]) *
               (static_cast<std::size_t>(j) + static_cast<std::size_t>(node_dims()[1]) * k);
  }
  std::array<int, 3> coords(std::size_t idx) const;
  Vec3 node_position(std::size_t idx) const;

  /// Region particles may occupy: one cell inside the grid on every side so
  /// the quadratic stencil never leaves the node array.
  Aabb particle_domain() const;
  Aabb extent() const;

  void clear();
  /// Mark node `idx` active and return it for accumulation.
  void touch(std::size_t idx);

  std::span<const std::uint32_t> active() const { return active_; }
  double mass(std::size_t idx) const { return node_mass_[idx]; }
  const Vec3& momentum(std::size_t idx) const { return node_momentum_[idx]; }
  const Vec3& velocity(std::size_t idx) const { return node_velocity_[idx]; }

  double& mass_ref(std::size_t idx) { return node_mass_[idx]; }
  Vec3& momentum_ref(std::size_t idx) { return node_momentum_[idx]; }
  Vec3& velocity_ref(std::size_t idx) { return node_velocity_[idx]; }

  double total_mass() const;
  Vec3 total_momentum() const;

 private:
  Vec3 origin_ = Vec3::Zero();
  double cell_size_ = 1.0;
  std::array<int, 3> resolution_{0, 0, 0};
  std::vector<double> node_mass_;
  std::vector<Vec3> node_momentum_;
  std::vector<Vec3> node_velocity_;
  std::vector<std::uint8_t> touched_;
  std::vector<std::uint32_t> active_;
};

/// Quadratic B-spline weights for one axis: base node index and the three
/// weights for nodes base, base+1, base+2.
struct SplineWeights {
  int base;
  std::array<double, 3> w;
};
SplineWeights quadratic_weights(double x_over_dx);

/// Particle-to-grid transfer (mass, APIC momentum, pressure impulse).
/// Clears the grid first. Throws DomainEscapeError on a particle outside
/// the particle domain.
void p2g(const ParticleSet& particles, MacGrid& grid, const FluidParams& params);

/// Momentum to velocity, gravity, free-slip on walls and inside solids
/// (`solid` may be null).
void grid_update(MacGrid& grid, const Sdf* solid, const FluidParams& params);

/// Grid-to-particle transfer: gathers velocity and affine matrix, updates
/// J, advects by dt and clamps positions into the particle domain.
void g2p(const MacGrid& grid, ParticleSet& particles, const FluidParams& params);

struct FluidState {
  ParticleSet particles;
  MacGrid grid;
  double time = 0.0;
};

/// One P2G -> grid update -> G2P tick. dt == 0 leaves the state untouched.
/// Throws ConfigError when max particle speed * dt exceeds the cell size.
void step(FluidState& state, const FluidParams& params, const Sdf* solid = nullptr);

/// Fill the water part of `box` (where `water` is positive, or all of it if
/// null) with `per_axis`^3 particles per cell at rest density.
FluidState make_block(const MacGrid& grid, const Aabb& box, const FluidParams& params,
                      int per_axis = 2, const Sdf* water = nullptr);

/// Dam-break tank: a cube of water with 8 particles per cell in the corner
/// of a closed box twice its size. Holds about `particles` particles.
FluidState make_tank(std::size_t particles, const FluidParams& params, double cell_size = 0.05);

/// Trilinear interpolation of grid velocity. Returns false if `p` is outside
/// the grid.
bool interpolate_velocity(const MacGrid& grid, const Vec3& p, Vec3& out);

// Particle dump: little-endian {"MPMF", u32 version, u64 count} followed by
// count x (3 x f32 position, 3 x f32 velocity).
inline constexpr std::uint32_t kParticleDumpVersion = 1;
void write_particle_dump(const std::filesystem::path& path, const ParticleSet& particles);
/// Positions and velocities only; masses and affine data are not stored.
ParticleSet read_particle_dump(const std::filesystem::path& path);

/// FNV-1a over the raw bytes of positions and velocities.
std::uint64_t state_hash(const ParticleSet& particles);

}  // namespace hydronav
