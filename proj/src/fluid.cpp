#include "hydronav/fluid.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace hydronav {

void FluidParams::validate() const {
  if (!(dt >= 0.0) || !std::isfinite(dt)) throw ConfigError("fluid: dt must be finite and >= 0");
  if (!(viscosity >= 0.0 && viscosity <= 1.0)) throw ConfigError("fluid: viscosity must lie in [0,1]");
  if (!(stiffness >= 0.0)) throw ConfigError("fluid: stiffness must be >= 0");
  if (!(rest_density > 0.0)) throw ConfigError("fluid: rest_density must be > 0");
  if (!(current_strength >= 0.0)) throw ConfigError("fluid: current_strength must be >= 0");
  if (wall_cells < 0) throw ConfigError("fluid: wall_cells must be >= 0");
}

void ParticleSet::add(const Vec3& x, const Vec3& v, double mass, double rest_vol) {
  positions.push_back(x);
  velocities.push_back(v);
  masses.push_back(mass);
  affine.push_back(Mat3::Zero());
  volume_ratio.push_back(1.0);
  rest_volume.push_back(rest_vol);
}

double ParticleSet::total_mass() const {
  double m = 0.0;
  for (double mi : masses) m += mi;
  return m;
}

Vec3 ParticleSet::total_momentum() const {
  Vec3 p = Vec3::Zero();
  for (std::size_t i = 0; i < count(); ++i) p += masses[i] * velocities[i];
  return p;
}

double ParticleSet::kinetic_energy() const {
  double e = 0.0;
  for (std::size_t i = 0; i < count(); ++i) e += 0.5 * masses[i] * velocities[i].squaredNorm();
  return e;
}

MacGrid::MacGrid(Vec3 origin, double cell_size, std::array<int, 3> resolution)
    : origin_(origin), cell_size_(cell_size), resolution_(resolution) {
  if (!(cell_size > 0.0)) throw ConfigError("grid: cell_size must be > 0");
  for (int r : resolution)
    if (r < 4) throw ConfigError("grid: need at least 4 cells per axis");
  const auto d = node_dims();
  const std::size_t n = static_cast<std::size_t>(d[0]) * d[1] * d[2];
  node_mass_.assign(n, 0.0);
  node_momentum_.assign(n, Vec3::Zero());
  node_velocity_.assign(n, Vec3::Zero());
  touched_.assign(n, 0);
}

std::array<int, 3> MacGrid::coords(std::size_t idx) const {
  const auto d = node_dims();
  const int i = static_cast<int>(idx % d[0]);
  const int j = static_cast<int>((idx / d[0]) % d[1]);
  const int k = static_cast<int>(idx / (static_cast<std::size_t>(d[0]) * d[1]));
  return {i, j, k};
}

Vec3 MacGrid::node_position(std::size_t idx) const {
  const auto c = coords(idx);
  return origin_ + cell_size_ * Vec3(c[0], c[1], c[2]);
}

Aabb MacGrid::particle_domain() const {
  Vec3 hi(resolution_[0] - 1, resolution_[1] - 1, resolution_[2] - 1);
  return {origin_ + Vec3::Constant(cell_size_), origin_ + cell_size_ * hi};
}

Aabb MacGrid::extent() const {
  return {origin_, origin_ + cell_size_ * Vec3(resolution_[0], resolution_[1], resolution_[2])};
}

void MacGrid::clear() {
  for (std::uint32_t idx : active_) {
    node_mass_[idx] = 0.0;
    node_momentum_[idx].setZero();
    node_velocity_[idx].setZero();
    touched_[idx] = 0;
  }
  active_.clear();
}

void MacGrid::touch(std::size_t idx) {
  if (!touched_[idx]) {
    touched_[idx] = 1;
    active_.push_back(static_cast<std::uint32_t>(idx));
  }
}

double MacGrid::total_mass() const {
  double m = 0.0;
  for (std::uint32_t idx : active_) m += node_mass_[idx];
  return m;
}

Vec3 MacGrid::total_momentum() const {
  Vec3 p = Vec3::Zero();
  for (std::uint32_t idx : active_) p += node_momentum_[idx];
  return p;
}

SplineWeights quadratic_weights(double u) {
  SplineWeights s;
  s.base = static_cast<int>(std::floor(u - 0.5));
  const double fx = u - s.base;
  s.w[0] = 0.5 * (1.5 - fx) * (1.5 - fx);
  s.w[1] = 0.75 - (fx - 1.0) * (fx - 1.0);
  s.w[2] = 0.5 * (fx - 0.5) * (fx - 0.5);
  return s;
}

namespace {

double tait_pressure(double stiffness, double J) {
  const double inv = 1.0 / J;
  const double inv7 = inv * inv * inv * inv * inv * inv * inv;
  return std::max(0.0, stiffness * (inv7 - 1.0));
}

struct Stencil {
  SplineWeights axis[3];
};

Stencil stencil_for(const MacGrid& grid, const Vec3& x) {
  Stencil s;
  const Vec3 u = (x - grid.origin()) / grid.cell_size();
  for (int a = 0; a < 3; ++a) s.axis[a] = quadratic_weights(u[a]);
  return s;
}

}  // namespace

void p2g(const ParticleSet& particles, MacGrid& grid, const FluidParams& params) {
  grid.clear();
  const double dx = grid.cell_size();
  const double inv_d = 4.0 / (dx * dx);
  const Aabb domain = grid.particle_domain();
  for (std::size_t p = 0; p < particles.count(); ++p) {
    const Vec3& x = particles.positions[p];
    if (!domain.contains(x)) {
      std::ostringstream os;
      os << "particle " << p << " escaped the fluid domain at (" << x.transpose() << ")";
      throw DomainEscapeError(p, os.str());
    }
    const double m = particles.masses[p];
    const double J = particles.volume_ratio[p];
    const double pressure = tait_pressure(params.stiffness, J);
    // Kirchhoff stress for a fluid is -p J I; the MLS-MPM impulse is
    // -dt V0 M^-1 tau, folded into the affine term.
    const Mat3 affine = m * particles.affine[p] +
                        (params.dt * particles.rest_volume[p] * inv_d * pressure * J) * Mat3::Identity();
    const Vec3 mv = m * particles.velocities[p];
    const Stencil s = stencil_for(grid, x);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) {
          const double w = s.axis[0].w[i] * s.axis[1].w[j] * s.axis[2].w[k];
          const int ni = s.axis[0].base + i, nj = s.axis[1].base + j, nk = s.axis[2].base + k;
          const std::size_t idx = grid.index(ni, nj, nk);
          const Vec3 dpos = grid.origin() + dx * Vec3(ni, nj, nk) - x;
          grid.touch(idx);
          grid.mass_ref(idx) += w * m;
          grid.momentum_ref(idx) += w * (mv + affine * dpos);
        }
  }
}

void grid_update(MacGrid& grid, const Sdf* solid, const FluidParams& params) {
  const auto dims = grid.node_dims();
  const int wall = params.wall_cells;
  for (std::uint32_t idx : grid.active()) {
    const double m = grid.mass(idx);
    Vec3 v = Vec3::Zero();
    if (m > 0.0) v = grid.momentum(idx) / m + params.dt * params.gravity;
    if (params.box_walls) {
      const auto c = grid.coords(idx);
      for (int a = 0; a < 3; ++a) {
        if (c[a] < wall && v[a] < 0.0) v[a] = 0.0;
        if (c[a] > dims[a] - 1 - wall && v[a] > 0.0) v[a] = 0.0;
      }
    }
    if (solid) {
      const Vec3 x = grid.node_position(idx);
      if (solid->distance(x) < 0.0) {
        const Vec3 n = solid->gradient(x);
        v -= v.dot(n) * n;
      }
    }
    grid.velocity_ref(idx) = v;
  }
}

void g2p(const MacGrid& grid, ParticleSet& particles, const FluidParams& params) {
  const double dx = grid.cell_size();
  const double inv_d = 4.0 / (dx * dx);
  const Aabb domain = grid.particle_domain();
  for (std::size_t p = 0; p < particles.count(); ++p) {
    Vec3& x = particles.positions[p];
    const Stencil s = stencil_for(grid, x);
    Vec3 v = Vec3::Zero();
    Mat3 b = Mat3::Zero();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) {
          const double w = s.axis[0].w[i] * s.axis[1].w[j] * s.axis[2].w[k];
          const int ni = s.axis[0].base + i, nj = s.axis[1].base + j, nk = s.axis[2].base + k;
          const Vec3& vi = grid.velocity(grid.index(ni, nj, nk));
          const Vec3 dpos = grid.origin() + dx * Vec3(ni, nj, nk) - x;
          v += w * vi;
          b += w * vi * dpos.transpose();
        }
    const Mat3 c = inv_d * b;
    particles.volume_ratio[p] *= 1.0 + params.dt * c.trace();
    particles.affine[p] = (1.0 - params.viscosity) * c;
    particles.velocities[p] = v;
    x += params.dt * v;
    x = x.cwiseMax(domain.min).cwiseMin(domain.max);
  }
}

void step(FluidState& state, const FluidParams& params, const Sdf* solid) {
  if (params.dt == 0.0) return;
  params.validate();
  double vmax = 0.0;
  for (const Vec3& v : state.particles.velocities) vmax = std::max(vmax, v.norm());
  if (vmax * params.dt > state.grid.cell_size()) {
    std::ostringstream os;
    os << "fluid: CFL violated (max speed " << vmax << " m/s * dt " << params.dt << " s > cell "
       << state.grid.cell_size() << " m)";
    throw ConfigError(os.str());
  }
  p2g(state.particles, state.grid, params);
  grid_update(state.grid, solid, params);
  g2p(state.grid, state.particles, params);
  state.time += params.dt;
}

FluidState make_block(const MacGrid& grid, const Aabb& box, const FluidParams& params,
                      int per_axis, const Sdf* water) {
  FluidState st;
  st.grid = grid;
  const double dx = grid.cell_size();
  const double h = dx / per_axis;
  const double vol = h * h * h;
  const double mass = params.rest_density * vol;
  const Aabb dom = grid.particle_domain();
  Aabb b{box.min.cwiseMax(dom.min), box.max.cwiseMin(dom.max)};
  const Eigen::Vector3i n = ((b.max - b.min) / h).array().floor().cast<int>();
  for (int k = 0; k < n.z(); ++k)
    for (int j = 0; j < n.y(); ++j)
      for (int i = 0; i < n.x(); ++i) {
        const Vec3 x = b.min + h * Vec3(i + 0.5, j + 0.5, k + 0.5);
        if (water && water->distance(x) <= 0.0) continue;
        st.particles.add(x, Vec3::Zero(), mass, vol);
      }
  return st;
}

FluidState make_tank(std::size_t particles, const FluidParams& params, double cell_size) {
  if (particles == 0 || !(cell_size > 0.0)) throw ConfigError("make_tank: need particles > 0 and cell_size > 0");
  const int n = std::max(1, static_cast<int>(std::lround(std::cbrt(static_cast<double>(particles) / 8.0))));
  const int pad = params.wall_cells + 1;
  const int side = 2 * n + 2 * pad;
  const MacGrid grid(Vec3::Zero(), cell_size, {side, side, n + 2 * pad});
  const Vec3 lo = Vec3::Constant(pad * cell_size);
  const Aabb box{lo, lo + Vec3::Constant(n * cell_size + 1e-9 * cell_size)};
  return make_block(grid, box, params, 2);
}

bool interpolate_velocity(const MacGrid& grid, const Vec3& p, Vec3& out) {
  const Aabb ext = grid.extent();
  if (!ext.contains(p)) return false;
  const auto res = grid.resolution();
  int base[3];
  double f[3];
  for (int a = 0; a < 3; ++a) {
    const double u = (p[a] - grid.origin()[a]) / grid.cell_size();
    base[a] = std::clamp(static_cast<int>(std::floor(u)), 0, res[a] - 1);
    f[a] = u - base[a];
  }
  out.setZero();
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k) {
        const double w = (i ? f[0] : 1 - f[0]) * (j ? f[1] : 1 - f[1]) * (k ? f[2] : 1 - f[2]);
        if (w == 0.0) continue;
        out += w * grid.velocity(grid.index(base[0] + i, base[1] + j, base[2] + k));
      }
  return true;
}

namespace {

void put_bytes(std::ostream& os, std::uint64_t v, int n) {
  for (int i = 0; i < n; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t get_bytes(std::istream& is, int n) {
  std::uint64_t v = 0;
  for (int i = 0; i < n; ++i) {
    const int c = is.get();
    if (c == EOF) throw DataError("particle dump: truncated file");
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return v;
}

void put_f32(std::ostream& os, double x) {
  put_bytes(os, std::bit_cast<std::uint32_t>(static_cast<float>(x)), 4);
}

double get_f32(std::istream& is) {
  return std::bit_cast<float>(static_cast<std::uint32_t>(get_bytes(is, 4)));
}

}  // namespace

void write_particle_dump(const std::filesystem::path& path, const ParticleSet& particles) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("particle dump: cannot open " + path.string());
  os.write("MPMF", 4);
  put_bytes(os, kParticleDumpVersion, 4);
  put_bytes(os, particles.count(), 8);
  for (std::size_t i = 0; i < particles.count(); ++i) {
    for (int a = 0; a < 3; ++a) put_f32(os, particles.positions[i][a]);
    for (int a = 0; a < 3; ++a) put_f32(os, particles.velocities[i][a]);
  }
  if (!os) throw DataError("particle dump: write failed for " + path.string());
}

ParticleSet read_particle_dump(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("particle dump: cannot open " + path.string());
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "MPMF", 4) != 0)
    throw DataError("particle dump: bad magic in " + path.string());
  const auto version = static_cast<std::uint32_t>(get_bytes(is, 4));
  if (version != kParticleDumpVersion) throw DataError("particle dump: unsupported version");
  const std::uint64_t count = get_bytes(is, 8);
  ParticleSet ps;
  for (std::uint64_t i = 0; i < count; ++i) {
    Vec3 x, v;
    for (int a = 0; a < 3; ++a) x[a] = get_f32(is);
    for (int a = 0; a < 3; ++a) v[a] = get_f32(is);
    ps.add(x, v, 0.0, 0.0);
  }
  return ps;
}

std::uint64_t state_hash(const ParticleSet& particles) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const Vec3& v) {
    unsigned char bytes[sizeof(double) * 3];
    std::memcpy(bytes, v.data(), sizeof(bytes));
    for (unsigned char b : bytes) {
      h ^= b;
      h *= 1099511628211ull;
    }
  };
  for (std::size_t i = 0; i < particles.count(); ++i) {
    mix(particles.positions[i]);
    mix(particles.velocities[i]);
  }
  return h;
}

}  // namespace hydronav
