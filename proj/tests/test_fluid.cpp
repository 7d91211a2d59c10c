#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "hydronav/fluid.hpp"

using namespace hydronav;

namespace {

FluidParams quiet_params() {
  FluidParams p;
  p.gravity = Vec3::Zero();
  p.box_walls = false;
  p.stiffness = 0.0;
  return p;
}

double relative(const Vec3& a, const Vec3& b) { return (a - b).norm() / std::max(1e-300, b.norm()); }

}  // namespace

TEST_CASE("quadratic weights form a partition of unity with linear precision") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(2.0, 40.0);
  for (int i = 0; i < 200; ++i) {
    const double x = u(rng);
    const SplineWeights s = quadratic_weights(x);
    double sum = 0.0, first = 0.0, second = 0.0;
    for (int k = 0; k < 3; ++k) {
      sum += s.w[k];
      first += s.w[k] * (s.base + k - x);
      second += s.w[k] * (s.base + k - x) * (s.base + k - x);
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::abs(first) < 1e-13);
    // Second moment 1/4 is what makes M^-1 = 4 / dx^2.
    CHECK(second == doctest::Approx(0.25).epsilon(1e-12));
  }
}

TEST_CASE("single particle on a node spreads its mass by the spline weights") {
  MacGrid grid(Vec3::Zero(), 1.0, {8, 8, 8});
  ParticleSet ps;
  ps.add(Vec3(4, 4, 4), Vec3::Zero(), 1.0, 1.0);
  p2g(ps, grid, quiet_params());
  CHECK(grid.mass(grid.index(4, 4, 4)) == doctest::Approx(0.75 * 0.75 * 0.75));
  CHECK(grid.mass(grid.index(5, 4, 4)) == doctest::Approx(0.125 * 0.75 * 0.75));
  CHECK(grid.mass(grid.index(5, 5, 5)) == doctest::Approx(0.125 * 0.125 * 0.125));
  CHECK(grid.total_mass() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(grid.active().size() == 27);
}

TEST_CASE("p2g conserves mass and affine momentum") {
  FluidParams p;
  p.gravity = Vec3::Zero();
  MacGrid grid(Vec3::Zero(), 0.1, {16, 16, 16});
  FluidState st = make_block(grid, {Vec3::Constant(0.3), Vec3::Constant(1.2)}, p, 2);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n(0.0, 0.3);
  for (std::size_t i = 0; i < st.particles.count(); ++i) {
    st.particles.velocities[i] = Vec3(n(rng), n(rng), n(rng));
    st.particles.affine[i] = Mat3::Random();
    st.particles.volume_ratio[i] = 0.9 + 0.1 * std::abs(n(rng));
  }
  p2g(st.particles, st.grid, p);
  CHECK(std::abs(st.grid.total_mass() - st.particles.total_mass()) <= 1e-10 * st.particles.total_mass());
  CHECK(relative(st.grid.total_momentum(), st.particles.total_momentum()) <= 1e-10);
  for (auto idx : st.grid.active()) CHECK(st.grid.mass(idx) >= 0.0);
}

TEST_CASE("p2g then g2p round-trips total momentum") {
  FluidParams p = quiet_params();
  MacGrid grid(Vec3::Zero(), 0.1, {16, 16, 16});
  FluidState st = make_block(grid, {Vec3::Constant(0.3), Vec3::Constant(1.2)}, p, 2);
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0.0, 0.2);
  for (auto& v : st.particles.velocities) v = Vec3(n(rng), n(rng), n(rng));
  const Vec3 before = st.particles.total_momentum();
  p2g(st.particles, st.grid, p);
  grid_update(st.grid, nullptr, p);
  g2p(st.grid, st.particles, p);
  CHECK(relative(st.particles.total_momentum(), before) <= 1e-9);
}

TEST_CASE("uniform flow survives the transfer exactly") {
  FluidParams p = quiet_params();
  MacGrid grid(Vec3::Zero(), 0.1, {12, 12, 12});
  FluidState st = make_block(grid, {Vec3::Constant(0.3), Vec3::Constant(0.9)}, p, 2);
  for (auto& v : st.particles.velocities) v = Vec3(0.2, -0.1, 0.05);
  p2g(st.particles, st.grid, p);
  grid_update(st.grid, nullptr, p);
  g2p(st.grid, st.particles, p);
  for (std::size_t i = 0; i < st.particles.count(); ++i) {
    CHECK((st.particles.velocities[i] - Vec3(0.2, -0.1, 0.05)).norm() < 1e-12);
    CHECK(st.particles.affine[i].norm() < 1e-10);
  }
}

TEST_CASE("grid update applies explicit gravity") {
  FluidParams p;
  p.dt = 0.01;
  p.box_walls = false;
  MacGrid grid(Vec3::Zero(), 1.0, {8, 8, 8});
  const std::size_t idx = grid.index(4, 4, 4);
  grid.touch(idx);
  grid.mass_ref(idx) = 1.0;
  grid_update(grid, nullptr, p);
  CHECK(grid.velocity(idx).x() == 0.0);
  CHECK(grid.velocity(idx).y() == doctest::Approx(-0.0981).epsilon(1e-14));
  CHECK(grid.velocity(idx).z() == 0.0);
}

TEST_CASE("free-slip removes the normal velocity inside solids") {
  FluidParams p;
  p.gravity = Vec3::Zero();
  p.box_walls = false;
  MacGrid grid(Vec3::Zero(), 1.0, {8, 8, 8});
  const std::size_t idx = grid.index(2, 4, 4);
  grid.touch(idx);
  grid.mass_ref(idx) = 2.0;
  grid.momentum_ref(idx) = Vec3(-2.0, 1.0, 0.5);
  const HalfSpace water(Vec3(3, 0, 0), Vec3(1, 0, 0));
  grid_update(grid, &water, p);
  CHECK(grid.velocity(idx).x() == doctest::Approx(0.0));
  CHECK(grid.velocity(idx).y() == doctest::Approx(0.5));
  CHECK(grid.velocity(idx).z() == doctest::Approx(0.25));
}

TEST_CASE("box walls stop inflow but not outflow") {
  FluidParams p;
  p.gravity = Vec3::Zero();
  MacGrid grid(Vec3::Zero(), 1.0, {8, 8, 8});
  const std::size_t a = grid.index(1, 4, 4), b = grid.index(8, 4, 4);
  for (auto idx : {a, b}) {
    grid.touch(idx);
    grid.mass_ref(idx) = 1.0;
  }
  grid.momentum_ref(a) = Vec3(-1.0, 0.3, 0);
  grid.momentum_ref(b) = Vec3(-1.0, 0, 0);
  grid_update(grid, nullptr, p);
  CHECK(grid.velocity(a).x() == 0.0);
  CHECK(grid.velocity(a).y() == doctest::Approx(0.3));
  CHECK(grid.velocity(b).x() == doctest::Approx(-1.0));
}

TEST_CASE("free-falling particle matches closed-form kinematics") {
  FluidParams p;
  p.dt = 0.01;
  p.box_walls = false;
  MacGrid grid(Vec3::Zero(), 0.5, {8, 24, 8});
  FluidState st;
  st.grid = grid;
  st.particles.add(Vec3(2.0, 11.0, 2.0), Vec3::Zero(), 1.0, 1e-3);
  for (int i = 0; i < 100; ++i) step(st, p);
  CHECK(std::abs(st.particles.velocities[0].norm() - 9.81) <= 1e-6);
  CHECK(std::abs(st.particles.velocities[0].x()) < 1e-12);
  // Symplectic Euler: y drops by g dt^2 n(n+1)/2.
  CHECK(st.particles.positions[0].y() == doctest::Approx(11.0 - 9.81 * 1e-4 * 5050.0).epsilon(1e-12));
}

TEST_CASE("zero dt leaves the state untouched") {
  FluidParams p;
  p.dt = 0.0;
  MacGrid grid(Vec3::Zero(), 0.1, {10, 10, 10});
  FluidState st = make_block(grid, {Vec3::Constant(0.2), Vec3::Constant(0.6)}, p, 2);
  for (auto& v : st.particles.velocities) v = Vec3(0.1, 0.2, 0.3);
  const std::uint64_t h = state_hash(st.particles);
  step(st, p);
  CHECK(state_hash(st.particles) == h);
}

TEST_CASE("CFL violation is a configuration error") {
  FluidParams p;
  p.dt = 0.1;
  MacGrid grid(Vec3::Zero(), 0.1, {10, 10, 10});
  FluidState st = make_block(grid, {Vec3::Constant(0.2), Vec3::Constant(0.4)}, p, 2);
  st.particles.velocities[0] = Vec3(1.5, 0, 0);
  CHECK_THROWS_AS(step(st, p), ConfigError);
}

TEST_CASE("escaping particle is reported") {
  FluidParams p = quiet_params();
  MacGrid grid(Vec3::Zero(), 0.1, {10, 10, 10});
  ParticleSet ps;
  ps.add(Vec3(0.5, 0.5, 0.5), Vec3::Zero(), 1.0, 1.0);
  ps.add(Vec3(0.5, 5.0, 0.5), Vec3::Zero(), 1.0, 1.0);
  try {
    p2g(ps, grid, p);
    FAIL("expected DomainEscapeError");
  } catch (const DomainEscapeError& e) {
    CHECK(e.particle() == 1);
  }
}

TEST_CASE("invalid parameters are rejected") {
  FluidParams p;
  p.viscosity = 1.5;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = FluidParams{};
  p.dt = -1.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  CHECK_THROWS_AS(MacGrid(Vec3::Zero(), 0.1, {2, 10, 10}), ConfigError);
}

TEST_CASE("still water stays still and keeps its mass") {
  FluidParams p;
  p.gravity = Vec3::Zero();
  p.viscosity = 1.0;
  MacGrid grid(Vec3::Zero(), 0.1, {12, 12, 12});
  FluidState st = make_block(grid, {Vec3::Constant(0.3), Vec3::Constant(0.9)}, p, 2);
  const double m0 = st.particles.total_mass();
  double ke = st.particles.kinetic_energy();
  for (int i = 0; i < 200; ++i) {
    step(st, p);
    const double e = st.particles.kinetic_energy();
    CHECK(e <= ke);
    ke = e;
  }
  CHECK(st.particles.total_mass() == m0);
  CHECK(ke == 0.0);
}

TEST_CASE("stirred water loses kinetic energy under full damping") {
  FluidParams p;
  p.gravity = Vec3::Zero();
  p.viscosity = 1.0;
  MacGrid grid(Vec3::Zero(), 0.1, {12, 12, 12});
  FluidState st = make_block(grid, {Vec3::Constant(0.3), Vec3::Constant(0.9)}, p, 2);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 0.1);
  for (auto& v : st.particles.velocities) v = Vec3(n(rng), n(rng), n(rng));
  const double e0 = st.particles.kinetic_energy();
  for (int i = 0; i < 300; ++i) step(st, p);
  CHECK(st.particles.kinetic_energy() < 0.05 * e0);
}

TEST_CASE("water column settles under gravity") {
  // Regression pin from the solver itself: a column released at rest density
  // in a closed box, 1,000 steps at the default dt.
  FluidParams p;
  p.viscosity = 1.0;
  p.stiffness = 1.0e4;
  MacGrid grid(Vec3::Zero(), 0.1, {10, 20, 10});
  FluidState st = make_block(grid, {Vec3(0.3, 0.1, 0.3), Vec3(0.7, 0.8, 0.7)}, p, 2);
  auto max_speed = [&] {
    double m = 0.0;
    for (const auto& v : st.particles.velocities) m = std::max(m, v.norm());
    return m;
  };
  const double m0 = st.particles.total_mass();
  for (int i = 0; i < 200; ++i) step(st, p);
  const double early = max_speed();
  for (int i = 200; i < 1000; ++i) step(st, p);
  const double late = max_speed();
  CHECK(st.particles.total_mass() == m0);
  CHECK(late < 0.02);
  CHECK(late < 0.25 * early);
  double jmin = 1.0;
  for (double j : st.particles.volume_ratio) jmin = std::min(jmin, j);
  CHECK(jmin > 0.85);
}

TEST_CASE("stepping is deterministic") {
  FluidParams p;
  auto run = [&] {
    FluidState st = make_tank(2000, p);
    for (int i = 0; i < 50; ++i) step(st, p);
    return state_hash(st.particles);
  };
  CHECK(run() == run());
}

TEST_CASE("tank holds roughly the requested particle count") {
  FluidParams p;
  CHECK(make_tank(1000, p).particles.count() == 1000);
  const auto n = make_tank(10000, p).particles.count();
  CHECK(n > 8000);
  CHECK(n < 12000);
}

TEST_CASE("particle dump round-trips positions and velocities in single precision") {
  FluidParams p;
  FluidState st = make_tank(500, p);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  for (auto& v : st.particles.velocities) v = Vec3(n(rng), n(rng), n(rng));
  const auto path = std::filesystem::temp_directory_path() / "hydronav_dump_test.bin";
  write_particle_dump(path, st.particles);
  const ParticleSet back = read_particle_dump(path);
  REQUIRE(back.count() == st.particles.count());
  for (std::size_t i = 0; i < back.count(); ++i) {
    CHECK((back.positions[i] - st.particles.positions[i]).norm() < 1e-6);
    CHECK((back.velocities[i] - st.particles.velocities[i]).norm() < 1e-6);
  }
  std::filesystem::resize_file(path, 20);
  CHECK_THROWS_AS(read_particle_dump(path), DataError);
  std::filesystem::remove(path);
}
