#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "hydronav/cave.hpp"

using namespace hydronav;
namespace fs = std::filesystem;

namespace {

Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vec3 v(n(rng), n(rng), n(rng));
  return v.normalized();
}

/// Straight corridor along +x with panels at the given x positions.
CaveMap corridor(std::vector<double> panel_x, double radius = 2.0, double length = 20.0) {
  CaveMap m;
  auto tunnel = std::make_shared<TunnelSdf>(std::vector<Vec3>{Vec3::Zero(), Vec3(length, 0, 0)},
                                            std::vector<double>{radius, radius});
  m.sdf = tunnel;
  m.bounds = tunnel->bounds().padded(0.5);
  std::vector<Vec3> pts;
  for (double x : panel_x) pts.emplace_back(x, 0, 0);
  m.panels = PanelChain(pts);
  m.spawn = {Vec3(0.5, 0, 0), 0.2};
  m.goal = {pts.back(), 1.0};
  return m;
}

/// Remaining arc length along a densely resampled centerline.
struct ArcOracle {
  std::vector<Vec3> points;
  std::vector<double> remaining;

  ArcOracle(const std::vector<Vec3>& line, int samples) {
    std::vector<double> arc(line.size(), 0.0);
    for (std::size_t i = 1; i < line.size(); ++i) arc[i] = arc[i - 1] + (line[i] - line[i - 1]).norm();
    std::size_t seg = 0;
    for (int k = 0; k < samples; ++k) {
      const double s = arc.back() * k / (samples - 1.0);
      while (seg + 2 < line.size() && arc[seg + 1] < s) ++seg;
      const double t = (s - arc[seg]) / (arc[seg + 1] - arc[seg]);
      points.push_back(line[seg] + t * (line[seg + 1] - line[seg]));
      remaining.push_back(arc.back() - s);
    }
  }
};

void write_box_obj(const fs::path& path, const Vec3& lo, const Vec3& hi, bool drop_face = false) {
  std::ofstream f(path);
  for (int i = 0; i < 8; ++i)
    f << "v " << ((i & 1) ? hi.x() : lo.x()) << ' ' << ((i & 2) ? hi.y() : lo.y()) << ' '
      << ((i & 4) ? hi.z() : lo.z()) << '\n';
  // Quads, fan-triangulated by the reader.
  const int faces[6][4] = {{1, 3, 4, 2}, {5, 6, 8, 7}, {1, 2, 6, 5}, {3, 7, 8, 4}, {1, 5, 7, 3}, {2, 4, 8, 6}};
  for (int i = 0; i < (drop_face ? 5 : 6); ++i)
    f << "f " << faces[i][0] << ' ' << faces[i][1] << ' ' << faces[i][2] << ' ' << faces[i][3] << '\n';
}

}  // namespace

TEST_CASE("sphere cavity distances") {
  const SphereCavity s(Vec3(1, 2, 3), 5.0);
  CHECK(s.distance(Vec3(1, 2, 3)) == doctest::Approx(5.0));
  CHECK(s.distance(Vec3(6, 2, 3)) == doctest::Approx(0.0));
  CHECK(s.distance(Vec3(8, 2, 3)) == doctest::Approx(-2.0));
  CHECK((s.gradient(Vec3(3, 2, 3)) - Vec3(-1, 0, 0)).norm() < 1e-12);
}

TEST_CASE("cavity union is the pointwise max") {
  auto a = std::make_shared<SphereCavity>(Vec3(0, 0, 0), 3.0);
  auto b = std::make_shared<BoxCavity>(Aabb{Vec3(2, -1, -1), Vec3(8, 1, 1)});
  const CavityUnion u({a, b});
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> x(-5.0, 10.0);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 p(x(rng), x(rng), x(rng));
    CHECK(u.distance(p) == std::max(a->distance(p), b->distance(p)));
  }
}

TEST_CASE("box cavity is exact inside and outside") {
  const BoxCavity b(Aabb{Vec3::Zero(), Vec3(4, 2, 2)});
  CHECK(b.distance(Vec3(2, 1, 1)) == doctest::Approx(1.0));
  CHECK(b.distance(Vec3(0.5, 1, 1)) == doctest::Approx(0.5));
  CHECK(b.distance(Vec3(5, 1, 1)) == doctest::Approx(-1.0));
  CHECK(b.distance(Vec3(7, 6, 1)) == doctest::Approx(-5.0));
}

TEST_CASE("tunnel sdf matches the capsule formula") {
  const TunnelSdf t({Vec3::Zero(), Vec3(10, 0, 0)}, {2.0, 2.0});
  CHECK(t.distance(Vec3(5, 0, 0)) == doctest::Approx(2.0));
  CHECK(t.distance(Vec3(5, 1.5, 0)) == doctest::Approx(0.5));
  CHECK(t.distance(Vec3(-1, 0, 0)) == doctest::Approx(1.0));
  CHECK(t.distance(Vec3(5, 0, 3)) == doctest::Approx(-1.0));
}

TEST_CASE("sampled field reproduces a smooth source within lattice error") {
  const SphereCavity s(Vec3::Zero(), 4.0);
  const Aabb box{Vec3::Constant(-5.0), Vec3::Constant(5.0)};
  auto baked = SampledSdf::bake(s, box, 0.25);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> x(-3.0, 3.0);
  for (int i = 0; i < 500; ++i) {
    const Vec3 p(x(rng), x(rng), x(rng));
    CHECK(std::abs(baked->distance(p) - s.distance(p)) < 0.25);
  }
  CHECK(baked->distance(Vec3(9, 0, 0)) < 0.0);
}

TEST_CASE("raycast ratio, miss and inside-rock conventions") {
  const BoxCavity room(Aabb{Vec3(-20, -20, -20), Vec3(10, 20, 20)});
  CHECK(raycast(room, Vec3::Zero(), Vec3::UnitX(), 20.0) == doctest::Approx(0.5).epsilon(1e-5));
  CHECK(raycast(room, Vec3::Zero(), Vec3::UnitX(), 5.0) == 1.0);
  CHECK(raycast(room, Vec3(15, 0, 0), Vec3::UnitX(), 5.0) == 0.0);
  CHECK_THROWS_AS(raycast(room, Vec3::Zero(), Vec3(2, 0, 0), 5.0), ContractViolation);
  CHECK_THROWS_AS(raycast(room, Vec3::Zero(), Vec3::UnitX(), 0.0), ContractViolation);
}

TEST_CASE("rays from the centre of a sphere reach the analytic wall") {
  const SphereCavity s(Vec3(1, 1, 1), 5.0);
  std::mt19937_64 rng(4);
  for (int i = 0; i < 28; ++i) {
    const Vec3 d = random_unit(rng);
    CHECK(raycast(s, Vec3(1, 1, 1), d, 5.0) == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(raycast(s, Vec3(1, 1, 1), d, 10.0) == doctest::Approx(0.5).epsilon(1e-4));
  }
  // Off-centre origin: distance to the sphere along d solves |o + t d| = R.
  const Vec3 o(2.0, -1.0, 0.5);
  for (int i = 0; i < 100; ++i) {
    const Vec3 d = random_unit(rng);
    const Vec3 q = o - Vec3(1, 1, 1);
    const double b = q.dot(d), c = q.squaredNorm() - 25.0;
    const double t = -b + std::sqrt(b * b - c);
    CHECK(raycast(s, o, d, 10.0) * 10.0 == doctest::Approx(t).epsilon(1e-4));
  }
}

TEST_CASE("raycast stays in range and never grows as a wall approaches") {
  double prev = 1.0;
  for (double wall = 12.0; wall > 0.5; wall -= 0.5) {
    const BoxCavity room(Aabb{Vec3(-20, -20, -20), Vec3(wall, 20, 20)});
    const double r = raycast(room, Vec3::Zero(), Vec3::UnitX(), 10.0);
    CHECK(r >= 0.0);
    CHECK(r <= 1.0);
    CHECK(r <= prev + 1e-12);
    prev = r;
  }
}

TEST_CASE("map queries outside the bounds read as rock") {
  const CaveMap m = corridor({5, 10, 15});
  CHECK(m.signed_distance(Vec3(5, 0, 0)) == doctest::Approx(2.0));
  CHECK(m.signed_distance(Vec3(100, 0, 0)) == kOutsideDistance);
}

TEST_CASE("panel distance on a straight corridor is the collinear sum") {
  const CaveMap m = corridor({5, 10, 15});
  DistanceRewarder r(&m.panels, 0.6);
  CHECK(r.reset(Vec3(3, 0, 0)) == doctest::Approx(12.0));
  CHECK(r.target() == 0);
  CHECK(distance_to_goal(m, Vec3(3, 0, 0), 0.6) == doctest::Approx(12.0));
}

TEST_CASE("progress along the chain is monotone and captures panels") {
  const CaveMap m = corridor({5, 10, 15});
  DistanceRewarder r(&m.panels, 0.6);
  r.reset(Vec3(1, 0, 0));
  double prev = 1e9;
  for (double x = 1.0; x <= 15.0; x += 0.05) {
    const double d = r.update(Vec3(x, 0, 0));
    CHECK(d <= prev + 1e-12);
    prev = d;
  }
  CHECK(r.target() == 2);
  CHECK(prev <= 0.6);
  // Backing off does not un-pass panels.
  r.update(Vec3(2, 0, 0));
  CHECK(r.target() == 2);
}

TEST_CASE("equidistant panels resolve to the lower index") {
  const CaveMap m = corridor({4, 8, 12});
  DistanceRewarder r(&m.panels, 0.1);
  r.reset(Vec3(6, 1, 0));
  CHECK(r.target() == 0);
}

TEST_CASE("panel distance follows arc length on curved generated caves") {
  for (auto arch : {Archetype::train3, Archetype::test}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const CaveMap m = generate_cave(arch, seed);
      const ArcOracle oracle(m.centerline, 1000);
      DistanceRewarder r(&m.panels, 0.6);
      r.reset(oracle.points.front());
      std::mt19937_64 rng(seed);
      std::uniform_int_distribution<int> stride(-3, 8);
      int k = 0;
      double worst = 0.0;
      while (k < 999) {
        k = std::clamp(k + stride(rng), 0, 999);
        const double d = r.update(oracle.points[static_cast<std::size_t>(k)]);
        if (oracle.remaining[static_cast<std::size_t>(k)] > 0.5)
          worst = std::max(worst, std::abs(d - oracle.remaining[static_cast<std::size_t>(k)]) /
                                      oracle.remaining[static_cast<std::size_t>(k)]);
      }
      CHECK(worst <= 0.05);
    }
  }
}

TEST_CASE("train1 is wide and still") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const CaveMap m = generate_cave(Archetype::train1, seed);
    CHECK(*std::min_element(m.segment_radii.begin(), m.segment_radii.end()) >= 6.0);
    CHECK(m.current.mode == CurrentMode::none);
    CHECK(m.check_invariants(0.4).empty());
  }
}

TEST_CASE("train2 has narrow passages and a half-strength current") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const CaveMap m = generate_cave(Archetype::train2, seed);
    const auto narrow = std::count_if(m.segment_radii.begin(), m.segment_radii.end(), [](double r) { return r < 3.0; });
    CHECK(narrow >= 3);
    CHECK(m.current.mode == CurrentMode::procedural);
    CHECK(m.current.strength == 0.5);
  }
}

TEST_CASE("train3 curves alternate under a full-strength current") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const CaveMap m = generate_cave(Archetype::train3, seed);
    REQUIRE(m.segment_turns.size() >= 8);
    for (std::size_t i = 1; i < m.segment_turns.size(); ++i)
      CHECK(m.segment_turns[i] * m.segment_turns[i - 1] < 0.0);
    CHECK(m.current.strength == 1.0);
  }
}

TEST_CASE("generated maps satisfy their invariants and are reproducible") {
  for (auto arch : {Archetype::train1, Archetype::train2, Archetype::train3, Archetype::test}) {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
      const CaveMap a = generate_cave(arch, seed);
      CHECK(a.check_invariants(0.4).empty());
      CHECK((a.panels.points().back() - a.goal.position).norm() <= a.goal.radius);
      const CaveMap b = generate_cave(arch, seed);
      REQUIRE(a.panels.size() == b.panels.size());
      for (std::size_t i = 0; i < a.panels.size(); ++i) CHECK(a.panels.points()[i] == b.panels.points()[i]);
      CHECK(a.spawn.position == b.spawn.position);
      CHECK(a.signed_distance(a.goal.position) == b.signed_distance(b.goal.position));
    }
  }
}

TEST_CASE("impossible clearance is a generation error carrying the seed") {
  CaveOptions o;
  o.vehicle_radius = 9.0;
  o.max_retries = 1;
  try {
    generate_cave(Archetype::train3, 42, o);
    FAIL("expected GenerationError");
  } catch (const GenerationError& e) {
    CHECK(e.seed() == 42);
  }
}

TEST_CASE("surface maps are planar, feasible and reproducible") {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const CaveMap m = generate_surface_map(seed);
    CHECK(m.mode == WorldMode::surface);
    CHECK(m.check_invariants(0.4).empty());
    CHECK(m.signed_distance(m.spawn.position + Vec3(0, 3, 0)) == m.signed_distance(m.spawn.position));
    CHECK_FALSE(lattice_path(m, m.spawn.position, m.goal.position, 0.5, 0.0).empty());
    const CaveMap again = generate_surface_map(seed);
    CHECK(again.goal.position == m.goal.position);
    CHECK(again.panels.size() == m.panels.size());
  }
}

TEST_CASE("empty surface map distance is the straight line") {
  SurfaceOptions o;
  o.obstacle_density = 0.0;
  const CaveMap m = generate_surface_map(3, o);
  const double straight = (m.goal.position - m.spawn.position).norm();
  CHECK(distance_to_goal(m, m.spawn.position, 0.6) == doctest::Approx(straight).epsilon(0.01));
}

TEST_CASE("mesh import: box shell, bounds and lattice convergence") {
  const fs::path dir = fs::temp_directory_path() / "hydronav_mesh_test";
  fs::create_directories(dir);
  write_box_obj(dir / "box.obj", Vec3::Zero(), Vec3::Constant(10.0));
  const TriangleMesh mesh = read_obj(dir / "box.obj");
  CHECK(mesh.triangles.size() == 12);
  CHECK(is_watertight(mesh));

  auto fine = mesh_to_sdf(mesh, 128);
  auto coarse = mesh_to_sdf(mesh, 64);
  CHECK(fine->distance(Vec3::Constant(5.0)) == doctest::Approx(5.0).epsilon(0.02));
  CHECK(fine->distance(Vec3(-3, 5, 5)) < 0.0);
  CHECK(fine->distance(Vec3(50, 5, 5)) < 0.0);
  const double coarse_cell = coarse->spacing();
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> x(1.0, 9.0);
  for (int i = 0; i < 300; ++i) {
    const Vec3 p(x(rng), x(rng), x(rng));
    CHECK(std::abs(fine->distance(p) - coarse->distance(p)) <= coarse_cell);
  }

  std::ofstream(dir / "panels.json") << R"({"panels": [[3,5,5],[7,5,5]], "spawn": {"position": [1.5,5,5], "radius": 0.3},
                                           "goal": {"position": [8,5,5], "radius": 1.0}})";
  MeshImportOptions mo;
  mo.resolution = 48;
  const CaveMap m = load_mesh_cave(dir / "box.obj", dir / "panels.json", mo);
  CHECK(m.check_invariants(0.4).empty());
  CHECK(m.signed_distance(Vec3(5, 5, 5)) > 4.0);

  write_box_obj(dir / "open.obj", Vec3::Zero(), Vec3::Constant(10.0), true);
  CHECK_FALSE(is_watertight(read_obj(dir / "open.obj")));
  CHECK_THROWS_AS(load_mesh_cave(dir / "open.obj", dir / "panels.json", mo), MeshImportError);
  CHECK_THROWS_AS(load_mesh_cave(dir / "box.obj", dir / "missing.json", mo), MeshImportError);
  CHECK_THROWS_AS(read_obj(dir / "nope.obj"), DataError);
  fs::remove_all(dir);
}
