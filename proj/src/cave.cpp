#include "hydronav/cave.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <random>
#include <sstream>

namespace hydronav {

Archetype parse_archetype(const std::string& s) {
  if (s == "train1") return Archetype::train1;
  if (s == "train2") return Archetype::train2;
  if (s == "train3") return Archetype::train3;
  if (s == "test") return Archetype::test;
  throw ConfigError("unknown archetype '" + s + "' (expected train1, train2, train3 or test)");
}

std::string to_string(Archetype a) {
  switch (a) {
    case Archetype::train1: return "train1";
    case Archetype::train2: return "train2";
    case Archetype::train3: return "train3";
    case Archetype::test: return "test";
  }
  return "train1";
}

WorldMode parse_world_mode(const std::string& s) {
  if (s == "underwater") return WorldMode::underwater;
  if (s == "surface") return WorldMode::surface;
  throw ConfigError("unknown world mode '" + s + "'");
}

std::string to_string(WorldMode m) { return m == WorldMode::surface ? "surface" : "underwater"; }

PanelChain::PanelChain(std::vector<Vec3> points) : points_(std::move(points)) {
  if (points_.empty()) throw ConfigError("panel chain must not be empty");
  tail_.assign(points_.size(), 0.0);
  for (std::size_t i = points_.size() - 1; i-- > 0;) {
    const double len = (points_[i + 1] - points_[i]).norm();
    if (!(len > 0.0)) throw ConfigError("panel chain has a zero-length segment");
    tail_[i] = tail_[i + 1] + len;
  }
}

double PanelChain::distance_via(std::size_t k, const Vec3& p) const {
  return (p - points_[k]).norm() + tail_[k];
}

Vec3 CaveMap::constrain(const Vec3& p) const {
  if (mode != WorldMode::surface) return p;
  return {p.x(), water_height, p.z()};
}

double CaveMap::signed_distance(const Vec3& p) const {
  const Vec3 q = constrain(p);
  if (!bounds.contains(q)) return kOutsideDistance;
  return sdf->distance(q);
}

Vec3 CaveMap::normal(const Vec3& p) const {
  const Vec3 q = constrain(p);
  Vec3 n = sdf->gradient(q);
  if (mode == WorldMode::surface) {
    n.y() = 0.0;
    const double len = n.norm();
    n = len > 0.0 ? Vec3(n / len) : Vec3::UnitX();
  }
  return n;
}

std::string CaveMap::check_invariants(double vehicle_radius) const {
  std::ostringstream err;
  if (!sdf) return "map has no SDF";
  if (panels.empty()) return "panel chain is empty";
  if (!(signed_distance(spawn.position) > vehicle_radius)) err << "spawn clearance <= vehicle radius; ";
  if (!(signed_distance(goal.position) > vehicle_radius)) err << "goal clearance <= vehicle radius; ";
  if ((panels.points().back() - goal.position).norm() > goal.radius) err << "last panel outside goal region; ";
  auto segment_clear = [&](const Vec3& a, const Vec3& b) {
    const double len = (b - a).norm();
    const int n = std::max(1, static_cast<int>(std::ceil(len / 0.1)));
    for (int i = 0; i <= n; ++i)
      if (!(signed_distance(a + (b - a) * (static_cast<double>(i) / n)) > vehicle_radius)) return false;
    return true;
  };
  if (!segment_clear(spawn.position, panels.points().front())) err << "spawn cannot reach first panel; ";
  for (std::size_t i = 0; i + 1 < panels.size(); ++i)
    if (!segment_clear(panels.points()[i], panels.points()[i + 1])) err << "panels " << i << "-" << i + 1 << " blocked; ";
  return err.str();
}

namespace {

template <typename Field>
double sphere_trace(const Field& field, double lipschitz, const Vec3& origin, const Vec3& dir, double max_range) {
  if (!(max_range > 0.0)) throw ContractViolation("raycast: max_range must be > 0");
  if (std::abs(dir.norm() - 1.0) > 1e-6) throw ContractViolation("raycast: direction must be a unit vector");
  if (field(origin) < 0.0) return 0.0;
  const double eps = 1e-6 * max_range;
  const double inv_l = 1.0 / std::max(1.0, lipschitz);
  double t = 0.0;
  for (int it = 0; it < 512; ++it) {
    const double d = field(origin + t * dir);
    if (d <= eps) return std::clamp(t / max_range, 0.0, 1.0);
    t += std::max(d * inv_l, eps);
    if (t >= max_range) return 1.0;
  }
  return std::clamp(t / max_range, 0.0, 1.0);
}

}  // namespace

double raycast(const Sdf& sdf, const Vec3& origin, const Vec3& dir, double max_range) {
  return sphere_trace([&](const Vec3& p) { return sdf.distance(p); }, sdf.lipschitz(), origin, dir, max_range);
}

double raycast(const CaveMap& map, const Vec3& origin, const Vec3& dir, double max_range) {
  return sphere_trace([&](const Vec3& p) { return map.signed_distance(p); }, map.sdf->lipschitz(), origin, dir,
                      max_range);
}

DistanceRewarder::DistanceRewarder(const PanelChain* chain, double capture_radius)
    : chain_(chain), capture_(capture_radius) {
  if (!chain_ || chain_->empty()) throw ContractViolation("DistanceRewarder: empty panel chain");
}

double DistanceRewarder::reset(const Vec3& p) {
  target_ = 0;
  return update(p);
}

double DistanceRewarder::update(const Vec3& p) {
  const auto& pts = chain_->points();
  const std::size_t last = pts.size() - 1;
  // Captures: any panel within the capture radius is passed, along with all
  // panels before it.
  for (std::size_t i = pts.size(); i-- > target_;) {
    if ((p - pts[i]).norm() <= capture_) {
      target_ = std::min(i + 1, last);
      break;
    }
  }
  // Nearest unpassed panel; strict comparison keeps the lower index on ties.
  std::size_t best = target_;
  double best_d = (p - pts[target_]).norm();
  for (std::size_t i = target_ + 1; i < pts.size(); ++i) {
    const double d = (p - pts[i]).norm();
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  target_ = best;
  return chain_->distance_via(target_, p);
}

double DistanceRewarder::distance(const Vec3& p) const { return chain_->distance_via(target_, p); }

double distance_to_goal(const CaveMap& map, const Vec3& p, double capture_radius) {
  DistanceRewarder r(&map.panels, capture_radius);
  return r.reset(p);
}

// ---------------------------------------------------------------------------
// Procedural tunnels

namespace {

struct SegmentPlan {
  double length;
  double radius;
  double turn;
  double pitch;
};

Vec3 heading(double yaw, double pitch) {
  return {std::cos(pitch) * std::cos(yaw), std::sin(pitch), -std::cos(pitch) * std::sin(yaw)};
}

std::vector<SegmentPlan> plan_segments(Archetype a, std::mt19937_64& rng, const CaveOptions& opt) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto uni = [&](double lo, double hi) { return lo + (hi - lo) * u01(rng); };
  const double deg = kPi / 180.0;
  int n = 0;
  double len = 0.0;
  switch (a) {
    case Archetype::train1: n = 3; len = 3.0; break;
    case Archetype::train2: n = 7; len = 2.5; break;
    case Archetype::train3: n = 8; len = 2.0; break;
    case Archetype::test: n = 8; len = 2.0; break;
  }
  if (opt.segments > 0) n = opt.segments;
  if (opt.segment_length > 0.0) len = opt.segment_length;
  std::vector<SegmentPlan> plan;
  const double sign0 = u01(rng) < 0.5 ? 1.0 : -1.0;
  for (int s = 0; s < n; ++s) {
    SegmentPlan sp{len, 0.0, 0.0, uni(-4.0, 4.0) * deg};
    const double alt = (s % 2 == 0) ? sign0 : -sign0;
    switch (a) {
      case Archetype::train1:
        sp.radius = uni(6.0, 10.0);
        sp.turn = uni(-15.0, 15.0) * deg;
        break;
      case Archetype::train2:
        // Wide chambers alternate with narrow passages, starting wide.
        sp.radius = (s % 2 == 0) ? uni(6.0, 8.0) : uni(2.0, 2.9);
        sp.turn = uni(-10.0, 10.0) * deg;
        break;
      case Archetype::train3:
        sp.radius = uni(2.5, 3.5);
        sp.turn = alt * uni(30.0, 50.0) * deg;
        break;
      case Archetype::test:
        sp.radius = (s % 2 == 0) ? uni(5.0, 7.0) : uni(2.0, 2.9);
        sp.turn = alt * uni(25.0, 45.0) * deg;
        break;
    }
    plan.push_back(sp);
  }
  return plan;
}

CurrentSpec default_current(Archetype a, std::uint64_t seed) {
  CurrentSpec c;
  c.seed = seed;
  switch (a) {
    case Archetype::train1: c.mode = CurrentMode::none; break;
    case Archetype::train2: c.mode = CurrentMode::procedural; c.strength = 0.5; break;
    case Archetype::train3:
    case Archetype::test: c.mode = CurrentMode::procedural; c.strength = 1.0; break;
  }
  return c;
}

/// Points along a polyline every `spacing` metres of arc, starting one
/// spacing in and always ending at the polyline's last point.
std::vector<Vec3> panels_along(const std::vector<Vec3>& line, double spacing, double end_gap) {
  std::vector<double> arc(line.size(), 0.0);
  for (std::size_t i = 1; i < line.size(); ++i) arc[i] = arc[i - 1] + (line[i] - line[i - 1]).norm();
  const double total = arc.back();
  std::vector<Vec3> out;
  std::size_t seg = 0;
  for (double s = spacing; s < total - end_gap; s += spacing) {
    while (seg + 2 < line.size() && arc[seg + 1] < s) ++seg;
    const double t = (s - arc[seg]) / (arc[seg + 1] - arc[seg]);
    out.push_back(line[seg] + t * (line[seg + 1] - line[seg]));
  }
  out.push_back(line.back());
  return out;
}

}  // namespace

CaveMap generate_cave(Archetype archetype, std::uint64_t seed, const CaveOptions& opt) {
  if (!(opt.panel_spacing > 0.0)) throw ConfigError("panel_spacing must be > 0");
  std::mt19937_64 rng(seed * 0x2545F4914F6CDD1Dull + static_cast<std::uint64_t>(archetype) + 1);
  const double step = 0.25;
  std::string last_failure;
  for (int attempt = 0; attempt <= opt.max_retries; ++attempt) {
    const auto plan = plan_segments(archetype, rng, opt);
    std::vector<Vec3> pts{Vec3::Zero()};
    std::vector<double> radii{plan.front().radius};
    double yaw = 0.0, pitch = 0.0;
    for (std::size_t s = 0; s < plan.size(); ++s) {
      const auto& sp = plan[s];
      const int n = std::max(1, static_cast<int>(std::ceil(sp.length / step)));
      const double h = sp.length / n;
      const double transition = std::min(1.5, 0.6 * sp.length);
      const double r_prev = s == 0 ? sp.radius : plan[s - 1].radius;
      const double pitch_prev = pitch;
      for (int i = 1; i <= n; ++i) {
        const double local = i * h;
        const double blend = std::min(1.0, local / transition);
        yaw += sp.turn / n;
        pitch = pitch_prev + (sp.pitch - pitch_prev) * blend;
        pts.push_back(pts.back() + h * heading(yaw, pitch));
        radii.push_back(r_prev + (sp.radius - r_prev) * blend);
      }
    }

    CaveMap map;
    auto tunnel = std::make_shared<TunnelSdf>(pts, radii);
    map.bounds = tunnel->bounds().padded(0.5);
    if (opt.lattice_spacing > 0.0)
      map.sdf = SampledSdf::bake(*tunnel, map.bounds, opt.lattice_spacing);
    else
      map.sdf = tunnel;
    map.centerline = pts;
    for (const auto& sp : plan) {
      map.segment_radii.push_back(sp.radius);
      map.segment_turns.push_back(sp.turn);
    }
    map.mode = WorldMode::underwater;
    map.current = default_current(archetype, seed);
    map.spawn = {pts.front(), std::clamp(radii.front() - opt.vehicle_radius - 0.6, 0.1, 0.5)};
    map.goal = {pts.back(), std::clamp(radii.back() - opt.vehicle_radius - 0.3, 0.3, 1.0)};
    map.panels = PanelChain(panels_along(pts, opt.panel_spacing, 1.0));

    last_failure = map.check_invariants(opt.vehicle_radius);
    if (last_failure.empty()) return map;
  }
  std::ostringstream os;
  os << "generate_cave(" << to_string(archetype) << ", seed " << seed << ") failed after " << opt.max_retries + 1
     << " attempts: " << last_failure;
  throw GenerationError(seed, os.str());
}

// ---------------------------------------------------------------------------
// Lattice search

std::vector<Vec3> lattice_path(const CaveMap& map, const Vec3& from, const Vec3& to, double spacing,
                               double clearance) {
  const bool planar = map.mode == WorldMode::surface;
  const Vec3 lo = map.bounds.min;
  std::array<int, 3> n{};
  for (int a = 0; a < 3; ++a) n[a] = std::max(1, static_cast<int>(std::floor(map.bounds.extent()[a] / spacing)));
  if (planar) n[1] = 1;
  auto center = [&](int i, int j, int k) {
    Vec3 c = lo + spacing * Vec3(i + 0.5, j + 0.5, k + 0.5);
    return map.constrain(c);
  };
  auto cell_of = [&](const Vec3& p) {
    std::array<int, 3> c{};
    for (int a = 0; a < 3; ++a)
      c[a] = std::clamp(static_cast<int>(std::floor((p[a] - lo[a]) / spacing)), 0, n[a] - 1);
    if (planar) c[1] = 0;
    return c;
  };
  const std::size_t total = static_cast<std::size_t>(n[0]) * n[1] * n[2];
  auto flat = [&](const std::array<int, 3>& c) {
    return static_cast<std::size_t>(c[0]) + static_cast<std::size_t>(n[0]) * (c[1] + static_cast<std::size_t>(n[1]) * c[2]);
  };
  const auto start = cell_of(from), goal = cell_of(to);
  std::vector<std::int64_t> parent(total, -2);
  std::vector<std::uint8_t> free(total, 2);  // 2 = unknown
  auto passable = [&](const std::array<int, 3>& c) {
    const std::size_t f = flat(c);
    if (free[f] == 2) free[f] = map.signed_distance(center(c[0], c[1], c[2])) > clearance ? 1 : 0;
    return free[f] == 1;
  };
  std::deque<std::array<int, 3>> queue;
  parent[flat(start)] = -1;
  queue.push_back(start);
  const int dirs[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 0, 1}, {0, 0, -1}, {0, 1, 0}, {0, -1, 0}};
  bool found = false;
  while (!queue.empty()) {
    const auto c = queue.front();
    queue.pop_front();
    if (c == goal) {
      found = true;
      break;
    }
    for (int d = 0; d < (planar ? 4 : 6); ++d) {
      std::array<int, 3> nb{c[0] + dirs[d][0], c[1] + dirs[d][1], c[2] + dirs[d][2]};
      bool inside = true;
      for (int a = 0; a < 3; ++a) inside = inside && nb[a] >= 0 && nb[a] < n[a];
      if (!inside) continue;
      const std::size_t f = flat(nb);
      if (parent[f] != -2 || !passable(nb)) continue;
      parent[f] = static_cast<std::int64_t>(flat(c));
      queue.push_back(nb);
    }
  }
  if (!found) return {};
  std::vector<Vec3> path;
  for (std::int64_t f = static_cast<std::int64_t>(flat(goal)); f >= 0; f = parent[f]) {
    const std::size_t u = static_cast<std::size_t>(f);
    const int i = static_cast<int>(u % n[0]);
    const int j = static_cast<int>((u / n[0]) % n[1]);
    const int k = static_cast<int>(u / (static_cast<std::size_t>(n[0]) * n[1]));
    path.push_back(center(i, j, k));
  }
  std::reverse(path.begin(), path.end());
  path.front() = map.constrain(from);
  path.back() = map.constrain(to);
  return path;
}

// ---------------------------------------------------------------------------
// Surface maps

namespace {

bool segment_clear(const CaveMap& map, const Vec3& a, const Vec3& b, double clearance) {
  const double len = (b - a).norm();
  const int n = std::max(1, static_cast<int>(std::ceil(len / 0.05)));
  for (int i = 0; i <= n; ++i)
    if (!(map.signed_distance(a + (b - a) * (static_cast<double>(i) / n)) > clearance)) return false;
  return true;
}

/// Greedy line-of-sight shortcutting of a lattice path.
std::vector<Vec3> pull_string(const CaveMap& map, const std::vector<Vec3>& path, double clearance) {
  std::vector<Vec3> out{path.front()};
  std::size_t i = 0;
  while (i + 1 < path.size()) {
    std::size_t j = path.size() - 1;
    while (j > i + 1 && !segment_clear(map, path[i], path[j], clearance)) --j;
    out.push_back(path[j]);
    i = j;
  }
  return out;
}

/// Polyline vertices after the first, with long legs split so no panel
/// segment exceeds `spacing`.
std::vector<Vec3> subdivide_legs(const std::vector<Vec3>& line, double spacing) {
  std::vector<Vec3> out;
  for (std::size_t i = 0; i + 1 < line.size(); ++i) {
    const Vec3 a = line[i], b = line[i + 1];
    const int parts = std::max(1, static_cast<int>(std::ceil((b - a).norm() / spacing)));
    for (int k = 1; k <= parts; ++k) out.push_back(a + (b - a) * (static_cast<double>(k) / parts));
  }
  return out;
}

}  // namespace

CaveMap generate_surface_map(std::uint64_t seed, const SurfaceOptions& opt) {
  if (opt.obstacle_density < 0.0) throw ConfigError("obstacle_density must be >= 0");
  std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ull + 0x5f);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto uni = [&](double lo, double hi) { return lo + (hi - lo) * u01(rng); };
  const double w = opt.width, d = opt.depth, vr = opt.vehicle_radius;
  const double clearance = vr + 0.05;
  for (int attempt = 0; attempt <= opt.max_retries; ++attempt) {
    CaveMap map;
    map.mode = WorldMode::surface;
    map.water_height = 0.0;
    map.bounds = {Vec3(0.0, -1.0, -0.5 * d), Vec3(w, 1.0, 0.5 * d)};
    map.spawn = {Vec3(uni(0.8, 2.0), 0.0, uni(-0.5 * d + 1.2, 0.5 * d - 1.2)), 0.3};
    map.goal = {Vec3(uni(w - 2.0, w - 0.8), 0.0, uni(-0.5 * d + 1.2, 0.5 * d - 1.2)), 0.6};
    const int rocks = static_cast<int>(std::lround(opt.obstacle_density * w * d));
    std::vector<SdfPtr> obstacles;
    for (int r = 0; r < rocks; ++r) {
      const Vec3 c(uni(0.0, w), 0.0, uni(-0.5 * d, 0.5 * d));
      const double rad = uni(0.3, 0.8);
      const double keep_out = rad + vr + 0.6;
      if ((c - map.spawn.position).norm() < keep_out + map.spawn.radius ||
          (c - map.goal.position).norm() < keep_out + map.goal.radius)
        continue;
      obstacles.push_back(std::make_shared<ColumnCavity>(c, rad));
    }
    auto water = std::make_shared<BoxCavity>(Aabb{Vec3(0.0, -50.0, -0.5 * d), Vec3(w, 50.0, 0.5 * d)});
    map.sdf = std::make_shared<CarvedSdf>(water, std::move(obstacles));
    const auto path = lattice_path(map, map.spawn.position, map.goal.position, 0.25, clearance);
    if (path.empty()) continue;
    const auto pulled = pull_string(map, path, clearance);
    map.panels = PanelChain(subdivide_legs(pulled, opt.panel_spacing));
    map.centerline = pulled;
    if (map.check_invariants(vr).empty()) return map;
  }
  throw GenerationError(seed, "generate_surface_map(seed " + std::to_string(seed) + "): no feasible layout");
}

}  // namespace hydronav
