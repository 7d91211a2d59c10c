#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hydronav/cave.hpp"

namespace hydronav {

TriangleMesh read_obj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MeshImportError("mesh: cannot open " + path.string());
  TriangleMesh mesh;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    if (tag == "v") {
      Vec3 v;
      if (!(ls >> v.x() >> v.y() >> v.z()))
        throw MeshImportError("mesh: bad vertex at line " + std::to_string(lineno));
      mesh.vertices.push_back(v);
    } else if (tag == "f") {
      std::vector<int> idx;
      std::string tok;
      while (ls >> tok) {
        const int i = std::stoi(tok.substr(0, tok.find('/')));
        const int resolved = i > 0 ? i - 1 : static_cast<int>(mesh.vertices.size()) + i;
        if (resolved < 0 || resolved >= static_cast<int>(mesh.vertices.size()))
          throw MeshImportError("mesh: face index out of range at line " + std::to_string(lineno));
        idx.push_back(resolved);
      }
      if (idx.size() < 3) throw MeshImportError("mesh: degenerate face at line " + std::to_string(lineno));
      for (std::size_t k = 1; k + 1 < idx.size(); ++k) mesh.triangles.push_back({idx[0], idx[k], idx[k + 1]});
    }
  }
  if (mesh.triangles.empty()) throw MeshImportError("mesh: no faces in " + path.string());
  return mesh;
}

bool is_watertight(const TriangleMesh& mesh) {
  std::map<std::pair<int, int>, int> edges;
  for (const auto& t : mesh.triangles)
    for (int e = 0; e < 3; ++e) {
      int a = t[e], b = t[(e + 1) % 3];
      if (a > b) std::swap(a, b);
      ++edges[{a, b}];
    }
  return std::all_of(edges.begin(), edges.end(), [](const auto& kv) { return kv.second == 2; });
}

namespace {

// Closest point on triangle (Ericson, Real-Time Collision Detection 5.1.5).
double point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0 && d2 <= 0) return ap.norm();
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0 && d4 <= d3) return bp.norm();
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) return (p - (a + ab * (d1 / (d1 - d3)))).norm();
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0 && d5 <= d6) return cp.norm();
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) return (p - (a + ac * (d2 / (d2 - d6)))).norm();
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0)
    return (p - (b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6))))).norm();
  const double denom = 1.0 / (va + vb + vc);
  return (p - (a + ab * (vb * denom) + ac * (vc * denom))).norm();
}

}  // namespace

std::shared_ptr<SampledSdf> mesh_to_sdf(const TriangleMesh& mesh, int resolution) {
  if (resolution < 8) throw ConfigError("mesh: lattice resolution must be >= 8");
  Aabb box{Vec3::Constant(std::numeric_limits<double>::infinity()),
           Vec3::Constant(-std::numeric_limits<double>::infinity())};
  for (const auto& v : mesh.vertices) {
    box.min = box.min.cwiseMin(v);
    box.max = box.max.cwiseMax(v);
  }
  const double h = box.extent().maxCoeff() / (resolution - 1);
  if (!(h > 0.0)) throw MeshImportError("mesh: zero extent");
  box = box.padded(2.0 * h);
  std::array<int, 3> n{};
  for (int a = 0; a < 3; ++a) {
    n[a] = static_cast<int>(std::ceil(box.extent()[a] / h)) + 1;
    box.max[a] = box.min[a] + (n[a] - 1) * h;
  }
  const std::size_t total = static_cast<std::size_t>(n[0]) * n[1] * n[2];
  auto flat = [&](int i, int j, int k) {
    return static_cast<std::size_t>(i) + static_cast<std::size_t>(n[0]) * (j + static_cast<std::size_t>(n[1]) * k);
  };
  auto node = [&](int i, int j, int k) { return Vec3(box.min + h * Vec3(i, j, k)); };

  std::vector<double> phi(total, std::numeric_limits<double>::infinity());
  std::vector<int> closest(total, -1);
  const auto& V = mesh.vertices;
  auto tri_dist = [&](int t, const Vec3& p) {
    const auto& f = mesh.triangles[t];
    return point_triangle_distance(p, V[f[0]], V[f[1]], V[f[2]]);
  };

  // Exact distances in a one-cell band around every triangle.
  constexpr int band = 1;
  for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t) {
    const auto& f = mesh.triangles[t];
    Vec3 lo = V[f[0]].cwiseMin(V[f[1]]).cwiseMin(V[f[2]]);
    Vec3 hi = V[f[0]].cwiseMax(V[f[1]]).cwiseMax(V[f[2]]);
    int i0[3], i1[3];
    for (int a = 0; a < 3; ++a) {
      i0[a] = std::clamp(static_cast<int>(std::floor((lo[a] - box.min[a]) / h)) - band, 0, n[a] - 1);
      i1[a] = std::clamp(static_cast<int>(std::ceil((hi[a] - box.min[a]) / h)) + band, 0, n[a] - 1);
    }
    for (int k = i0[2]; k <= i1[2]; ++k)
      for (int j = i0[1]; j <= i1[1]; ++j)
        for (int i = i0[0]; i <= i1[0]; ++i) {
          const double d = tri_dist(t, node(i, j, k));
          const std::size_t u = flat(i, j, k);
          if (d < phi[u]) {
            phi[u] = d;
            closest[u] = t;
          }
        }
  }

  // Fast sweeping: propagate closest-triangle candidates from neighbours.
  auto check = [&](int i, int j, int k, int ni, int nj, int nk) {
    const int t = closest[flat(ni, nj, nk)];
    if (t < 0) return;
    const std::size_t u = flat(i, j, k);
    const double d = tri_dist(t, node(i, j, k));
    if (d < phi[u]) {
      phi[u] = d;
      closest[u] = t;
    }
  };
  for (int pass = 0; pass < 2; ++pass)
    for (int sweep = 0; sweep < 8; ++sweep) {
      const int di = (sweep & 1) ? -1 : 1, dj = (sweep & 2) ? -1 : 1, dk = (sweep & 4) ? -1 : 1;
      const int is = di > 0 ? 1 : n[0] - 2, ie = di > 0 ? n[0] : -1;
      const int js = dj > 0 ? 1 : n[1] - 2, je = dj > 0 ? n[1] : -1;
      const int ks = dk > 0 ? 1 : n[2] - 2, ke = dk > 0 ? n[2] : -1;
      for (int k = ks; k != ke; k += dk)
        for (int j = js; j != je; j += dj)
          for (int i = is; i != ie; i += di) {
            check(i, j, k, i - di, j, k);
            check(i, j, k, i, j - dj, k);
            check(i, j, k, i, j, k - dk);
            check(i, j, k, i - di, j - dj, k);
            check(i, j, k, i - di, j, k - dk);
            check(i, j, k, i, j - dj, k - dk);
            check(i, j, k, i - di, j - dj, k - dk);
          }
    }

  // Ray parity along +x. Lines are nudged off the lattice so they never pass
  // exactly through mesh edges or vertices of axis-aligned meshes.
  const double jitter_y = 1.0e-6 * h * std::sqrt(2.0), jitter_z = 1.0e-6 * h * std::sqrt(3.0);
  std::vector<int> crossings(total, 0);
  for (const auto& f : mesh.triangles) {
    const Vec3 &a = V[f[0]], &b = V[f[1]], &c = V[f[2]];
    const double ylo = std::min({a.y(), b.y(), c.y()}), yhi = std::max({a.y(), b.y(), c.y()});
    const double zlo = std::min({a.z(), b.z(), c.z()}), zhi = std::max({a.z(), b.z(), c.z()});
    const int j0 = std::max(0, static_cast<int>(std::ceil((ylo - box.min.y()) / h)) - 1);
    const int j1 = std::min(n[1] - 1, static_cast<int>(std::floor((yhi - box.min.y()) / h)) + 1);
    const int k0 = std::max(0, static_cast<int>(std::ceil((zlo - box.min.z()) / h)) - 1);
    const int k1 = std::min(n[2] - 1, static_cast<int>(std::floor((zhi - box.min.z()) / h)) + 1);
    for (int k = k0; k <= k1; ++k)
      for (int j = j0; j <= j1; ++j) {
        const double py = box.min.y() + j * h + jitter_y, pz = box.min.z() + k * h + jitter_z;
        // Barycentric coordinates of (py,pz) in the yz-projected triangle.
        const double d = (b.y() - a.y()) * (c.z() - a.z()) - (c.y() - a.y()) * (b.z() - a.z());
        if (d == 0.0) continue;
        const double l1 = ((py - a.y()) * (c.z() - a.z()) - (c.y() - a.y()) * (pz - a.z())) / d;
        const double l2 = ((b.y() - a.y()) * (pz - a.z()) - (py - a.y()) * (b.z() - a.z())) / d;
        const double l0 = 1.0 - l1 - l2;
        if (l0 < 0 || l1 < 0 || l2 < 0) continue;
        const double x = l0 * a.x() + l1 * b.x() + l2 * c.x();
        const int i = static_cast<int>(std::ceil((x - box.min.x()) / h));
        if (i < n[0]) ++crossings[flat(std::max(i, 0), j, k)];
      }
  }
  std::vector<float> values(total);
  for (int k = 0; k < n[2]; ++k)
    for (int j = 0; j < n[1]; ++j) {
      int count = 0;
      for (int i = 0; i < n[0]; ++i) {
        const std::size_t u = flat(i, j, k);
        count += crossings[u];
        const double sign = (count % 2 == 1) ? 1.0 : -1.0;
        values[u] = static_cast<float>(sign * phi[u]);
      }
    }
  return std::make_shared<SampledSdf>(box, n, std::move(values), 1.0, kOutsideDistance);
}

namespace {

Vec3 vec_from_json(const nlohmann::json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) throw MeshImportError("panel spec: " + what + " must be [x,y,z]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

CaveMap load_mesh_cave(const std::filesystem::path& mesh_path, const std::filesystem::path& panel_spec,
                       const MeshImportOptions& options) {
  if (panel_spec.empty() || !std::filesystem::exists(panel_spec))
    throw MeshImportError("mesh cave: missing panel spec '" + panel_spec.string() + "'");
  const TriangleMesh mesh = read_obj(mesh_path);
  if (!is_watertight(mesh)) throw MeshImportError("mesh cave: " + mesh_path.string() + " is not watertight");

  nlohmann::json spec;
  try {
    std::ifstream in(panel_spec);
    spec = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw MeshImportError(std::string("panel spec: ") + e.what());
  }
  if (!spec.contains("panels") || !spec.contains("spawn") || !spec.contains("goal"))
    throw MeshImportError("panel spec: needs panels, spawn and goal");

  CaveMap map;
  auto sdf = mesh_to_sdf(mesh, options.resolution);
  map.bounds = sdf->box();
  map.sdf = sdf;
  std::vector<Vec3> panels;
  for (const auto& p : spec.at("panels")) panels.push_back(vec_from_json(p, "panel"));
  if (panels.empty()) throw MeshImportError("panel spec: panels must not be empty");
  map.panels = PanelChain(panels);
  map.spawn = {vec_from_json(spec["spawn"].at("position"), "spawn.position"), spec["spawn"].value("radius", 0.5)};
  map.goal = {vec_from_json(spec["goal"].at("position"), "goal.position"), spec["goal"].value("radius", 1.0)};
  map.mode = WorldMode::underwater;
  map.centerline = panels;
  map.centerline.insert(map.centerline.begin(), map.spawn.position);
  return map;
}

}  // namespace hydronav
