#include "hydronav/sdf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hydronav {

Vec3 Sdf::gradient(const Vec3& p) const {
  constexpr double h = 1e-4;
  Vec3 g;
  for (int a = 0; a < 3; ++a) {
    Vec3 d = Vec3::Zero();
    d[a] = h;
    g[a] = (distance(p + d) - distance(p - d)) / (2.0 * h);
  }
  const double n = g.norm();
  return n > 0.0 ? Vec3(g / n) : Vec3::UnitY();
}

Vec3 SphereCavity::gradient(const Vec3& p) const {
  const Vec3 d = center_ - p;
  const double n = d.norm();
  return n > 0.0 ? Vec3(d / n) : Vec3::UnitY();
}

double BoxCavity::distance(const Vec3& p) const {
  // Exact box SDF, sign flipped so the interior is positive.
  const Vec3 c = box_.center();
  const Vec3 half = 0.5 * box_.extent();
  const Vec3 q = (p - c).cwiseAbs() - half;
  const double outside = q.cwiseMax(0.0).norm();
  const double inside = std::min(q.maxCoeff(), 0.0);
  return -(outside + inside);
}

CavityUnion::CavityUnion(std::vector<SdfPtr> parts) : parts_(std::move(parts)) {
  for (const auto& p : parts_) lipschitz_ = std::max(lipschitz_, p->lipschitz());
}

double CavityUnion::distance(const Vec3& p) const {
  double d = -std::numeric_limits<double>::infinity();
  for (const auto& part : parts_) d = std::max(d, part->distance(p));
  return d;
}

CarvedSdf::CarvedSdf(SdfPtr water, std::vector<SdfPtr> obstacles)
    : water_(std::move(water)), obstacles_(std::move(obstacles)) {}

double CarvedSdf::distance(const Vec3& p) const {
  double d = water_->distance(p);
  for (const auto& o : obstacles_) d = std::min(d, -o->distance(p));
  return d;
}

TunnelSdf::TunnelSdf(std::vector<Vec3> centerline, std::vector<double> radii)
    : points_(std::move(centerline)), radii_(std::move(radii)) {
  if (points_.size() < 2 || points_.size() != radii_.size())
    throw ContractViolation("TunnelSdf: need >= 2 points with one radius each");
  for (std::size_t i = 0; i + 1 < points_.size(); ++i) {
    const double len = (points_[i + 1] - points_[i]).norm();
    if (len <= 0.0) throw ContractViolation("TunnelSdf: zero-length segment");
    const double slope = std::abs(radii_[i + 1] - radii_[i]) / len;
    lipschitz_ = std::max(lipschitz_, std::sqrt(1.0 + slope * slope));
  }
}

double TunnelSdf::distance(const Vec3& p) const {
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < points_.size(); ++i) {
    const Vec3& a = points_[i];
    const Vec3 ab = points_[i + 1] - a;
    const double t = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
    const double r = radii_[i] + t * (radii_[i + 1] - radii_[i]);
    best = std::max(best, r - (p - (a + t * ab)).norm());
  }
  return best;
}

Aabb TunnelSdf::bounds() const {
  Aabb b{Vec3::Constant(std::numeric_limits<double>::infinity()),
         Vec3::Constant(-std::numeric_limits<double>::infinity())};
  for (std::size_t i = 0; i < points_.size(); ++i) {
    b.min = b.min.cwiseMin(points_[i] - Vec3::Constant(radii_[i]));
    b.max = b.max.cwiseMax(points_[i] + Vec3::Constant(radii_[i]));
  }
  return b;
}

SampledSdf::SampledSdf(Aabb box, std::array<int, 3> nodes, std::vector<float> values,
                       double lipschitz, double outside_value)
    : box_(box), nodes_(nodes), values_(std::move(values)), lipschitz_(lipschitz),
      outside_(outside_value) {
  for (int a = 0; a < 3; ++a) {
    if (nodes_[a] < 2) throw ContractViolation("SampledSdf: need >= 2 nodes per axis");
    spacing_[a] = box_.extent()[a] / (nodes_[a] - 1);
  }
  if (values_.size() != static_cast<std::size_t>(nodes_[0]) * nodes_[1] * nodes_[2])
    throw ContractViolation("SampledSdf: value count does not match lattice");
}

std::shared_ptr<SampledSdf> SampledSdf::bake(const Sdf& source, const Aabb& box, double spacing) {
  std::array<int, 3> n{};
  Aabb grown = box;
  for (int a = 0; a < 3; ++a) {
    n[a] = static_cast<int>(std::ceil(box.extent()[a] / spacing)) + 1;
    grown.max[a] = box.min[a] + (n[a] - 1) * spacing;
  }
  std::vector<float> v(static_cast<std::size_t>(n[0]) * n[1] * n[2]);
  std::size_t idx = 0;
  for (int k = 0; k < n[2]; ++k)
    for (int j = 0; j < n[1]; ++j)
      for (int i = 0; i < n[0]; ++i) {
        const Vec3 p = grown.min + spacing * Vec3(i, j, k);
        v[idx++] = static_cast<float>(source.distance(p));
      }
  return std::make_shared<SampledSdf>(grown, n, std::move(v), source.lipschitz());
}

double SampledSdf::distance(const Vec3& p) const {
  if (!box_.contains(p)) return outside_;
  int base[3];
  double frac[3];
  for (int a = 0; a < 3; ++a) {
    const double u = (p[a] - box_.min[a]) / spacing_[a];
    int i = static_cast<int>(std::floor(u));
    i = std::clamp(i, 0, nodes_[a] - 2);
    base[a] = i;
    frac[a] = u - i;
  }
  const std::size_t sx = 1, sy = nodes_[0], sz = static_cast<std::size_t>(nodes_[0]) * nodes_[1];
  const std::size_t o = base[0] * sx + base[1] * sy + base[2] * sz;
  auto at = [&](std::size_t di, std::size_t dj, std::size_t dk) {
    return static_cast<double>(values_[o + di * sx + dj * sy + dk * sz]);
  };
  const double fx = frac[0], fy = frac[1], fz = frac[2];
  const double c00 = at(0, 0, 0) * (1 - fx) + at(1, 0, 0) * fx;
  const double c10 = at(0, 1, 0) * (1 - fx) + at(1, 1, 0) * fx;
  const double c01 = at(0, 0, 1) * (1 - fx) + at(1, 0, 1) * fx;
  const double c11 = at(0, 1, 1) * (1 - fx) + at(1, 1, 1) * fx;
  const double c0 = c00 * (1 - fy) + c10 * fy;
  const double c1 = c01 * (1 - fy) + c11 * fy;
  return c0 * (1 - fz) + c1 * fz;
}

}  // namespace hydronav
