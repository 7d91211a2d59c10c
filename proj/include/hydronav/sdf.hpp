#pragma once

#include <array>
#include <memory>
#include <span>
#include <vector>

#include "hydronav/common.hpp"

namespace hydronav {

/// Axis-aligned box.
struct Aabb {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();

  bool contains(const Vec3& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
  Vec3 extent() const { return max - min; }
  Vec3 center() const { return 0.5 * (min + max); }
  Aabb padded(double margin) const {
    return {min.array() - margin, max.array() + margin};
  }
};

/// Signed distance field. Positive values are navigable water, negative values
/// are solid rock; the magnitude is the distance to the nearest wall.
class Sdf {
 public:
  virtual ~Sdf() = default;
  virtual double distance(const Vec3& p) const = 0;
  /// Gradient of the field (points into the water). Central differences unless
  /// a subclass knows better.
  virtual Vec3 gradient(const Vec3& p) const;
  /// Upper bound on |grad|; sphere tracing divides step sizes by it.
  virtual double lipschitz() const { return 1.0; }
};

using SdfPtr = std::shared_ptr<const Sdf>;

/// Water inside a sphere.
class SphereCavity final : public Sdf {
 public:
  SphereCavity(Vec3 center, double radius) : center_(center), radius_(radius) {}
  double distance(const Vec3& p) const override { return radius_ - (p - center_).norm(); }
  Vec3 gradient(const Vec3& p) const override;

 private:
  Vec3 center_;
  double radius_;
};

/// Water inside an axis-aligned box.
class BoxCavity final : public Sdf {
 public:
  explicit BoxCavity(Aabb box) : box_(box) {}
  double distance(const Vec3& p) const override;

 private:
  Aabb box_;
};

/// Water on the side of a plane that `normal` points into.
class HalfSpace final : public Sdf {
 public:
  HalfSpace(Vec3 point, Vec3 normal) : point_(point), normal_(normal.normalized()) {}
  double distance(const Vec3& p) const override { return (p - point_).dot(normal_); }
  Vec3 gradient(const Vec3&) const override { return normal_; }

 private:
  Vec3 point_;
  Vec3 normal_;
};

/// Water inside an infinite vertical cylinder (axis along +y).
class ColumnCavity final : public Sdf {
 public:
  ColumnCavity(Vec3 center, double radius) : center_(center), radius_(radius) {}
  double distance(const Vec3& p) const override {
    return radius_ - Eigen::Vector2d(p.x() - center_.x(), p.z() - center_.z()).norm();
  }

 private:
  Vec3 center_;
  double radius_;
};

/// Union of water regions (pointwise max).
class CavityUnion final : public Sdf {
 public:
  explicit CavityUnion(std::vector<SdfPtr> parts);
  double distance(const Vec3& p) const override;
  double lipschitz() const override { return lipschitz_; }

 private:
  std::vector<SdfPtr> parts_;
  double lipschitz_ = 1.0;
};

/// Water region minus solid obstacles: max-union of cavities intersected with
/// the complement of every obstacle's interior.
class CarvedSdf final : public Sdf {
 public:
  /// `obstacles` are cavities whose interior becomes rock.
  CarvedSdf(SdfPtr water, std::vector<SdfPtr> obstacles);
  double distance(const Vec3& p) const override;

 private:
  SdfPtr water_;
  std::vector<SdfPtr> obstacles_;
};

/// Swept-capsule tunnel along a polyline with per-vertex radius.
class TunnelSdf final : public Sdf {
 public:
  TunnelSdf(std::vector<Vec3> centerline, std::vector<double> radii);
  double distance(const Vec3& p) const override;
  double lipschitz() const override { return lipschitz_; }
  Aabb bounds() const;

 private:
  std::vector<Vec3> points_;
  std::vector<double> radii_;
  double lipschitz_ = 1.0;
};

/// Field sampled on a regular lattice, trilinearly interpolated. Queries
/// outside the lattice return `outside_value`.
class SampledSdf final : public Sdf {
 public:
  SampledSdf(Aabb box, std::array<int, 3> nodes, std::vector<float> values,
             double lipschitz = 1.0, double outside_value = -1.0e3);

  /// Bake `source` on a lattice covering `box` with the given spacing.
  static std::shared_ptr<SampledSdf> bake(const Sdf& source, const Aabb& box, double spacing);

  double distance(const Vec3& p) const override;
  double lipschitz() const override { return lipschitz_; }
  const Aabb& box() const { return box_; }
  std::array<int, 3> nodes() const { return nodes_; }
  double spacing() const { return spacing_[0]; }

 private:
  Aabb box_;
  std::array<int, 3> nodes_;
  Vec3 spacing_;
  std::vector<float> values_;
  double lipschitz_;
  double outside_;
};

}  // namespace hydronav
