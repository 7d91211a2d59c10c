#include "hydronav/current.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace hydronav {

CurrentMode parse_current_mode(const std::string& s) {
  if (s == "none") return CurrentMode::none;
  if (s == "procedural") return CurrentMode::procedural;
  if (s == "mpm") return CurrentMode::mpm;
  throw ConfigError("unknown current mode '" + s + "'");
}

std::string to_string(CurrentMode m) {
  switch (m) {
    case CurrentMode::none: return "none";
    case CurrentMode::procedural: return "procedural";
    case CurrentMode::mpm: return "mpm";
  }
  return "none";
}

CurrentField CurrentField::procedural(const CurrentSpec& spec, std::vector<Vec3> centerline, Aabb domain) {
  if (spec.base_speed < 0 || spec.noise_amp < 0 || spec.frequency < 0 || spec.strength < 0)
    throw ConfigError("current: speeds, frequency and strength must be >= 0");
  CurrentField f;
  f.mode_ = CurrentMode::procedural;
  f.spec_ = spec;
  f.centerline_ = std::move(centerline);
  f.domain_ = domain;

  std::mt19937_64 rng(spec.seed ^ 0x9E3779B97F4A7C15ull);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  auto random_unit = [&] {
    const double z = 2.0 * uni(rng) - 1.0;
    const double phi = 2.0 * kPi * uni(rng);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    return Vec3(r * std::cos(phi), z, r * std::sin(phi));
  };
  constexpr int kModes = 8;
  double total = 0.0;
  for (int i = 0; i < kModes; ++i) {
    Mode m;
    m.wavevector = random_unit() * (0.3 + 0.7 * uni(rng));
    const Vec3 a = random_unit();
    m.curl_amplitude = m.wavevector.cross(a);
    m.phase = 2.0 * kPi * uni(rng);
    total += m.curl_amplitude.norm();
    f.modes_.push_back(m);
  }
  // Scale so the noise magnitude is bounded by noise_amp.
  if (total > 0.0)
    for (auto& m : f.modes_) m.curl_amplitude *= spec.noise_amp / total;
  return f;
}

CurrentField CurrentField::mpm(std::shared_ptr<const FluidState> fluid, double strength) {
  CurrentField f;
  f.mode_ = CurrentMode::mpm;
  f.spec_.mode = CurrentMode::mpm;
  f.spec_.strength = strength;
  f.fluid_ = std::move(fluid);
  return f;
}

Vec3 CurrentField::tangent_at(const Vec3& p) const {
  if (centerline_.size() < 2) return Vec3::UnitX();
  double best = std::numeric_limits<double>::infinity();
  Vec3 t = Vec3::UnitX();
  for (std::size_t i = 0; i + 1 < centerline_.size(); ++i) {
    const Vec3 ab = centerline_[i + 1] - centerline_[i];
    const double s = std::clamp((p - centerline_[i]).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
    const double d = (p - (centerline_[i] + s * ab)).squaredNorm();
    if (d < best) {
      best = d;
      t = ab.normalized();
    }
  }
  return t;
}

CurrentSample CurrentField::sample(const Vec3& p, double time) const {
  CurrentSample out;
  switch (mode_) {
    case CurrentMode::none:
      return out;
    case CurrentMode::procedural: {
      if (!domain_.contains(p)) {
        out.out_of_domain = true;
        return out;
      }
      Vec3 v = spec_.base_speed * tangent_at(p);
      const double omega = 2.0 * kPi * spec_.frequency;
      for (const auto& m : modes_) v += std::cos(m.wavevector.dot(p) + omega * time + m.phase) * m.curl_amplitude;
      out.velocity = spec_.strength * v;
      return out;
    }
    case CurrentMode::mpm: {
      Vec3 v;
      if (!fluid_ || !interpolate_velocity(fluid_->grid, p, v)) {
        out.out_of_domain = true;
        return out;
      }
      out.velocity = spec_.strength * v;
      return out;
    }
  }
  return out;
}

double CurrentField::bound() const {
  if (mode_ != CurrentMode::procedural) return 0.0;
  double b = spec_.base_speed;
  for (const auto& m : modes_) b += m.curl_amplitude.norm();
  return spec_.strength * b;
}

}  // namespace hydronav
