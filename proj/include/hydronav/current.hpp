#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "hydronav/common.hpp"
#include "hydronav/fluid.hpp"
#include "hydronav/sdf.hpp"

namespace hydronav {

enum class CurrentMode { none, procedural, mpm };

CurrentMode parse_current_mode(const std::string& s);
std::string to_string(CurrentMode m);

/// Parameters of the water current acting on the vehicle.
struct CurrentSpec {
  CurrentMode mode = CurrentMode::none;
  /// Multiplier applied to the whole field.
  double strength = 1.0;
  /// Flow along the tunnel centerline, m/s.
  double base_speed = 0.03;
  /// Bound on the divergence-free noise component, m/s.
  double noise_amp = 0.02;
  /// Temporal frequency of the noise, Hz.
  double frequency = 0.1;
  std::uint64_t seed = 0;
};

struct CurrentSample {
  Vec3 velocity = Vec3::Zero();
  /// Set when the query fell outside the field's domain.
  bool out_of_domain = false;
};

/// Queryable water velocity: nothing, a procedural spline-aligned flow with
/// curl noise, or the grid velocity of a running MLS-MPM simulation.
class CurrentField {
 public:
  /// Zero everywhere.
  CurrentField() = default;

  static CurrentField procedural(const CurrentSpec& spec, std::vector<Vec3> centerline, Aabb domain);
  /// Samples `fluid`'s grid; the caller keeps the state alive and steps it.
  static CurrentField mpm(std::shared_ptr<const FluidState> fluid, double strength);

  CurrentMode mode() const { return mode_; }
  CurrentSample sample(const Vec3& p, double time) const;
  /// max |sample| over all positions and times (procedural mode).
  double bound() const;

 private:
  struct Mode {
    Vec3 wavevector;
    Vec3 curl_amplitude;  // k x A
    double phase;
  };

  Vec3 tangent_at(const Vec3& p) const;

  CurrentMode mode_ = CurrentMode::none;
  CurrentSpec spec_;
  std::vector<Vec3> centerline_;
  Aabb domain_;
  std::vector<Mode> modes_;
  std::shared_ptr<const FluidState> fluid_;
};

}  // namespace hydronav
