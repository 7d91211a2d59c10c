#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace hydronav {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kPi = 3.14159265358979323846;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad configuration, scenario, or command-line input.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Caller broke an operation precondition (wrong sizes, out-of-range index,
/// stepping a finished episode).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// A fluid particle left the simulation domain.
class DomainEscapeError : public Error {
 public:
  DomainEscapeError(std::size_t particle, const std::string& what)
      : Error(what), particle_(particle) {}
  std::size_t particle() const { return particle_; }

 private:
  std::size_t particle_;
};

/// Procedural world generation could not satisfy its invariants.
class GenerationError : public Error {
 public:
  GenerationError(std::uint64_t seed, const std::string& what)
      : Error(what), seed_(seed) {}
  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
};

/// Corrupt or unreadable artifact (mesh, checkpoint, dump, trace).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values during training or simulation.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace hydronav
