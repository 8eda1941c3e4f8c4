#pragma once

#include <stdexcept>
#include <string>

namespace bbmmi {

/// A replica exceeded its event cap; the run is suspected to explode
/// (infinitely many events in finite time) and is aborted loudly.
class ExplosionGuard : public std::runtime_error {
 public:
  ExplosionGuard(std::uint64_t cap, double time)
      : std::runtime_error("event cap " + std::to_string(cap) +
                           " exceeded at t=" + std::to_string(time)),
        cap_(cap),
        time_(time) {}
  std::uint64_t cap() const { return cap_; }
  double time() const { return time_; }

 private:
  std::uint64_t cap_;
  double time_;
};

/// Raised by estimators that are undefined on an emptied particle system.
class EmptySystem : public std::runtime_error {
 public:
  explicit EmptySystem(const std::string& what) : std::runtime_error(what) {}
};

/// Raised by the particle filter when every replica system emptied in a window.
class AllWeightsZero : public std::runtime_error {
 public:
  explicit AllWeightsZero(const std::string& what) : std::runtime_error(what) {}
};

/// Configuration-file or CLI-argument validation failure.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace bbmmi
