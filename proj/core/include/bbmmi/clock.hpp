#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace bbmmi {

inline constexpr double kInfiniteTime = std::numeric_limits<double>::infinity();

/// One piece of a piecewise-constant intensity: `rate` held for `duration`.
/// The last segment of a schedule may have infinite duration.
struct RateSegment {
  double rate;      // >= 0, finite
  double duration;  // > 0, may be infinite
};

/// Integral of the piecewise-constant rate over [0, t].
inline double cumulative_rate(std::span<const RateSegment> segments, double t) {
  double acc = 0.0;
  double elapsed = 0.0;
  for (const auto& seg : segments) {
    if (t <= elapsed) break;
    const double dt = std::min(seg.duration, t - elapsed);
    acc += seg.rate * dt;
    elapsed += seg.duration;
  }
  return acc;
}

/// First time t with \int_0^t rate(s) ds = threshold, or infinity if the
/// total integral never reaches the threshold. This inverts the exponential
/// clock: with threshold ~ Exp(1), the returned time is the first arrival of
/// an inhomogeneous Poisson process with the given piecewise-constant rate.
inline double exp_clock_invert(std::span<const RateSegment> segments,
                               double threshold) {
  if (!(threshold > 0.0))
    throw std::invalid_argument("exp_clock_invert: threshold must be > 0");
  if (segments.empty())
    throw std::invalid_argument("exp_clock_invert: empty segment list");

  double remaining = threshold;
  double elapsed = 0.0;
  for (const auto& seg : segments) {
    if (!(seg.rate >= 0.0) || !std::isfinite(seg.rate))
      throw std::invalid_argument("exp_clock_invert: rate must be finite and >= 0");
    if (!(seg.duration > 0.0))
      throw std::invalid_argument("exp_clock_invert: duration must be > 0");
    const double gain = seg.rate == 0.0 ? 0.0 : seg.rate * seg.duration;
    if (gain >= remaining && seg.rate > 0.0)
      return elapsed + remaining / seg.rate;
    remaining -= gain;
    elapsed += seg.duration;
    if (!std::isfinite(elapsed)) return kInfiniteTime;
  }
  return kInfiniteTime;
}

inline double exp_clock_invert(const std::vector<RateSegment>& segments,
                               double threshold) {
  return exp_clock_invert(std::span<const RateSegment>(segments), threshold);
}

}  // namespace bbmmi
