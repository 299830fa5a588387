#pragma once

///
/// @file synthetic.hpp
///
/// Synthetic EAR recordings with planted blinks, for fixtures and demos.
/// Noise comes from a fixed-seed mt19937_64 through a local Box-Muller
/// transform so the output does not depend on the standard library's
/// distribution implementations.
///

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "blinkscope/series.hpp"

namespace blinkscope::synthetic {

struct PlantedBlink {
  std::size_t apex_frame = 0;
  double depth = 0.25;              ///< EAR drop at the apex
  std::size_t duration_frames = 60; ///< full raised-cosine support
};

struct RecordingSpec {
  std::size_t frames = 0;
  double fps = 240.0;
  double baseline = 0.3;
  double noise_sd = 0.003;
  std::uint64_t seed = 1;
};

class Gaussian {
public:
  explicit Gaussian(std::uint64_t seed) : rng_(seed) {}

  double operator()() {
    if (spare_) {
      const double v = *spare_;
      spare_.reset();
      return v;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

  double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
  std::uint64_t next() { return rng_(); }

private:
  std::mt19937_64 rng_;
  std::optional<double> spare_;
};

/// Baseline plus white noise with raised-cosine dips at the planted apexes.
/// The half-prominence width of a dip is half its duration.
inline EarSeries make_series(const RecordingSpec& spec, Eye eye, std::span<const PlantedBlink> blinks) {
  Gaussian noise(spec.seed);
  std::vector<double> v(spec.frames);
  for (auto& x : v) x = spec.baseline + spec.noise_sd * noise();
  for (const auto& b : blinks) {
    const double half = static_cast<double>(b.duration_frames) / 2.0;
    const auto lo = static_cast<std::int64_t>(b.apex_frame) - static_cast<std::int64_t>(half);
    const auto hi = static_cast<std::int64_t>(b.apex_frame) + static_cast<std::int64_t>(half);
    for (std::int64_t i = std::max<std::int64_t>(0, lo); i <= hi && i < static_cast<std::int64_t>(v.size()); ++i) {
      const double x = static_cast<double>(i - static_cast<std::int64_t>(b.apex_frame)) / half;
      if (std::abs(x) >= 1.0) continue;
      v[static_cast<std::size_t>(i)] -= b.depth * 0.5 * (1.0 + std::cos(std::numbers::pi * x));
    }
  }
  for (auto& x : v) x = std::clamp(x, 0.0, 1.0);
  return EarSeries(std::move(v), spec.fps, eye);
}

struct PlantedPair {
  std::size_t left_apex = 0;
  std::size_t right_apex = 0;
  bool complete = true;
};

struct Recording {
  SeriesPair series;
  std::vector<PlantedPair> plan;
};

/// A two-eye recording with `blinks_per_minute` paired blinks per minute at
/// jittered intervals. About one blink in four is partial. Right-eye apexes
/// trail or lead the left by up to `max_lag` frames.
inline Recording make_recording(double minutes, double fps, std::size_t blinks_per_minute, std::uint64_t seed,
                                std::size_t max_lag = 4) {
  Recording rec;
  const auto frames = static_cast<std::size_t>(std::llround(minutes * 60.0 * fps));
  Gaussian rng(seed);
  std::vector<PlantedBlink> left, right;
  const double complete_depth = 0.25, partial_depth = 0.14;
  const std::size_t duration = static_cast<std::size_t>(std::llround(0.25 * fps));

  const std::size_t minute_frames = static_cast<std::size_t>(std::llround(60.0 * fps));
  for (std::size_t m = 0; m * minute_frames < frames; ++m) {
    const std::size_t begin = m * minute_frames;
    const std::size_t end = std::min(frames, begin + minute_frames);
    // evenly spaced slots inside the minute, each jittered by up to a
    // quarter slot, away from the minute boundaries
    const double slot = static_cast<double>(minute_frames) / static_cast<double>(blinks_per_minute);
    for (std::size_t k = 0; k < blinks_per_minute; ++k) {
      const double centre = static_cast<double>(begin) + (static_cast<double>(k) + 0.5) * slot;
      const double jitter = (rng.uniform() - 0.5) * 0.5 * slot;
      const auto apex = static_cast<std::size_t>(std::llround(centre + jitter));
      if (apex < duration || apex + duration >= end) continue;
      const auto lag = static_cast<std::int64_t>(rng.next() % (2 * max_lag + 1)) - static_cast<std::int64_t>(max_lag);
      const std::size_t right_apex = static_cast<std::size_t>(static_cast<std::int64_t>(apex) + lag);
      const bool complete = rng.uniform() >= 0.25;
      const double depth = complete ? complete_depth : partial_depth;
      left.push_back({apex, depth + 0.01 * (rng.uniform() - 0.5), duration});
      right.push_back({right_apex, depth + 0.01 * (rng.uniform() - 0.5), duration});
      rec.plan.push_back({apex, right_apex, complete});
    }
  }
  rec.series.left = make_series({frames, fps, 0.3, 0.003, seed * 2 + 1}, Eye::left, left);
  rec.series.right = make_series({frames, fps, 0.29, 0.003, seed * 2 + 2}, Eye::right, right);
  return rec;
}

}  // namespace blinkscope::synthetic
