#pragma once

///
/// @file ear.hpp
///
/// Eye-Aspect-Ratio from the canonical six-point eye contour.
///
/// Point order is positional: p1 outer corner, p2/p3 upper lid, p4 inner
/// corner, p5/p6 lower lid (p2 faces p6, p3 faces p5). Left and right refer
/// to the subject's own viewpoint.
///

#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "blinkscope/error.hpp"
#include "blinkscope/series.hpp"

namespace blinkscope {

struct Point {
  double x = 0.0;
  double y = 0.0;
  std::optional<double> z;
};

using EyeLandmarks = std::array<Point, 6>;

/// One video frame worth of landmarks. An absent eye means the landmarks
/// were not found for that frame.
struct FrameLandmarks {
  std::optional<EyeLandmarks> left;
  std::optional<EyeLandmarks> right;
};

enum class EarVariant { planar, spatial };

namespace detail {

inline void require_finite(const EyeLandmarks& eye, bool need_z) {
  for (const auto& p : eye) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y))
      throw InputError("landmark coordinate is not finite");
    if (need_z) {
      if (!p.z) throw InputError("3D EAR requires a z coordinate on every landmark");
      if (!std::isfinite(*p.z)) throw InputError("landmark coordinate is not finite");
    }
  }
}

inline double distance_2d(const Point& a, const Point& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

inline double distance_3d(const Point& a, const Point& b) {
  return std::hypot(a.x - b.x, a.y - b.y, *a.z - *b.z);
}

template <typename Dist>
double ear_ratio(const EyeLandmarks& p, Dist dist) {
  const double horizontal = dist(p[0], p[3]);
  if (!(horizontal > 0.0)) throw DegenerateGeometry("eye corners p1 and p4 coincide");
  return (dist(p[1], p[5]) + dist(p[2], p[4])) / (2.0 * horizontal);
}

}  // namespace detail

/// EAR-2D-6. z is ignored. The result is not clamped; see in_ear_range().
inline double compute_ear_2d(const EyeLandmarks& landmarks) {
  detail::require_finite(landmarks, false);
  return detail::ear_ratio(landmarks, detail::distance_2d);
}

/// EAR-3D-6 using straight Euclidean distances on (x, y, z).
inline double compute_ear_3d(const EyeLandmarks& landmarks) {
  detail::require_finite(landmarks, true);
  return detail::ear_ratio(landmarks, detail::distance_3d);
}

inline double compute_ear(const EyeLandmarks& landmarks, EarVariant variant) {
  return variant == EarVariant::planar ? compute_ear_2d(landmarks) : compute_ear_3d(landmarks);
}

/// An EAR value is only trusted inside [0, 1].
inline bool in_ear_range(double value) { return value >= 0.0 && value <= 1.0; }

/// Per-frame EAR for both eyes. Frames whose landmarks are missing,
/// non-finite, degenerate or outside [0, 1] stay in place as invalid samples.
inline SeriesPair ear_series_from_landmarks(std::span<const FrameLandmarks> frames, double fps,
                                            EarVariant variant = EarVariant::planar) {
  if (frames.empty()) throw InputError("no landmark frames");
  if (!(fps > 0.0) || !std::isfinite(fps)) throw InputError("fps must be positive");

  auto one_eye = [&](auto pick, Eye eye) {
    std::vector<double> values(frames.size(), 0.0);
    std::vector<bool> valid(frames.size(), false);
    for (std::size_t i = 0; i < frames.size(); ++i) {
      const std::optional<EyeLandmarks>& lm = pick(frames[i]);
      if (!lm) continue;
      try {
        const double v = compute_ear(*lm, variant);
        values[i] = v;
        valid[i] = in_ear_range(v);
      } catch (const InputError&) {
        // stays invalid
      }
    }
    return EarSeries(std::move(values), std::move(valid), fps, eye);
  };

  return {one_eye([](const FrameLandmarks& f) -> const auto& { return f.left; }, Eye::left),
          one_eye([](const FrameLandmarks& f) -> const auto& { return f.right; }, Eye::right)};
}

}  // namespace blinkscope
