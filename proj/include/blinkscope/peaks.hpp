#pragma once

///
/// @file peaks.hpp
///
/// One-dimensional peak detection: local maxima with plateau handling,
/// minimum-distance pruning, topographic prominence and widths at a relative
/// height. The semantics follow the widely used find_peaks contract:
///
///  * a maximum (or plateau) must be strictly higher than the nearest
///    differing sample on both sides; endpoints never qualify; a plateau is
///    reported at the floor of its midpoint
///  * distance pruning visits peaks by descending height (ties: lower index
///    first) and drops every peak strictly closer than `min_distance` to a
///    peak that survived
///  * prominence is measured over the full signal (no window)
///  * filters run in the order distance, prominence, width
///

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "blinkscope/error.hpp"

namespace blinkscope {

struct PeakParams {
  double min_prominence = 0.0;
  std::size_t min_distance = 1;
  double min_width = 0.0;
  double max_width = std::numeric_limits<double>::infinity();
  double rel_height = 0.5;

  void validate() const {
    if (min_distance < 1) throw InputError("min_distance must be at least 1");
    if (!(min_prominence >= 0.0)) throw InputError("min_prominence must be >= 0");
    if (!(min_width >= 0.0)) throw InputError("min_width must be >= 0");
    if (!(min_width <= max_width)) throw InputError("min_width must not exceed max_width");
    if (!(rel_height > 0.0 && rel_height <= 1.0)) throw InputError("rel_height must be in (0, 1]");
  }
};

struct Prominence {
  double prominence = 0.0;
  std::size_t left_base = 0;
  std::size_t right_base = 0;
};

struct PeakWidth {
  double width = 0.0;
  double width_height = 0.0;
  double left_ip = 0.0;
  double right_ip = 0.0;
};

struct PeakCandidate {
  std::size_t index = 0;
  double height = 0.0;
  double prominence = 0.0;
  std::size_t left_base = 0;
  std::size_t right_base = 0;
  double width = 0.0;
  double width_height = 0.0;
  double left_ip = 0.0;
  double right_ip = 0.0;
};

namespace detail {

inline void require_finite(std::span<const double> signal) {
  for (double v : signal)
    if (!std::isfinite(v)) throw InputError("peak detection requires finite samples");
}

}  // namespace detail

inline std::vector<std::size_t> local_maxima(std::span<const double> x) {
  if (x.size() < 3) throw InputError("peak detection needs at least 3 samples");
  detail::require_finite(x);

  std::vector<std::size_t> peaks;
  const std::size_t last = x.size() - 1;
  std::size_t i = 1;
  while (i < last) {
    if (x[i - 1] < x[i]) {
      std::size_t ahead = i + 1;
      while (ahead < last && x[ahead] == x[i]) ++ahead;
      if (x[ahead] < x[i]) {
        peaks.push_back((i + ahead - 1) / 2);
        i = ahead;
      }
    }
    ++i;
  }
  return peaks;
}

/// `apexes` must be strictly increasing; `heights` is parallel to it.
inline std::vector<std::size_t> select_by_distance(std::span<const std::size_t> apexes,
                                                   std::span<const double> heights,
                                                   std::size_t min_distance) {
  if (apexes.size() != heights.size()) throw InputError("apexes and heights differ in length");
  const std::size_t n = apexes.size();
  if (min_distance <= 1 || n < 2) return {apexes.begin(), apexes.end()};

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return heights[a] > heights[b]; });

  std::vector<char> keep(n, 1);
  for (std::size_t j : order) {
    if (!keep[j]) continue;
    for (std::size_t k = j; k-- > 0 && apexes[j] - apexes[k] < min_distance;) keep[k] = 0;
    for (std::size_t k = j + 1; k < n && apexes[k] - apexes[j] < min_distance; ++k) keep[k] = 0;
  }

  std::vector<std::size_t> kept;
  for (std::size_t j = 0; j < n; ++j)
    if (keep[j]) kept.push_back(apexes[j]);
  return kept;
}

inline std::vector<Prominence> prominences(std::span<const double> x,
                                           std::span<const std::size_t> apexes) {
  std::vector<Prominence> out;
  out.reserve(apexes.size());
  for (std::size_t peak : apexes) {
    if (peak == 0 || peak + 1 >= x.size()) throw InputError("apex is not a local maximum");
    const double h = x[peak];
    if (!(x[peak - 1] <= h && x[peak + 1] <= h)) throw InputError("apex is not a local maximum");

    Prominence p{0.0, peak, peak};
    double left_min = h;
    for (std::size_t i = peak + 1; i-- > 0 && x[i] <= h;) {
      if (x[i] < left_min) {
        left_min = x[i];
        p.left_base = i;
      }
    }
    double right_min = h;
    for (std::size_t i = peak; i < x.size() && x[i] <= h; ++i) {
      if (x[i] < right_min) {
        right_min = x[i];
        p.right_base = i;
      }
    }
    p.prominence = h - std::max(left_min, right_min);
    out.push_back(p);
  }
  return out;
}

inline std::vector<PeakWidth> widths(std::span<const double> x, std::span<const std::size_t> apexes,
                                     std::span<const Prominence> prom, double rel_height = 0.5) {
  if (apexes.size() != prom.size()) throw InputError("apexes and prominences differ in length");
  if (!(rel_height > 0.0 && rel_height <= 1.0)) throw InputError("rel_height must be in (0, 1]");

  std::vector<PeakWidth> out;
  out.reserve(apexes.size());
  for (std::size_t k = 0; k < apexes.size(); ++k) {
    const std::size_t peak = apexes[k];
    const Prominence& p = prom[k];
    if (!(p.left_base <= peak && peak <= p.right_base && p.right_base < x.size()))
      throw InputError("prominence bases do not bracket the apex");

    PeakWidth w;
    w.width_height = x[peak] - p.prominence * rel_height;
    const double eval = w.width_height;

    std::size_t i = peak;
    while (p.left_base < i && eval < x[i]) --i;
    w.left_ip = static_cast<double>(i);
    if (x[i] < eval) w.left_ip += (eval - x[i]) / (x[i + 1] - x[i]);

    i = peak;
    while (i < p.right_base && eval < x[i]) ++i;
    w.right_ip = static_cast<double>(i);
    if (x[i] < eval) w.right_ip -= (eval - x[i]) / (x[i - 1] - x[i]);

    w.width = w.right_ip - w.left_ip;
    out.push_back(w);
  }
  return out;
}

inline std::vector<PeakCandidate> find_peaks(std::span<const double> x, const PeakParams& params) {
  params.validate();
  auto apexes = local_maxima(x);

  if (params.min_distance > 1) {
    std::vector<double> heights;
    heights.reserve(apexes.size());
    for (std::size_t a : apexes) heights.push_back(x[a]);
    apexes = select_by_distance(apexes, heights, params.min_distance);
  }

  auto prom = prominences(x, apexes);
  std::size_t kept = 0;
  for (std::size_t k = 0; k < apexes.size(); ++k) {
    if (prom[k].prominence >= params.min_prominence) {
      apexes[kept] = apexes[k];
      prom[kept] = prom[k];
      ++kept;
    }
  }
  apexes.resize(kept);
  prom.resize(kept);

  const auto wid = widths(x, apexes, prom, params.rel_height);

  std::vector<PeakCandidate> out;
  for (std::size_t k = 0; k < apexes.size(); ++k) {
    const PeakWidth& w = wid[k];
    if (!(params.min_width <= w.width && w.width <= params.max_width)) continue;
    out.push_back({apexes[k], x[apexes[k]], prom[k].prominence, prom[k].left_base,
                   prom[k].right_base, w.width, w.width_height, w.left_ip, w.right_ip});
  }
  return out;
}

}  // namespace blinkscope
