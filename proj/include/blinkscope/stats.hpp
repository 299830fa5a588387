#pragma once

///
/// @file stats.hpp
///
/// Blink statistics battery with per-minute counts.
///
/// Events in state none are ignored everywhere. Prominence, width and height
/// aggregates pool both eyes. Widths are in frames.
///

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "blinkscope/blinks.hpp"
#include "blinkscope/error.hpp"
#include "blinkscope/series.hpp"

namespace blinkscope {

struct StatsReport {
  double fps = 0.0;
  double duration_minutes = 0.0;

  std::optional<double> ear_before_blink_left_avg, ear_before_blink_right_avg;
  std::optional<double> ear_left_min, ear_left_max, ear_right_min, ear_right_max;
  std::optional<double> partial_threshold_left, partial_threshold_right;
  std::optional<double> prominence_min, prominence_max, prominence_avg;
  std::optional<double> width_min, width_max, width_avg;
  std::optional<double> height_min, height_max, height_avg;

  std::size_t partial_total_left = 0, partial_total_right = 0;
  std::size_t complete_total_left = 0, complete_total_right = 0;
  double partial_freq_left_bpm = 0.0, partial_freq_right_bpm = 0.0;
  double complete_freq_left_bpm = 0.0, complete_freq_right_bpm = 0.0;

  std::optional<double> blink_length_left_ms_avg, blink_length_left_ms_std;
  std::optional<double> blink_length_right_ms_avg, blink_length_right_ms_std;

  std::vector<std::size_t> per_minute_partial_left, per_minute_partial_right;
  std::vector<std::size_t> per_minute_complete_left, per_minute_complete_right;

  bool operator==(const StatsReport&) const = default;
};

namespace detail {

struct Aggregate {
  std::optional<double> min, max, avg;
};

inline Aggregate aggregate(const std::vector<double>& v) {
  if (v.empty()) return {};
  double sum = 0.0;
  for (double x : v) sum += x;
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  // the mean of n doubles can round past the extremes by an ulp
  return {*lo, *hi, std::clamp(sum / static_cast<double>(v.size()), *lo, *hi)};
}

inline void valid_range(const EarSeries& s, std::optional<double>& lo, std::optional<double>& hi) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!s.is_valid(i)) continue;
    lo = lo ? std::min(*lo, s[i]) : s[i];
    hi = hi ? std::max(*hi, s[i]) : s[i];
  }
}

}  // namespace detail

/// Mean of the valid samples in the three seconds before the first active
/// blink's onset. Absent when there is no blink or no valid sample in reach.
inline std::optional<double> ear_before_first_blink(const EarSeries& series,
                                                    std::span<const BlinkEvent> events) {
  const BlinkEvent* first = nullptr;
  for (const auto& e : events)
    if (e.state != BlinkState::none && (!first || e.apex_frame < first->apex_frame)) first = &e;
  if (!first) return std::nullopt;

  const std::size_t end = std::min(first->onset_frame, series.size());
  const double start_f = std::ceil(static_cast<double>(end) - 3.0 * series.fps());
  const std::size_t start = start_f > 0.0 ? static_cast<std::size_t>(start_f) : 0;
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = start; i < end; ++i) {
    if (!series.is_valid(i)) continue;
    sum += series[i];
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

inline std::size_t minute_count(std::size_t frames, double fps) {
  return static_cast<std::size_t>(std::ceil(static_cast<double>(frames) / fps / 60.0));
}

inline std::size_t minute_of(std::size_t frame, double fps, std::size_t minutes) {
  const auto m = static_cast<std::size_t>(std::floor(static_cast<double>(frame) / fps / 60.0));
  return minutes ? std::min(m, minutes - 1) : 0;
}

inline StatsReport compute_statistics(std::span<const BlinkEvent> left_events,
                                      std::span<const BlinkEvent> right_events,
                                      const EarSeries& left_series, const EarSeries& right_series,
                                      const Thresholds& thresholds, double fps) {
  if (!(fps > 0.0) || !std::isfinite(fps)) throw InputError("fps must be positive");

  StatsReport r;
  r.fps = fps;
  const std::size_t frames = std::max(left_series.size(), right_series.size());
  r.duration_minutes = static_cast<double>(frames) / fps / 60.0;
  const std::size_t minutes = minute_count(frames, fps);

  r.ear_before_blink_left_avg = ear_before_first_blink(left_series, left_events);
  r.ear_before_blink_right_avg = ear_before_first_blink(right_series, right_events);
  detail::valid_range(left_series, r.ear_left_min, r.ear_left_max);
  detail::valid_range(right_series, r.ear_right_min, r.ear_right_max);
  r.partial_threshold_left = thresholds.left.value;
  r.partial_threshold_right = thresholds.right.value;

  std::vector<double> prom, width, height;
  for (auto events : {left_events, right_events})
    for (const auto& e : events) {
      if (e.state == BlinkState::none) continue;
      prom.push_back(e.prominence);
      width.push_back(e.width_frames);
      height.push_back(e.height);
    }
  const auto pa = detail::aggregate(prom);
  const auto wa = detail::aggregate(width);
  const auto ha = detail::aggregate(height);
  r.prominence_min = pa.min, r.prominence_max = pa.max, r.prominence_avg = pa.avg;
  r.width_min = wa.min, r.width_max = wa.max, r.width_avg = wa.avg;
  r.height_min = ha.min, r.height_max = ha.max, r.height_avg = ha.avg;

  auto per_eye = [&](std::span<const BlinkEvent> events, std::size_t& partial_total,
                     std::size_t& complete_total, std::vector<std::size_t>& partial_minutes,
                     std::vector<std::size_t>& complete_minutes, std::optional<double>& length_avg,
                     std::optional<double>& length_std) {
    partial_minutes.assign(minutes, 0);
    complete_minutes.assign(minutes, 0);
    std::vector<double> lengths;
    for (const auto& e : events) {
      if (e.state == BlinkState::none) continue;
      const std::size_t m = minute_of(e.apex_frame, fps, minutes);
      if (e.state == BlinkState::partial) {
        ++partial_total;
        if (m < minutes) ++partial_minutes[m];
      } else {
        ++complete_total;
        if (m < minutes) ++complete_minutes[m];
      }
      lengths.push_back(e.width_frames / fps * 1000.0);
    }
    if (lengths.empty()) return;
    double sum = 0.0;
    for (double x : lengths) sum += x;
    const double mean = sum / static_cast<double>(lengths.size());
    double ss = 0.0;
    for (double x : lengths) ss += (x - mean) * (x - mean);
    length_avg = mean;
    length_std = std::sqrt(ss / static_cast<double>(lengths.size()));
  };
  per_eye(left_events, r.partial_total_left, r.complete_total_left, r.per_minute_partial_left,
          r.per_minute_complete_left, r.blink_length_left_ms_avg, r.blink_length_left_ms_std);
  per_eye(right_events, r.partial_total_right, r.complete_total_right, r.per_minute_partial_right,
          r.per_minute_complete_right, r.blink_length_right_ms_avg, r.blink_length_right_ms_std);

  auto rate = [&](std::size_t total) {
    return r.duration_minutes > 0.0 ? static_cast<double>(total) / r.duration_minutes : 0.0;
  };
  r.partial_freq_left_bpm = rate(r.partial_total_left);
  r.partial_freq_right_bpm = rate(r.partial_total_right);
  r.complete_freq_left_bpm = rate(r.complete_total_left);
  r.complete_freq_right_bpm = rate(r.complete_total_right);
  return r;
}

/// One named statistic as exported. `value` is empty for absent aggregates.
struct StatRow {
  std::string name;
  std::optional<double> value;
  std::string unit;
};

inline std::string minute_label(std::size_t minute_index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02zu", minute_index + 1);
  return buf;
}

/// The report flattened into named rows, in table order, with one row per
/// minute for each per-minute vector (minutes numbered from 01).
inline std::vector<StatRow> stat_rows(const StatsReport& r) {
  std::vector<StatRow> rows;
  auto add = [&](std::string name, std::optional<double> v, std::string unit) {
    rows.push_back({std::move(name), v, std::move(unit)});
  };
  auto count = [](std::size_t n) { return std::optional<double>(static_cast<double>(n)); };
  auto minutes = [&](const std::string& prefix, const std::string& eye,
                     const std::vector<std::size_t>& v) {
    for (std::size_t m = 0; m < v.size(); ++m)
      add(prefix + "_min" + minute_label(m) + "_" + eye, count(v[m]), "count");
  };
  const std::string ratio = "[0,1]";

  add("EAR_Before_Blink_left_avg", r.ear_before_blink_left_avg, ratio);
  add("EAR_Before_Blink_right_avg", r.ear_before_blink_right_avg, ratio);
  add("EAR_left_min", r.ear_left_min, ratio);
  add("EAR_right_min", r.ear_right_min, ratio);
  add("EAR_left_max", r.ear_left_max, ratio);
  add("EAR_right_max", r.ear_right_max, ratio);
  add("Partial_Blink_threshold_left", r.partial_threshold_left, ratio);
  add("Partial_Blink_threshold_right", r.partial_threshold_right, ratio);
  add("Prominence_min", r.prominence_min, ratio);
  add("Prominence_max", r.prominence_max, ratio);
  add("Prominence_avg", r.prominence_avg, ratio);
  add("Width_min", r.width_min, "frames");
  add("Width_max", r.width_max, "frames");
  add("Width_avg", r.width_avg, "frames");
  add("Height_min", r.height_min, ratio);
  add("Height_max", r.height_max, ratio);
  add("Height_avg", r.height_avg, ratio);
  add("Partial_Blink_Total_left", count(r.partial_total_left), "count");
  add("Partial_Blink_Total_right", count(r.partial_total_right), "count");
  add("Partial_Frequency_left_bpm", r.partial_freq_left_bpm, "1/min");
  add("Partial_Frequency_right_bpm", r.partial_freq_right_bpm, "1/min");
  add("Blink_Length_left_ms_avg", r.blink_length_left_ms_avg, "ms");
  add("Blink_Length_left_ms_std", r.blink_length_left_ms_std, "ms");
  add("Blink_Length_right_ms_avg", r.blink_length_right_ms_avg, "ms");
  add("Blink_Length_right_ms_std", r.blink_length_right_ms_std, "ms");
  minutes("Partial_Blinks", "left", r.per_minute_partial_left);
  minutes("Partial_Blinks", "right", r.per_minute_partial_right);
  add("Complete_Blink_Total_left", count(r.complete_total_left), "count");
  add("Complete_Blink_Total_right", count(r.complete_total_right), "count");
  add("Complete_Frequency_left_bpm", r.complete_freq_left_bpm, "1/min");
  add("Complete_Frequency_right_bpm", r.complete_freq_right_bpm, "1/min");
  minutes("Complete_Blinks", "left", r.per_minute_complete_left);
  minutes("Complete_Blinks", "right", r.per_minute_complete_right);
  return rows;
}

/// Number of rows stat_rows() emits that do not depend on the duration.
inline constexpr std::size_t fixed_stat_row_count = 29;

}  // namespace blinkscope
