#pragma once

///
/// @file summary.hpp
///
/// Visual summary of a recording: decimated EAR scatter per eye with rolling
/// mean and standard deviation, blink markers, paired blinks per minute and
/// the distribution of left/right apex delays. Rendered to SVG and to a JSON
/// bundle the review UI draws from.
///

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "blinkscope/blinks.hpp"
#include "blinkscope/error.hpp"
#include "blinkscope/series.hpp"
#include "blinkscope/stats.hpp"

namespace blinkscope {

struct RollingStats {
  EarSeries mean;
  EarSeries std;
};

/// Centered rolling mean and population standard deviation over valid
/// samples. The window covers [i - (w-1)/2, i + w/2], truncated at the
/// edges. Positions with no valid sample in reach are invalid.
inline RollingStats rolling_stats(const EarSeries& series, std::size_t window) {
  if (window < 1) throw InputError("rolling window must be at least 1 frame");
  const std::size_t n = series.size();
  if (window == 1) {
    std::vector<double> zeros(n, 0.0);
    return {series, EarSeries(std::move(zeros), series.valid(), series.fps(), series.eye())};
  }

  double ref = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    if (series.is_valid(i)) {
      ref = series[i];
      break;
    }
  std::vector<double> s1(n + 1, 0.0), s2(n + 1, 0.0);
  std::vector<std::size_t> cnt(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const bool ok = series.is_valid(i);
    const double d = ok ? series[i] - ref : 0.0;
    s1[i + 1] = s1[i] + d;
    s2[i + 1] = s2[i] + d * d;
    cnt[i + 1] = cnt[i] + (ok ? 1 : 0);
  }

  const std::size_t back = (window - 1) / 2;
  const std::size_t ahead = window / 2;
  std::vector<double> mean(n, 0.0), stdev(n, 0.0);
  std::vector<bool> valid(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= back ? i - back : 0;
    const std::size_t hi = std::min(n, i + ahead + 1);
    const std::size_t k = cnt[hi] - cnt[lo];
    if (k == 0) continue;
    const double kd = static_cast<double>(k);
    const double m = (s1[hi] - s1[lo]) / kd;
    mean[i] = ref + m;
    stdev[i] = std::sqrt(std::max(0.0, (s2[hi] - s2[lo]) / kd - m * m));
    valid[i] = true;
  }
  return {EarSeries(std::move(mean), valid, series.fps(), series.eye()),
          EarSeries(std::move(stdev), valid, series.fps(), series.eye())};
}

/// Indices 0, s, 2s, ... with the last index appended, s chosen so that at
/// most `budget` indices are produced.
inline std::vector<std::size_t> uniform_stride_indices(std::size_t n, std::size_t budget) {
  std::vector<std::size_t> idx;
  if (n == 0 || budget == 0) return idx;
  if (n <= budget) {
    idx.resize(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    return idx;
  }
  const std::size_t stride = budget > 1 ? (n - 1 + budget - 2) / (budget - 1) : n;
  for (std::size_t i = 0; i < n; i += stride) idx.push_back(i);
  if (idx.back() != n - 1) idx.push_back(n - 1);
  return idx;
}

struct TimedValues {
  std::vector<double> time_s;
  std::vector<double> value;

  std::size_t size() const { return time_s.size(); }
  bool operator==(const TimedValues&) const = default;
};

struct SummaryMarker {
  std::size_t id = 0;
  Eye eye = Eye::left;
  double time_s = 0.0;
  double apex_ear = 0.0;
  BlinkState state = BlinkState::none;

  bool operator==(const SummaryMarker&) const = default;
};

struct SummaryBundle {
  double fps = 0.0;
  double duration_s = 0.0;
  TimedValues scatter_left, scatter_right;
  TimedValues rolling_mean_left, rolling_mean_right;
  TimedValues rolling_std_left, rolling_std_right;
  std::vector<SummaryMarker> markers;
  std::vector<std::size_t> blinks_per_minute;
  std::vector<double> delay_edges_ms;
  std::vector<std::size_t> delay_counts;

  bool operator==(const SummaryBundle&) const = default;
};

struct SummaryOptions {
  std::size_t scatter_budget = 5000;
  /// Frames; defaults to five seconds when unset.
  std::optional<std::size_t> rolling_window;
  double max_match_delay_ms = 500.0;
  double delay_bin_ms = 10.0;
};

/// Bin edges centered on zero delay: the middle bin is [-w/2, w/2) and the
/// outer edges reach at least +/- max_delay.
inline std::vector<double> delay_bin_edges(double max_delay_ms, double bin_ms) {
  const double half = bin_ms / 2.0;
  const auto side = static_cast<std::size_t>(std::max(0.0, std::ceil((max_delay_ms - half) / bin_ms)));
  std::vector<double> edges;
  const double outer = static_cast<double>(side) * bin_ms + half;
  for (std::size_t k = 0; k <= 2 * side + 1; ++k)
    edges.push_back(-outer + static_cast<double>(k) * bin_ms);
  return edges;
}

inline SummaryBundle build_summary(const EarSeries& left, const EarSeries& right,
                                   std::span<const BlinkEvent> left_events,
                                   std::span<const BlinkEvent> right_events,
                                   std::span<const BlinkMatch> matches, double fps,
                                   const SummaryOptions& options = {}) {
  if (!(fps > 0.0) || !std::isfinite(fps)) throw InputError("fps must be positive");
  if (options.scatter_budget < 1000) throw InputError("scatter budget must be at least 1000");
  if (!(options.delay_bin_ms > 0.0)) throw InputError("delay bin width must be positive");
  if (!(options.max_match_delay_ms > 0.0)) throw InputError("max match delay must be positive");

  SummaryBundle b;
  b.fps = fps;
  const std::size_t frames = std::max(left.size(), right.size());
  b.duration_s = static_cast<double>(frames) / fps;
  const std::size_t window =
      options.rolling_window.value_or(std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(5.0 * fps))));

  auto decimate = [&](const EarSeries& s, TimedValues& scatter, TimedValues& mean, TimedValues& sd) {
    if (s.empty()) return;
    const RollingStats rs = rolling_stats(s, window);
    for (std::size_t i : uniform_stride_indices(s.size(), options.scatter_budget)) {
      const double t = static_cast<double>(i) / fps;
      if (s.is_valid(i)) {
        scatter.time_s.push_back(t);
        scatter.value.push_back(s[i]);
      }
      if (rs.mean.is_valid(i)) {
        mean.time_s.push_back(t);
        mean.value.push_back(rs.mean[i]);
        sd.time_s.push_back(t);
        sd.value.push_back(rs.std[i]);
      }
    }
  };
  decimate(left, b.scatter_left, b.rolling_mean_left, b.rolling_std_left);
  decimate(right, b.scatter_right, b.rolling_mean_right, b.rolling_std_right);

  std::unordered_map<std::size_t, const BlinkEvent*> by_id;
  for (auto events : {left_events, right_events})
    for (const auto& e : events) {
      by_id[e.id] = &e;
      if (e.state == BlinkState::none) continue;
      b.markers.push_back({e.id, e.eye, static_cast<double>(e.apex_frame) / fps, e.apex_ear, e.state});
    }
  std::sort(b.markers.begin(), b.markers.end(), [](const SummaryMarker& x, const SummaryMarker& y) {
    if (x.time_s != y.time_s) return x.time_s < y.time_s;
    if (x.eye != y.eye) return x.eye == Eye::left;
    return x.id < y.id;
  });

  const std::size_t minutes = minute_count(frames, fps);
  b.blinks_per_minute.assign(minutes, 0);
  b.delay_edges_ms = delay_bin_edges(options.max_match_delay_ms, options.delay_bin_ms);
  b.delay_counts.assign(b.delay_edges_ms.size() - 1, 0);
  const double lowest_edge = b.delay_edges_ms.front();
  for (const auto& m : matches) {
    const auto anchor = m.left_id ? m.left_id : m.right_id;
    if (!anchor) continue;
    const auto it = by_id.find(*anchor);
    if (it == by_id.end()) throw InputError("match refers to unknown blink id " + std::to_string(*anchor));
    if (minutes) ++b.blinks_per_minute[minute_of(it->second->apex_frame, fps, minutes)];
    if (m.bilateral() && m.delay_ms) {
      const double pos = std::floor((*m.delay_ms - lowest_edge) / options.delay_bin_ms);
      const auto bin = static_cast<std::size_t>(
          std::clamp(pos, 0.0, static_cast<double>(b.delay_counts.size() - 1)));
      ++b.delay_counts[bin];
    }
  }
  return b;
}

namespace detail {

inline nlohmann::ordered_json timed_json(const TimedValues& tv) {
  return {{"time_s", tv.time_s}, {"value", tv.value}};
}

inline TimedValues timed_from_json(const nlohmann::ordered_json& j) {
  return {j.at("time_s").get<std::vector<double>>(), j.at("value").get<std::vector<double>>()};
}

}  // namespace detail

inline nlohmann::ordered_json to_json(const SummaryBundle& b) {
  nlohmann::ordered_json markers = nlohmann::ordered_json::array();
  for (const auto& m : b.markers)
    markers.push_back({{"id", m.id},
                       {"eye", to_string(m.eye)},
                       {"time_s", m.time_s},
                       {"apex_ear", m.apex_ear},
                       {"state", to_string(m.state)}});
  return {
      {"fps", b.fps},
      {"duration_s", b.duration_s},
      {"scatter", {{"left", detail::timed_json(b.scatter_left)}, {"right", detail::timed_json(b.scatter_right)}}},
      {"rolling_mean",
       {{"left", detail::timed_json(b.rolling_mean_left)}, {"right", detail::timed_json(b.rolling_mean_right)}}},
      {"rolling_std",
       {{"left", detail::timed_json(b.rolling_std_left)}, {"right", detail::timed_json(b.rolling_std_right)}}},
      {"markers", markers},
      {"blinks_per_minute", b.blinks_per_minute},
      {"delay_histogram", {{"edges_ms", b.delay_edges_ms}, {"counts", b.delay_counts}}},
  };
}

inline SummaryBundle summary_from_json(const nlohmann::ordered_json& j) {
  SummaryBundle b;
  b.fps = j.at("fps").get<double>();
  b.duration_s = j.at("duration_s").get<double>();
  b.scatter_left = detail::timed_from_json(j.at("scatter").at("left"));
  b.scatter_right = detail::timed_from_json(j.at("scatter").at("right"));
  b.rolling_mean_left = detail::timed_from_json(j.at("rolling_mean").at("left"));
  b.rolling_mean_right = detail::timed_from_json(j.at("rolling_mean").at("right"));
  b.rolling_std_left = detail::timed_from_json(j.at("rolling_std").at("left"));
  b.rolling_std_right = detail::timed_from_json(j.at("rolling_std").at("right"));
  for (const auto& m : j.at("markers"))
    b.markers.push_back({m.at("id").get<std::size_t>(), parse_eye(m.at("eye").get<std::string>()),
                         m.at("time_s").get<double>(), m.at("apex_ear").get<double>(),
                         parse_blink_state(m.at("state").get<std::string>())});
  b.blinks_per_minute = j.at("blinks_per_minute").get<std::vector<std::size_t>>();
  b.delay_edges_ms = j.at("delay_histogram").at("edges_ms").get<std::vector<double>>();
  b.delay_counts = j.at("delay_histogram").at("counts").get<std::vector<std::size_t>>();
  return b;
}

namespace detail {

class SvgWriter {
public:
  template <typename... Args>
  void line(const char* fmt, Args... args) {
    if constexpr (sizeof...(Args) == 0) {
      out_ += fmt;
    } else {
      char buf[512];
      std::snprintf(buf, sizeof buf, fmt, args...);
      out_ += buf;
    }
    out_ += '\n';
  }
  void raw(const std::string& s) { out_ += s; }
  std::string take() { return std::move(out_); }

private:
  std::string out_;
};

inline std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline const char* eye_colour(Eye eye) { return eye == Eye::left ? "#1f77b4" : "#d62728"; }

struct Frame {
  double x, y, w, h;
};

}  // namespace detail

/// SVG 1.1 rendering of a bundle. Main panel: EAR over time, left eye blue,
/// right eye red, complete blinks as dots, partial blinks as triangles. Top
/// panel: paired blinks per minute. Right panel: apex delay distribution.
/// Output depends only on the bundle.
inline std::string render_summary_svg(const SummaryBundle& b) {
  using detail::fmt2;
  constexpr double width = 1000, height = 640;
  const detail::Frame main{70, 160, 720, 420};
  const detail::Frame top{70, 40, 720, 100};
  const detail::Frame side{820, 160, 150, 420};

  double ear_top = 0.1;
  for (const auto* tv : {&b.scatter_left, &b.scatter_right})
    for (double v : tv->value) ear_top = std::max(ear_top, v);
  for (const auto& m : b.markers) ear_top = std::max(ear_top, m.apex_ear);
  ear_top = std::ceil(ear_top * 10.0 - 1e-9) / 10.0;
  const double t_end = b.duration_s > 0 ? b.duration_s : 1.0;

  auto px = [&](double t) { return main.x + main.w * std::clamp(t / t_end, 0.0, 1.0); };
  auto py = [&](double v) { return main.y + main.h * (1.0 - std::clamp(v / ear_top, 0.0, 1.0)); };

  detail::SvgWriter svg;
  svg.line("<?xml version=\"1.0\" encoding=\"UTF-8\"?>");
  svg.line("<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"%d\" height=\"%d\" "
           "viewBox=\"0 0 %d %d\" font-family=\"sans-serif\" font-size=\"11\">",
           static_cast<int>(width), static_cast<int>(height), static_cast<int>(width), static_cast<int>(height));
  svg.line("<rect class=\"background\" x=\"0\" y=\"0\" width=\"%d\" height=\"%d\" fill=\"#ffffff\"/>",
           static_cast<int>(width), static_cast<int>(height));
  for (const auto& f : {main, top, side})
    svg.line("<rect class=\"axes\" x=\"%s\" y=\"%s\" width=\"%s\" height=\"%s\" fill=\"none\" stroke=\"#333333\"/>",
             fmt2(f.x).c_str(), fmt2(f.y).c_str(), fmt2(f.w).c_str(), fmt2(f.h).c_str());

  // axis ticks
  for (int k = 0; k <= 5; ++k) {
    const double t = t_end * k / 5.0;
    svg.line("<text class=\"tick\" x=\"%s\" y=\"%s\" text-anchor=\"middle\">%s</text>", fmt2(px(t)).c_str(),
             fmt2(main.y + main.h + 15).c_str(), fmt2(t / 60.0).c_str());
    const double v = ear_top * k / 5.0;
    svg.line("<text class=\"tick\" x=\"%s\" y=\"%s\" text-anchor=\"end\">%s</text>", fmt2(main.x - 6).c_str(),
             fmt2(py(v) + 4).c_str(), fmt2(v).c_str());
  }
  svg.line("<text class=\"label\" x=\"%s\" y=\"%s\" text-anchor=\"middle\">time [min]</text>",
           fmt2(main.x + main.w / 2).c_str(), fmt2(main.y + main.h + 32).c_str());
  svg.line("<text class=\"label\" x=\"18\" y=\"%s\" text-anchor=\"middle\" transform=\"rotate(-90 18 %s)\">EAR</text>",
           fmt2(main.y + main.h / 2).c_str(), fmt2(main.y + main.h / 2).c_str());

  struct EyeLayers {
    Eye eye;
    const TimedValues* scatter;
    const TimedValues* mean;
    const TimedValues* sd;
  };
  for (const EyeLayers& layer : {EyeLayers{Eye::left, &b.scatter_left, &b.rolling_mean_left, &b.rolling_std_left},
                                 EyeLayers{Eye::right, &b.scatter_right, &b.rolling_mean_right, &b.rolling_std_right}}) {
    const char* name = layer.eye == Eye::left ? "left" : "right";
    const char* colour = detail::eye_colour(layer.eye);
    if (layer.scatter->size() > 0) {
      std::string d;
      for (std::size_t i = 0; i < layer.scatter->size(); ++i)
        d += "M" + fmt2(px(layer.scatter->time_s[i])) + " " + fmt2(py(layer.scatter->value[i])) + "h0";
      svg.raw("<path class=\"scatter " + std::string(name) + "\" d=\"" + d + "\" stroke=\"" + colour +
              "\" stroke-width=\"1.5\" stroke-linecap=\"round\" stroke-opacity=\"0.35\" fill=\"none\"/>\n");
    }
    if (layer.mean->size() > 0) {
      std::string band, upper, lower, line;
      for (std::size_t i = 0; i < layer.mean->size(); ++i) {
        const double t = layer.mean->time_s[i], m = layer.mean->value[i], s = layer.sd->value[i];
        line += fmt2(px(t)) + "," + fmt2(py(m)) + " ";
        upper += fmt2(px(t)) + "," + fmt2(py(m + s)) + " ";
      }
      for (std::size_t i = layer.mean->size(); i-- > 0;) {
        const double t = layer.mean->time_s[i], m = layer.mean->value[i], s = layer.sd->value[i];
        lower += fmt2(px(t)) + "," + fmt2(py(m - s)) + " ";
      }
      band = upper + lower;
      band.pop_back();
      line.pop_back();
      svg.raw("<polygon class=\"rolling-std " + std::string(name) + "\" points=\"" + band + "\" fill=\"" + colour +
              "\" fill-opacity=\"0.15\" stroke=\"none\"/>\n");
      svg.raw("<polyline class=\"rolling-mean " + std::string(name) + "\" points=\"" + line + "\" fill=\"none\" stroke=\"" +
              colour + "\" stroke-width=\"1.5\"/>\n");
    }
  }

  for (const auto& m : b.markers) {
    const double x = px(m.time_s), y = py(m.apex_ear);
    const char* name = m.eye == Eye::left ? "left" : "right";
    const char* colour = detail::eye_colour(m.eye);
    if (m.state == BlinkState::complete) {
      svg.line("<circle class=\"marker complete %s\" data-id=\"%zu\" cx=\"%s\" cy=\"%s\" r=\"3.5\" fill=\"%s\"/>", name,
               m.id, fmt2(x).c_str(), fmt2(y).c_str(), colour);
    } else {
      svg.line("<polygon class=\"marker partial %s\" data-id=\"%zu\" points=\"%s,%s %s,%s %s,%s\" fill=\"%s\"/>", name,
               m.id, fmt2(x).c_str(), fmt2(y - 4.5).c_str(), fmt2(x - 4).c_str(), fmt2(y + 3).c_str(),
               fmt2(x + 4).c_str(), fmt2(y + 3).c_str(), colour);
    }
  }

  // paired blinks per minute, aligned with the time axis of the main panel
  std::size_t bpm_max = 1;
  for (auto c : b.blinks_per_minute) bpm_max = std::max(bpm_max, c);
  for (std::size_t k = 0; k < b.blinks_per_minute.size(); ++k) {
    const double t0 = static_cast<double>(k) * 60.0;
    const double t1 = std::min(t_end, t0 + 60.0);
    const double h = top.h * static_cast<double>(b.blinks_per_minute[k]) / static_cast<double>(bpm_max);
    svg.line("<rect class=\"bpm-bar\" data-minute=\"%zu\" data-count=\"%zu\" x=\"%s\" y=\"%s\" width=\"%s\" "
             "height=\"%s\" fill=\"#7f7f7f\" stroke=\"#ffffff\"/>",
             k + 1, b.blinks_per_minute[k], fmt2(px(t0)).c_str(), fmt2(top.y + top.h - h).c_str(),
             fmt2(std::max(0.0, px(t1) - px(t0))).c_str(), fmt2(h).c_str());
  }
  svg.line("<text class=\"label\" x=\"%s\" y=\"%s\">blinks per minute (max %zu)</text>", fmt2(top.x).c_str(),
           fmt2(top.y - 8).c_str(), bpm_max);

  // delay distribution, delay on the vertical axis
  std::size_t delay_max = 1;
  for (auto c : b.delay_counts) delay_max = std::max(delay_max, c);
  const std::size_t nbins = b.delay_counts.size();
  for (std::size_t k = 0; k < nbins; ++k) {
    const double h = side.h / static_cast<double>(nbins);
    const double y = side.y + side.h - static_cast<double>(k + 1) * h;
    const double w = side.w * static_cast<double>(b.delay_counts[k]) / static_cast<double>(delay_max);
    svg.line("<rect class=\"delay-bar\" data-from-ms=\"%s\" data-count=\"%zu\" x=\"%s\" y=\"%s\" width=\"%s\" "
             "height=\"%s\" fill=\"#2ca02c\"/>",
             fmt2(b.delay_edges_ms[k]).c_str(), b.delay_counts[k], fmt2(side.x).c_str(), fmt2(y).c_str(),
             fmt2(w).c_str(), fmt2(h).c_str());
  }
  if (nbins) {
    svg.line("<text class=\"tick\" x=\"%s\" y=\"%s\">%s ms</text>", fmt2(side.x + 2).c_str(),
             fmt2(side.y + side.h + 15).c_str(), fmt2(b.delay_edges_ms.front()).c_str());
    svg.line("<text class=\"tick\" x=\"%s\" y=\"%s\">%s ms</text>", fmt2(side.x + 2).c_str(), fmt2(side.y - 4).c_str(),
             fmt2(b.delay_edges_ms.back()).c_str());
  }
  svg.line("<text class=\"label\" x=\"%s\" y=\"%s\">right - left apex delay</text>", fmt2(side.x).c_str(),
           fmt2(side.y - 18).c_str());

  svg.line("<text class=\"legend\" x=\"%s\" y=\"%s\" fill=\"%s\">left eye</text>", fmt2(main.x + 8).c_str(),
           fmt2(main.y + 14).c_str(), detail::eye_colour(Eye::left));
  svg.line("<text class=\"legend\" x=\"%s\" y=\"%s\" fill=\"%s\">right eye</text>", fmt2(main.x + 70).c_str(),
           fmt2(main.y + 14).c_str(), detail::eye_colour(Eye::right));
  svg.line("<text class=\"legend\" x=\"%s\" y=\"%s\">&#9679; complete  &#9650; partial</text>",
           fmt2(main.x + 140).c_str(), fmt2(main.y + 14).c_str());
  svg.line("</svg>");
  return svg.take();
}

}  // namespace blinkscope
