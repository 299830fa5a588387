#pragma once

///
/// @file blinks.hpp
///
/// Blink extraction on the inverted EAR signal, partial/complete
/// classification by prominence, and left/right pairing by apex time.
///

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "blinkscope/error.hpp"
#include "blinkscope/peaks.hpp"
#include "blinkscope/series.hpp"

namespace blinkscope {

enum class BlinkState { none, partial, complete };
enum class StateSource { automatic, manual };
enum class ThresholdMode { automatic, manual };

inline std::string_view to_string(BlinkState s) {
  switch (s) {
    case BlinkState::none: return "none";
    case BlinkState::partial: return "partial";
    case BlinkState::complete: return "complete";
  }
  return "none";
}

inline BlinkState parse_blink_state(std::string_view text) {
  if (text == "none") return BlinkState::none;
  if (text == "partial") return BlinkState::partial;
  if (text == "complete") return BlinkState::complete;
  throw InputError("unknown blink state: " + std::string(text));
}

inline std::string_view to_string(StateSource s) {
  return s == StateSource::manual ? "manual" : "auto";
}

inline StateSource parse_state_source(std::string_view text) {
  if (text == "auto") return StateSource::automatic;
  if (text == "manual") return StateSource::manual;
  throw InputError("unknown state source: " + std::string(text));
}

inline std::string_view to_string(ThresholdMode m) {
  return m == ThresholdMode::manual ? "manual" : "auto";
}

inline ThresholdMode parse_threshold_mode(std::string_view text) {
  if (text == "auto") return ThresholdMode::automatic;
  if (text == "manual") return ThresholdMode::manual;
  throw InputError("threshold mode must be 'auto' or 'manual', got: " + std::string(text));
}

/// Extraction settings. Peak settings apply to the inverted signal 1 - EAR,
/// so prominences and heights are in EAR units.
struct DetectionParams {
  PeakParams peak{0.1, 50, 10.0, 100.0, 0.5};
  std::optional<int> smoothing_window;
  ThresholdMode threshold_mode = ThresholdMode::automatic;
  std::optional<double> manual_threshold_left;
  std::optional<double> manual_threshold_right;
  double max_match_delay_ms = 500.0;
  std::size_t otsu_bins = 256;

  std::optional<double> manual_threshold(Eye eye) const {
    return eye == Eye::left ? manual_threshold_left : manual_threshold_right;
  }

  void validate() const {
    peak.validate();
    if (smoothing_window && (*smoothing_window < 1 || *smoothing_window % 2 == 0))
      throw InputError("smoothing window must be a positive odd number of frames");
    for (const auto& t : {manual_threshold_left, manual_threshold_right})
      if (t && !(*t >= 0.0 && *t <= 1.0)) throw InputError("manual thresholds must lie in [0, 1]");
    if (threshold_mode == ThresholdMode::manual &&
        (!manual_threshold_left || !manual_threshold_right))
      throw InputError("manual threshold mode needs a threshold for each eye");
    if (!(max_match_delay_ms > 0.0) || !std::isfinite(max_match_delay_ms))
      throw InputError("max match delay must be positive");
    if (otsu_bins < 2) throw InputError("otsu bins must be at least 2");
  }
};

struct BlinkEvent {
  std::size_t id = 0;
  Eye eye = Eye::left;
  std::size_t apex_frame = 0;
  double apex_ear = 0.0;
  double prominence = 0.0;
  double width_frames = 0.0;
  double height = 0.0;  ///< 1 - apex_ear
  std::size_t onset_frame = 0;
  std::size_t offset_frame = 0;
  BlinkState state = BlinkState::none;
  StateSource state_source = StateSource::automatic;

  bool operator==(const BlinkEvent&) const = default;
};

struct BlinkMatch {
  std::optional<std::size_t> left_id;
  std::optional<std::size_t> right_id;
  std::optional<double> delay_ms;  ///< right apex time minus left apex time

  bool bilateral() const { return left_id.has_value() && right_id.has_value(); }
  bool operator==(const BlinkMatch&) const = default;
};

/// Detects blinks in one eye. Ids are assigned consecutively from `first_id`
/// in apex order; every event starts in state none.
inline std::vector<BlinkEvent> extract_blinks(const EarSeries& series, const DetectionParams& params,
                                              std::size_t first_id = 0) {
  params.validate();
  if (series.size() < 3 || series.valid_count() < 3)
    throw InputError("blink extraction needs at least 3 valid samples");

  const EarSeries source =
      params.smoothing_window ? smooth(series, *params.smoothing_window) : series;
  const BridgedSignal bridged = bridge_invalid(source);

  std::vector<double> inverted(bridged.values.size());
  std::transform(bridged.values.begin(), bridged.values.end(), inverted.begin(),
                 [](double v) { return 1.0 - v; });

  std::vector<BlinkEvent> events;
  for (const PeakCandidate& c : find_peaks(inverted, params.peak)) {
    if (bridged.bridged[c.index]) continue;
    BlinkEvent e;
    e.id = first_id + events.size();
    e.eye = series.eye();
    e.apex_frame = c.index;
    e.apex_ear = source[c.index];
    e.prominence = c.prominence;
    e.width_frames = c.width;
    e.height = c.height;
    e.onset_frame = c.left_base;
    e.offset_frame = c.right_base;
    events.push_back(e);
  }
  return events;
}

namespace detail {

/// Edge k of `bins` equal-width bins over [lo, hi].
inline double histogram_edge(double lo, double hi, std::size_t bins, std::size_t k) {
  return lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(bins);
}

/// Bin membership is defined by the edges themselves: edge(k) <= v <
/// edge(k + 1), with the top bin closed. The division only seeds the search.
inline std::size_t histogram_bin(double v, double lo, double hi, std::size_t bins) {
  auto k = static_cast<std::size_t>(
      std::clamp((v - lo) / (hi - lo) * static_cast<double>(bins), 0.0,
                 static_cast<double>(bins - 1)));
  while (k > 0 && v < histogram_edge(lo, hi, bins, k)) --k;
  while (k + 1 < bins && v >= histogram_edge(lo, hi, bins, k + 1)) ++k;
  return k;
}

}  // namespace detail

/// Otsu's threshold over a set of prominences: the interior bin edge that
/// maximises the between-class variance of the histogram, lowest edge on ties.
/// Scores are compared exactly in integer arithmetic on bin indices.
inline double otsu_threshold(std::span<const double> values, std::size_t bins = 256) {
  if (bins < 2) throw InputError("otsu needs at least 2 bins");
  if (values.empty()) throw DegenerateDistribution("otsu needs at least one value");
  if (values.size() > 100000) throw InputError("otsu supports at most 100000 values");
  for (double v : values)
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) throw InputError("otsu values must lie in [0, 1]");

  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (!(lo < hi)) throw DegenerateDistribution("otsu needs at least 2 distinct values");

  std::vector<std::int64_t> counts(bins, 0);
  for (double v : values) ++counts[detail::histogram_bin(v, lo, hi, bins)];

  using u128 = unsigned __int128;
  std::int64_t n_total = 0, s_total = 0;
  for (std::size_t b = 0; b < bins; ++b) {
    n_total += counts[b];
    s_total += counts[b] * static_cast<std::int64_t>(b);
  }

  // between-class variance is proportional to (s0*n1 - s1*n0)^2 / (n0*n1)
  std::optional<std::size_t> best;
  u128 best_num = 0, best_den = 1;
  std::int64_t n0 = 0, s0 = 0;
  for (std::size_t k = 1; k < bins; ++k) {
    n0 += counts[k - 1];
    s0 += counts[k - 1] * static_cast<std::int64_t>(k - 1);
    const std::int64_t n1 = n_total - n0;
    const std::int64_t s1 = s_total - s0;
    if (n0 == 0 || n1 == 0) continue;
    const std::int64_t diff = s0 * n1 - s1 * n0;
    const u128 mag = static_cast<u128>(diff < 0 ? -diff : diff);
    const u128 num = mag * mag;
    const u128 den = static_cast<u128>(n0) * static_cast<u128>(n1);
    if (!best || num * best_den > best_num * den) {
      best = k;
      best_num = num;
      best_den = den;
    }
  }
  if (!best) throw DegenerateDistribution("values are too close together to split");
  return detail::histogram_edge(lo, hi, bins, *best);
}

enum class ThresholdSource { otsu, manual, fallback_manual, fallback_all_complete, none };

inline std::string_view to_string(ThresholdSource s) {
  switch (s) {
    case ThresholdSource::otsu: return "otsu";
    case ThresholdSource::manual: return "manual";
    case ThresholdSource::fallback_manual: return "fallback_manual";
    case ThresholdSource::fallback_all_complete: return "fallback_all_complete";
    case ThresholdSource::none: return "none";
  }
  return "none";
}

struct EyeThreshold {
  std::optional<double> value;
  ThresholdSource source = ThresholdSource::none;
  std::optional<std::string> warning;
};

struct Thresholds {
  EyeThreshold left;
  EyeThreshold right;

  const EyeThreshold& operator[](Eye eye) const { return eye == Eye::left ? left : right; }
};

/// Picks the partial/complete threshold for one eye from all of that eye's
/// events. When Otsu cannot split the prominences the manual threshold is
/// used if set; otherwise the threshold drops to the smallest prominence so
/// that every blink is complete.
inline EyeThreshold resolve_threshold(std::span<const BlinkEvent> events, Eye eye,
                                      const DetectionParams& params) {
  if (params.threshold_mode == ThresholdMode::manual)
    return {params.manual_threshold(eye), ThresholdSource::manual, std::nullopt};

  std::vector<double> prom;
  for (const auto& e : events)
    if (e.eye == eye) prom.push_back(e.prominence);
  if (prom.empty()) return {std::nullopt, ThresholdSource::none, std::nullopt};

  try {
    return {otsu_threshold(prom, params.otsu_bins), ThresholdSource::otsu, std::nullopt};
  } catch (const DegenerateDistribution&) {
    const std::string eye_name(to_string(eye));
    if (const auto manual = params.manual_threshold(eye))
      return {manual, ThresholdSource::fallback_manual,
              "automatic threshold undefined for " + eye_name + " eye; using manual threshold"};
    return {*std::min_element(prom.begin(), prom.end()), ThresholdSource::fallback_all_complete,
            "automatic threshold undefined for " + eye_name + " eye; all blinks marked complete"};
  }
}

inline Thresholds resolve_thresholds(std::span<const BlinkEvent> left,
                                     std::span<const BlinkEvent> right,
                                     const DetectionParams& params) {
  return {resolve_threshold(left, Eye::left, params), resolve_threshold(right, Eye::right, params)};
}

/// prominence >= threshold is complete, below is partial. Manually set
/// states are kept unless `reset` is given.
inline void classify_blinks(std::vector<BlinkEvent>& events, const Thresholds& thresholds,
                            bool reset = false) {
  for (const Eye eye : {Eye::left, Eye::right}) {
    const auto& t = thresholds[eye].value;
    if (t && !(*t >= 0.0 && *t <= 1.0)) throw InputError("threshold must lie in [0, 1]");
  }
  for (auto& e : events) {
    if (e.state_source == StateSource::manual && !reset) continue;
    const auto& t = thresholds[e.eye].value;
    e.state = (!t || e.prominence >= *t) ? BlinkState::complete : BlinkState::partial;
    e.state_source = StateSource::automatic;
  }
}

/// Sets one event's state by hand. Other fields are untouched.
inline void set_blink_state(std::vector<BlinkEvent>& events, std::size_t event_id,
                            BlinkState new_state) {
  auto it = std::find_if(events.begin(), events.end(),
                         [&](const BlinkEvent& e) { return e.id == event_id; });
  if (it == events.end()) throw InputError("unknown blink id: " + std::to_string(event_id));
  it->state = new_state;
  it->state_source = StateSource::manual;
}

namespace detail {

/// Minimum-cost assignment of every row to a distinct column (rows <= cols).
/// Returns the column chosen for each row.
inline std::vector<std::size_t> min_cost_assignment(
    const std::vector<std::vector<std::int64_t>>& cost) {
  const std::size_t n = cost.size();
  const std::size_t m = n ? cost[0].size() : 0;
  constexpr std::int64_t inf = std::numeric_limits<std::int64_t>::max() / 4;
  // 1-based potentials; column 0 is the virtual start
  std::vector<std::int64_t> u(n + 1, 0), v(m + 1, 0);
  std::vector<std::size_t> owner(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    owner[0] = i;
    std::size_t j0 = 0;
    std::vector<std::int64_t> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = owner[j0];
      std::int64_t delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const std::int64_t cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[owner[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (owner[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      owner[j0] = owner[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> row_to_col(n, 0);
  for (std::size_t j = 1; j <= m; ++j)
    if (owner[j] != 0) row_to_col[owner[j] - 1] = j - 1;
  return row_to_col;
}

inline std::size_t find_root(std::vector<std::size_t>& parent, std::size_t x) {
  while (parent[x] != x) x = parent[x] = parent[parent[x]];
  return x;
}

}  // namespace detail

/// Pairs left and right blinks by apex time. Only pairs whose delay is within
/// `max_delay_ms` are eligible; among eligible pairings the one with the most
/// pairs is chosen, and among those the one with the smallest total
/// |delay|. Unpaired events become unilateral matches. Output is ordered by
/// the earlier apex of each match.
inline std::vector<BlinkMatch> match_blinks(std::span<const BlinkEvent> left,
                                            std::span<const BlinkEvent> right, double fps,
                                            double max_delay_ms) {
  if (!(fps > 0.0) || !std::isfinite(fps)) throw InputError("fps must be positive");
  if (!(max_delay_ms > 0.0)) throw InputError("max match delay must be positive");

  auto by_apex = [](std::span<const BlinkEvent> ev) {
    std::vector<std::size_t> order(ev.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return ev[a].apex_frame < ev[b].apex_frame;
    });
    return order;
  };
  const auto lo = by_apex(left);
  const auto ro = by_apex(right);
  const std::size_t nl = lo.size(), nr = ro.size();

  auto frame_gap = [&](std::size_t li, std::size_t ri) {
    return static_cast<std::int64_t>(right[ro[ri]].apex_frame) -
           static_cast<std::int64_t>(left[lo[li]].apex_frame);
  };
  auto delay_ms = [&](std::int64_t gap) { return static_cast<double>(gap) * 1000.0 / fps; };

  // eligible edges in sorted order; nodes 0..nl-1 left, nl.. right
  struct Edge {
    std::size_t l, r;
    std::int64_t gap;
  };
  std::vector<Edge> edges;
  std::vector<std::size_t> parent(nl + nr);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  std::size_t start = 0;
  for (std::size_t li = 0; li < nl; ++li) {
    while (start < nr && delay_ms(frame_gap(li, start)) < -max_delay_ms) ++start;
    for (std::size_t ri = start; ri < nr; ++ri) {
      const std::int64_t gap = frame_gap(li, ri);
      if (delay_ms(gap) > max_delay_ms) break;
      if (std::abs(delay_ms(gap)) > max_delay_ms) continue;
      edges.push_back({li, ri, gap});
      parent[detail::find_root(parent, li)] = detail::find_root(parent, nl + ri);
    }
  }

  std::vector<std::optional<std::size_t>> partner(nl);  // left -> right (sorted positions)

  // each connected component of the eligibility graph is solved on its own
  std::vector<std::vector<std::size_t>> comp_left(nl + nr), comp_right(nl + nr);
  for (std::size_t li = 0; li < nl; ++li) comp_left[detail::find_root(parent, li)].push_back(li);
  for (std::size_t ri = 0; ri < nr; ++ri)
    comp_right[detail::find_root(parent, nl + ri)].push_back(ri);
  std::vector<std::vector<Edge>> comp_edges(nl + nr);
  for (const Edge& e : edges) comp_edges[detail::find_root(parent, e.l)].push_back(e);

  for (std::size_t root = 0; root < nl + nr; ++root) {
    const auto& ce = comp_edges[root];
    if (ce.empty()) continue;
    if (ce.size() == 1) {
      partner[ce[0].l] = ce[0].r;
      continue;
    }
    const auto& cl = comp_left[root];
    const auto& cr = comp_right[root];
    const bool transpose = cl.size() > cr.size();
    const std::size_t rows = transpose ? cr.size() : cl.size();
    const std::size_t cols = transpose ? cl.size() : cr.size();

    std::int64_t max_gap = 0;
    for (const Edge& e : ce) max_gap = std::max(max_gap, std::abs(e.gap));
    // one extra pair always outweighs any difference in total delay
    const std::int64_t pair_bonus = max_gap * static_cast<std::int64_t>(rows) + 1;

    auto local = [](const std::vector<std::size_t>& ids, std::size_t id) {
      return static_cast<std::size_t>(std::lower_bound(ids.begin(), ids.end(), id) - ids.begin());
    };
    std::vector<std::vector<std::int64_t>> cost(rows, std::vector<std::int64_t>(cols, 0));
    std::vector<std::vector<char>> eligible(rows, std::vector<char>(cols, 0));
    for (const Edge& e : ce) {
      const std::size_t a = local(cl, e.l), b = local(cr, e.r);
      const std::size_t row = transpose ? b : a, col = transpose ? a : b;
      cost[row][col] = std::abs(e.gap) - pair_bonus;
      eligible[row][col] = 1;
    }
    const auto assignment = detail::min_cost_assignment(cost);
    for (std::size_t row = 0; row < rows; ++row) {
      const std::size_t col = assignment[row];
      if (!eligible[row][col]) continue;
      const std::size_t a = transpose ? col : row, b = transpose ? row : col;
      partner[cl[a]] = cr[b];
    }
  }

  struct Entry {
    std::size_t first_frame;
    int side;  // left-containing matches before right-only ones on equal frames
    BlinkMatch match;
  };
  std::vector<Entry> entries;
  std::vector<char> right_used(nr, 0);
  for (std::size_t li = 0; li < nl; ++li) {
    const BlinkEvent& le = left[lo[li]];
    BlinkMatch m;
    m.left_id = le.id;
    std::size_t first = le.apex_frame;
    if (partner[li]) {
      const std::size_t ri = *partner[li];
      right_used[ri] = 1;
      m.right_id = right[ro[ri]].id;
      m.delay_ms = delay_ms(frame_gap(li, ri));
      first = std::min(first, right[ro[ri]].apex_frame);
    }
    entries.push_back({first, 0, m});
  }
  for (std::size_t ri = 0; ri < nr; ++ri) {
    if (right_used[ri]) continue;
    entries.push_back({right[ro[ri]].apex_frame, 1, BlinkMatch{std::nullopt, right[ro[ri]].id, std::nullopt}});
  }
  std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return a.first_frame != b.first_frame ? a.first_frame < b.first_frame : a.side < b.side;
  });

  std::vector<BlinkMatch> out;
  out.reserve(entries.size());
  for (auto& e : entries) out.push_back(std::move(e.match));
  return out;
}

}  // namespace blinkscope
