#pragma once

///
/// @file pipeline.hpp
///
/// Detection run over both eyes: extract, classify, match. Shared by the CLI
/// and the review service so both produce the same numbers.
///

#include <span>
#include <string>
#include <vector>

#include "blinkscope/blinks.hpp"
#include "blinkscope/series.hpp"
#include "blinkscope/stats.hpp"
#include "blinkscope/summary.hpp"

namespace blinkscope {

struct Analysis {
  SeriesPair series;
  DetectionParams params;
  std::vector<BlinkEvent> left;
  std::vector<BlinkEvent> right;
  Thresholds thresholds;
  std::vector<BlinkMatch> matches;
  std::vector<std::string> warnings;

  double fps() const { return series.left.fps(); }

  std::vector<BlinkEvent>& events(Eye eye) { return eye == Eye::left ? left : right; }
};

/// Events that take part in statistics and matching.
inline std::vector<BlinkEvent> active_events(std::span<const BlinkEvent> events) {
  std::vector<BlinkEvent> out;
  for (const auto& e : events)
    if (e.state != BlinkState::none) out.push_back(e);
  return out;
}

/// Pairs the currently active events; call again after manual state edits.
inline void rematch(Analysis& a) {
  a.matches = match_blinks(active_events(a.left), active_events(a.right), a.fps(), a.params.max_match_delay_ms);
}

/// Left events get ids 0..n-1, right events continue from n.
inline Analysis run_detection(SeriesPair series, const DetectionParams& params) {
  params.validate();
  if (series.left.fps() != series.right.fps()) throw InputError("left and right series differ in fps");
  Analysis a;
  a.series = std::move(series);
  a.params = params;
  a.left = extract_blinks(a.series.left, params, 0);
  a.right = extract_blinks(a.series.right, params, a.left.size());
  a.thresholds = resolve_thresholds(a.left, a.right, params);
  for (const auto* t : {&a.thresholds.left, &a.thresholds.right})
    if (t->warning) a.warnings.push_back(*t->warning);
  classify_blinks(a.left, a.thresholds);
  classify_blinks(a.right, a.thresholds);
  rematch(a);
  return a;
}

/// Rebuilds an analysis from a previously exported (possibly hand-edited)
/// blink table. Thresholds are re-resolved from the table's prominences.
inline Analysis analysis_from_table(SeriesPair series, const DetectionParams& params, std::vector<BlinkEvent> left,
                                    std::vector<BlinkEvent> right) {
  params.validate();
  Analysis a;
  a.series = std::move(series);
  a.params = params;
  a.left = std::move(left);
  a.right = std::move(right);
  a.thresholds = resolve_thresholds(a.left, a.right, params);
  for (const auto* t : {&a.thresholds.left, &a.thresholds.right})
    if (t->warning) a.warnings.push_back(*t->warning);
  rematch(a);
  return a;
}

inline StatsReport statistics(const Analysis& a) {
  return compute_statistics(a.left, a.right, a.series.left, a.series.right, a.thresholds, a.fps());
}

inline SummaryBundle summary(const Analysis& a, SummaryOptions options = {}) {
  options.max_match_delay_ms = a.params.max_match_delay_ms;
  return build_summary(a.series.left, a.series.right, a.left, a.right, a.matches, a.fps(), options);
}

}  // namespace blinkscope
