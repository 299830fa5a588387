#pragma once

///
/// @file config.hpp
///
/// Flat `key = value` parameter files. `#` starts a comment; blank lines are
/// ignored. Keys match the long CLI flag names with dashes or underscores.
///

#include <charconv>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "blinkscope/blinks.hpp"
#include "blinkscope/csv.hpp"
#include "blinkscope/error.hpp"

namespace blinkscope {

using KeyValues = std::map<std::string, std::string>;

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::string normalise_key(std::string_view key) {
  std::string out(key);
  for (char& c : out)
    if (c == '-') c = '_';
  return out;
}

}  // namespace detail

inline KeyValues parse_key_values(std::string_view text) {
  KeyValues out;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view() : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw InputError("params line " + std::to_string(line_no) + ": expected key=value");
    const std::string key = detail::normalise_key(detail::trim(line.substr(0, eq)));
    if (key.empty()) throw InputError("params line " + std::to_string(line_no) + ": empty key");
    out[key] = std::string(detail::trim(line.substr(eq + 1)));
  }
  return out;
}

namespace detail {

inline double kv_number(const std::string& key, const std::string& value) {
  const auto v = csv::parse_number(value);
  if (!v) throw InputError("params: " + key + " has no value");
  return *v;
}

inline std::size_t kv_count(const std::string& key, const std::string& value) {
  const double v = kv_number(key, value);
  if (v < 0 || v != static_cast<double>(static_cast<std::size_t>(v)))
    throw InputError("params: " + key + " must be a non-negative integer");
  return static_cast<std::size_t>(v);
}

}  // namespace detail

/// Detection keys understood in parameter files.
inline bool apply_detection_key(DetectionParams& p, const std::string& key, const std::string& value) {
  if (key == "min_prominence") {
    p.peak.min_prominence = detail::kv_number(key, value);
  } else if (key == "min_distance") {
    p.peak.min_distance = detail::kv_count(key, value);
  } else if (key == "min_width") {
    p.peak.min_width = detail::kv_number(key, value);
  } else if (key == "max_width") {
    p.peak.max_width = value == "inf" || value == "none" ? std::numeric_limits<double>::infinity()
                                                         : detail::kv_number(key, value);
  } else if (key == "rel_height") {
    p.peak.rel_height = detail::kv_number(key, value);
  } else if (key == "smooth") {
    if (value == "none" || value == "0" || value.empty())
      p.smoothing_window.reset();
    else
      p.smoothing_window = static_cast<int>(detail::kv_count(key, value));
  } else if (key == "threshold_mode") {
    p.threshold_mode = parse_threshold_mode(value);
  } else if (key == "threshold_left") {
    p.manual_threshold_left = detail::kv_number(key, value);
  } else if (key == "threshold_right") {
    p.manual_threshold_right = detail::kv_number(key, value);
  } else if (key == "max_delay") {
    p.max_match_delay_ms = detail::kv_number(key, value);
  } else if (key == "otsu_bins") {
    p.otsu_bins = detail::kv_count(key, value);
  } else {
    return false;
  }
  return true;
}

}  // namespace blinkscope
