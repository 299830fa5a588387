#pragma once

///
/// @file series.hpp
///
/// Per-eye EAR time series with a validity mask, column auto-selection for
/// score files, smoothing and gap bridging.
///

#include <algorithm>
#include <cctype>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "blinkscope/error.hpp"

namespace blinkscope {

enum class Eye { left, right };

inline std::string_view to_string(Eye eye) { return eye == Eye::left ? "left" : "right"; }

inline Eye parse_eye(std::string_view text) {
  if (text == "left") return Eye::left;
  if (text == "right") return Eye::right;
  throw InputError("unknown eye: " + std::string(text));
}

/// EAR samples at a fixed frame rate. Invalid samples keep their slot so
/// frame indices stay aligned with the source video.
class EarSeries {
public:
  EarSeries() = default;

  EarSeries(std::vector<double> values, std::vector<bool> valid, double fps, Eye eye)
      : values_(std::move(values)), valid_(std::move(valid)), fps_(fps), eye_(eye) {
    if (values_.size() != valid_.size())
      throw InputError("series values and validity mask differ in length");
    if (!(fps_ > 0.0) || !std::isfinite(fps_)) throw InputError("fps must be positive");
    for (std::size_t i = 0; i < values_.size(); ++i)
      if (valid_[i] && !std::isfinite(values_[i])) valid_[i] = false;
  }

  /// All samples valid.
  EarSeries(std::vector<double> values, double fps, Eye eye)
      : EarSeries(values, std::vector<bool>(values.size(), true), fps, eye) {}

  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }
  double fps() const noexcept { return fps_; }
  Eye eye() const noexcept { return eye_; }

  const std::vector<double>& values() const noexcept { return values_; }
  const std::vector<bool>& valid() const noexcept { return valid_; }
  double operator[](std::size_t i) const { return values_[i]; }
  bool is_valid(std::size_t i) const { return valid_[i]; }

  std::size_t valid_count() const {
    std::size_t n = 0;
    for (bool v : valid_) n += v ? 1 : 0;
    return n;
  }

  double duration_seconds() const { return static_cast<double>(size()) / fps_; }

private:
  std::vector<double> values_;
  std::vector<bool> valid_;
  double fps_ = 1.0;
  Eye eye_ = Eye::left;
};

struct SeriesPair {
  EarSeries left;
  EarSeries right;
};

struct ColumnSelection {
  std::string left_column;
  std::string right_column;
};

namespace detail {

/// Splits a header into lowercase tokens. Boundaries are non-alphanumeric
/// characters, lower-to-upper case changes, the last capital of an acronym
/// followed by a lowercase letter ("EARLeft" -> ear, left) and letter/digit
/// changes ("EAR2D6" -> ear, 2, d, 6).
inline std::vector<std::string> header_tokens(std::string_view name) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
  };
  auto is_upper = [](char c) { return std::isupper(static_cast<unsigned char>(c)) != 0; };
  auto is_lower = [](char c) { return std::islower(static_cast<unsigned char>(c)) != 0; };
  auto is_digit = [](char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; };
  auto is_alnum = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; };

  for (std::size_t i = 0; i < name.size(); ++i) {
    const char c = name[i];
    if (!is_alnum(c)) {
      flush();
      continue;
    }
    if (!current.empty()) {
      const char prev = name[i - 1];
      const bool next_lower = i + 1 < name.size() && is_lower(name[i + 1]);
      if ((is_lower(prev) && is_upper(c)) || (is_digit(prev) != is_digit(c)) ||
          (is_upper(prev) && is_upper(c) && next_lower))
        flush();
    }
    current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  flush();
  return tokens;
}

inline bool has_token(const std::vector<std::string>& tokens, std::string_view a,
                      std::string_view b = {}) {
  for (const auto& t : tokens)
    if (t == a || (!b.empty() && t == b)) return true;
  return false;
}

}  // namespace detail

/// First header carrying an "ear" token plus a left token ("left"/"l"), and
/// likewise for right. Case-insensitive. Empty when either side is unmatched.
inline std::optional<ColumnSelection> auto_select_columns(const std::vector<std::string>& headers) {
  std::optional<std::string> left, right;
  for (const auto& h : headers) {
    const auto tokens = detail::header_tokens(h);
    if (!detail::has_token(tokens, "ear")) continue;
    const bool is_left = detail::has_token(tokens, "left", "l");
    const bool is_right = detail::has_token(tokens, "right", "r");
    if (is_left == is_right) continue;  // neither, or ambiguous
    if (is_left && !left) left = h;
    if (is_right && !right) right = h;
  }
  if (!left || !right) return std::nullopt;
  return ColumnSelection{*left, *right};
}

/// Centered moving average over valid samples, truncated at the edges.
/// Invalid samples are left untouched and stay invalid.
inline EarSeries smooth(const EarSeries& series, int window) {
  if (window < 1 || window % 2 == 0)
    throw InputError("smoothing window must be a positive odd number of frames");
  if (window == 1) return series;

  const std::size_t n = series.size();
  const auto half = static_cast<std::size_t>(window / 2);
  // prefix sums over valid samples, shifted by a reference value so that
  // constant stretches come out exact
  std::optional<double> ref, lowest, highest;
  for (std::size_t i = 0; i < n; ++i) {
    if (!series.is_valid(i)) continue;
    if (!ref) ref = lowest = highest = series[i];
    lowest = std::min(*lowest, series[i]);
    highest = std::max(*highest, series[i]);
  }
  if (!ref) return series;
  std::vector<double> sum(n + 1, 0.0);
  std::vector<std::size_t> count(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const bool ok = series.is_valid(i);
    sum[i + 1] = sum[i] + (ok ? series[i] - *ref : 0.0);
    count[i + 1] = count[i] + (ok ? 1 : 0);
  }

  std::vector<double> out = series.values();
  for (std::size_t i = 0; i < n; ++i) {
    if (!series.is_valid(i)) continue;
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(n, i + half + 1);
    const auto k = static_cast<double>(count[hi] - count[lo]);
    // rounding in the prefix sums must not push a mean outside the data range
    out[i] = std::clamp(*ref + (sum[hi] - sum[lo]) / k, *lowest, *highest);
  }
  return EarSeries(std::move(out), series.valid(), series.fps(), series.eye());
}

/// A gap-free copy of a series for peak detection.
struct BridgedSignal {
  std::vector<double> values;
  std::vector<bool> bridged;  ///< true where the value was interpolated
};

/// Linear interpolation across interior invalid runs; leading and trailing
/// runs hold the nearest valid value. Requires at least one valid sample.
inline BridgedSignal bridge_invalid(const EarSeries& series) {
  const std::size_t n = series.size();
  BridgedSignal out{series.values(), std::vector<bool>(n, false)};
  std::optional<std::size_t> last_valid;
  for (std::size_t i = 0; i < n; ++i) {
    if (!series.is_valid(i)) continue;
    if (last_valid && i - *last_valid > 1) {
      const double a = series[*last_valid];
      const double b = series[i];
      const auto span = static_cast<double>(i - *last_valid);
      for (std::size_t k = *last_valid + 1; k < i; ++k) {
        out.values[k] = a + (b - a) * static_cast<double>(k - *last_valid) / span;
        out.bridged[k] = true;
      }
    } else if (!last_valid) {
      for (std::size_t k = 0; k < i; ++k) {
        out.values[k] = series[i];
        out.bridged[k] = true;
      }
    }
    last_valid = i;
  }
  if (!last_valid) throw InputError("series has no valid samples");
  for (std::size_t k = *last_valid + 1; k < n; ++k) {
    out.values[k] = series[*last_valid];
    out.bridged[k] = true;
  }
  return out;
}

}  // namespace blinkscope
