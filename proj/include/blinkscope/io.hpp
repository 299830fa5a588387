#pragma once

///
/// @file io.hpp
///
/// File formats: landmark CSV, score CSV, blink table CSV and statistics
/// CSV/JSON, plus atomic output writes.
///

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <unistd.h>

#include "json.hpp"

#include "blinkscope/blinks.hpp"
#include "blinkscope/csv.hpp"
#include "blinkscope/ear.hpp"
#include "blinkscope/error.hpp"
#include "blinkscope/series.hpp"
#include "blinkscope/stats.hpp"

namespace blinkscope {

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes through a temporary sibling and renames it into place, so readers
/// never see a partial file.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  namespace fs = std::filesystem;
  const fs::path tmp = path.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::error_code ignored;
      fs::remove(tmp, ignored);
      throw IoError("write failed for " + path.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignored;
    fs::remove(tmp, ignored);
    throw IoError("cannot move output into place at " + path.string() + ": " + ec.message());
  }
}

// ---------------------------------------------------------------------------
// landmarks

/// Landmark CSV: `frame, L1x,L1y[,L1z], ..., L6x,L6y[,L6z], R1x, ..., R6y[,R6z]`.
/// Columns are taken by position; the dimensionality follows from the column
/// count. An eye with any empty cell in a row is absent for that frame.
struct LandmarkTable {
  bool has_depth = false;
  std::vector<FrameLandmarks> frames;
};

inline LandmarkTable parse_landmark_csv(std::string_view text) {
  const csv::Table t = csv::parse(text);
  const std::size_t cols = t.header.size();
  LandmarkTable out;
  if (cols == 1 + 2 * 12) {
    out.has_depth = false;
  } else if (cols == 1 + 3 * 12) {
    out.has_depth = true;
  } else {
    throw InputError("landmark CSV needs 25 (2D) or 37 (3D) columns, found " + std::to_string(cols));
  }
  const std::size_t dims = out.has_depth ? 3 : 2;
  if (t.rows.empty()) throw InputError("landmark CSV has no data rows");

  out.frames.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    FrameLandmarks frame;
    for (std::size_t eye = 0; eye < 2; ++eye) {
      EyeLandmarks lm;
      bool complete = true;
      for (std::size_t p = 0; p < 6 && complete; ++p) {
        const std::size_t base = 1 + eye * 6 * dims + p * dims;
        std::optional<double> coord[3];
        for (std::size_t d = 0; d < dims; ++d) {
          try {
            coord[d] = csv::parse_number(t.cell(r, base + d));
          } catch (const InputError& e) {
            throw InputError("landmark CSV row " + std::to_string(r + 1) + ": " + e.what());
          }
          if (!coord[d]) complete = false;
        }
        if (!complete) break;
        lm[p] = Point{*coord[0], *coord[1], dims == 3 ? coord[2] : std::nullopt};
      }
      if (complete) (eye == 0 ? frame.left : frame.right) = lm;
    }
    out.frames.push_back(std::move(frame));
  }
  return out;
}

// ---------------------------------------------------------------------------
// scores

inline SeriesPair load_score_csv(const csv::Table& table, const ColumnSelection& selection, double fps) {
  const std::size_t lc = table.require_column(selection.left_column);
  const std::size_t rc = table.require_column(selection.right_column);
  if (lc == rc) throw InputError("left and right columns must differ");
  if (table.rows.empty()) throw InputError("score file has no data rows");
  if (!(fps > 0.0) || !std::isfinite(fps)) throw InputError("fps must be positive");

  const std::size_t n = table.rows.size();
  auto column = [&](std::size_t col, Eye eye) {
    std::vector<double> values(n, 0.0);
    std::vector<bool> valid(n, false);
    for (std::size_t r = 0; r < n; ++r) {
      std::optional<double> v;
      try {
        v = csv::parse_number(table.cell(r, col));
      } catch (const InputError& e) {
        throw InputError("score file row " + std::to_string(r + 1) + ", column " + table.header[col] + ": " +
                         e.what());
      }
      if (v && std::isfinite(*v)) {
        values[r] = *v;
        valid[r] = true;
      }
    }
    return EarSeries(std::move(values), std::move(valid), fps, eye);
  };
  return {column(lc, Eye::left), column(rc, Eye::right)};
}

inline SeriesPair load_score_csv(std::string_view text, const ColumnSelection& selection, double fps) {
  return load_score_csv(csv::parse(text), selection, fps);
}

inline SeriesPair load_score_csv(std::istream& in, const ColumnSelection& selection, double fps) {
  return load_score_csv(csv::read(in), selection, fps);
}

/// Score CSV with one row per frame; invalid samples are written as empty
/// cells. Values carry 12 significant digits.
inline std::string export_scores(const SeriesPair& series, std::string_view left_column = "EAR_2D_left",
                                 std::string_view right_column = "EAR_2D_right") {
  csv::Writer w;
  w.row({"frame", std::string(left_column), std::string(right_column)});
  const std::size_t n = std::max(series.left.size(), series.right.size());
  auto cell = [](const EarSeries& s, std::size_t i) {
    return i < s.size() && s.is_valid(i) ? csv::number(s[i], 12) : std::string();
  };
  for (std::size_t i = 0; i < n; ++i) w.row({std::to_string(i), cell(series.left, i), cell(series.right, i)});
  return w.take();
}

// ---------------------------------------------------------------------------
// blink table

inline const std::vector<std::string>& blink_table_header() {
  static const std::vector<std::string> header{
      "id",         "eye",          "apex_frame",   "apex_time_s", "apex_ear", "prominence", "width_frames",
      "height",     "onset_frame",  "offset_frame", "state",       "state_source", "match_id", "delay_ms"};
  return header;
}

/// One row per event ordered by id. Events that belong to a match share its
/// `match_id` (the position in `matches`); `delay_ms` is repeated on both rows
/// of a pair and blank for unilateral or unmatched events.
inline std::string export_blinks(std::span<const BlinkEvent> left, std::span<const BlinkEvent> right,
                                 std::span<const BlinkMatch> matches, double fps) {
  if (!(fps > 0.0)) throw InputError("fps must be positive");
  std::map<std::size_t, std::size_t> match_of;
  for (std::size_t m = 0; m < matches.size(); ++m) {
    if (matches[m].left_id) match_of[*matches[m].left_id] = m;
    if (matches[m].right_id) match_of[*matches[m].right_id] = m;
  }
  std::vector<const BlinkEvent*> events;
  for (auto side : {left, right})
    for (const auto& e : side) events.push_back(&e);
  std::stable_sort(events.begin(), events.end(),
                   [](const BlinkEvent* a, const BlinkEvent* b) { return a->id < b->id; });

  csv::Writer w;
  w.row(blink_table_header());
  for (const BlinkEvent* e : events) {
    std::string match_id, delay;
    if (auto it = match_of.find(e->id); it != match_of.end()) {
      match_id = std::to_string(it->second);
      if (const auto& d = matches[it->second].delay_ms; d && matches[it->second].bilateral())
        delay = csv::number(*d);
    }
    w.row({std::to_string(e->id), std::string(to_string(e->eye)), std::to_string(e->apex_frame),
           csv::number(static_cast<double>(e->apex_frame) / fps), csv::number(e->apex_ear),
           csv::number(e->prominence), csv::number(e->width_frames), csv::number(e->height),
           std::to_string(e->onset_frame), std::to_string(e->offset_frame), std::string(to_string(e->state)),
           std::string(to_string(e->state_source)), match_id, delay});
  }
  return w.take();
}

struct BlinkTable {
  std::vector<BlinkEvent> left;
  std::vector<BlinkEvent> right;
  std::vector<BlinkMatch> matches;
};

/// Reads a table written by export_blinks, including hand-edited states.
inline BlinkTable import_blinks(std::string_view text) {
  const csv::Table t = csv::parse(text);
  std::vector<std::size_t> col;
  for (const auto& name : blink_table_header()) col.push_back(t.require_column(name));

  auto cell = [&](std::size_t r, std::size_t c) { return t.cell(r, col[c]); };
  auto integer = [&](std::size_t r, std::size_t c) -> std::size_t {
    const auto v = csv::parse_number(cell(r, c));
    if (!v || *v < 0 || std::floor(*v) != *v)
      throw InputError("blink table row " + std::to_string(r + 1) + ": expected a non-negative integer in " +
                       blink_table_header()[c]);
    return static_cast<std::size_t>(*v);
  };
  auto real = [&](std::size_t r, std::size_t c) -> double {
    const auto v = csv::parse_number(cell(r, c));
    if (!v) throw InputError("blink table row " + std::to_string(r + 1) + ": missing " + blink_table_header()[c]);
    return *v;
  };

  BlinkTable out;
  std::map<std::size_t, BlinkMatch> grouped;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    BlinkEvent e;
    e.id = integer(r, 0);
    e.eye = parse_eye(cell(r, 1));
    e.apex_frame = integer(r, 2);
    e.apex_ear = real(r, 4);
    e.prominence = real(r, 5);
    e.width_frames = real(r, 6);
    e.height = real(r, 7);
    e.onset_frame = integer(r, 8);
    e.offset_frame = integer(r, 9);
    e.state = parse_blink_state(cell(r, 10));
    e.state_source = parse_state_source(cell(r, 11));
    if (!cell(r, 12).empty()) {
      BlinkMatch& m = grouped[integer(r, 12)];
      auto& slot = e.eye == Eye::left ? m.left_id : m.right_id;
      if (slot) throw InputError("blink table: match " + std::string(cell(r, 12)) + " has two events for one eye");
      slot = e.id;
      if (auto d = csv::parse_number(cell(r, 13))) m.delay_ms = *d;
    }
    (e.eye == Eye::left ? out.left : out.right).push_back(e);
  }
  for (auto& [id, m] : grouped) {
    if (!m.bilateral()) m.delay_ms.reset();
    out.matches.push_back(m);
  }
  auto by_apex = [](const BlinkEvent& a, const BlinkEvent& b) { return a.apex_frame < b.apex_frame; };
  std::stable_sort(out.left.begin(), out.left.end(), by_apex);
  std::stable_sort(out.right.begin(), out.right.end(), by_apex);
  return out;
}

// ---------------------------------------------------------------------------
// statistics

/// `statistic,value,unit` rows; absent aggregates are left out.
inline std::string export_stats_csv(const StatsReport& report) {
  csv::Writer w;
  w.row({"statistic", "value", "unit"});
  for (const auto& row : stat_rows(report))
    if (row.value) w.row({row.name, csv::number(*row.value), row.unit});
  return w.take();
}

/// Same rows as the CSV keyed by name; absent aggregates are null.
inline nlohmann::ordered_json stats_to_json(const StatsReport& report) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& row : stat_rows(report)) {
    if (row.value && row.unit == "count")
      j[row.name] = static_cast<std::uint64_t>(*row.value);
    else if (row.value)
      j[row.name] = *row.value;
    else
      j[row.name] = nullptr;
  }
  return j;
}

inline std::string export_stats_json(const StatsReport& report) { return stats_to_json(report).dump(2) + "\n"; }

}  // namespace blinkscope
