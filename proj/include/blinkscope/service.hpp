#pragma once

///
/// @file service.hpp
///
/// Session-scoped JSON-over-HTTP API for reviewing blink detections.
///
/// All endpoints live under /api/v1/. A session holds one uploaded score
/// file, its column selection, detection parameters and the current events.
/// Every mutation bumps the session version, which is echoed in JSON bodies
/// and in the X-Session-Version header. Concurrent edits are last write wins.
///
///   POST   /api/v1/sessions                      upload (JSON {fps, csv} or text/csv with ?fps=)
///   GET    /api/v1/sessions/{id}                 session overview
///   DELETE /api/v1/sessions/{id}
///   GET    /api/v1/sessions/{id}/columns         auto-selected and current columns
///   PUT    /api/v1/sessions/{id}/columns         {left, right}
///   GET    /api/v1/sessions/{id}/params
///   PUT    /api/v1/sessions/{id}/params          partial update, 400 with per-field errors
///   POST   /api/v1/sessions/{id}/detect
///   GET    /api/v1/sessions/{id}/events          ?offset=&limit=
///   GET    /api/v1/sessions/{id}/events/{eid}
///   PATCH  /api/v1/sessions/{id}/events/{eid}    {state}
///   GET    /api/v1/sessions/{id}/matches
///   GET    /api/v1/sessions/{id}/stats           same document as the CLI's stats.json
///   GET    /api/v1/sessions/{id}/summary         summary bundle JSON
///   GET    /api/v1/sessions/{id}/summary.svg
///   GET    /api/v1/sessions/{id}/series          ?budget= decimated EAR for plotting
///   POST   /api/v1/sessions/{id}/snapshot        write a JSON snapshot to the snapshot directory
///   POST   /api/v1/snapshots/{id}/restore        load a snapshot into a new session
///

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "httplib.h"
#include "json.hpp"

#include "blinkscope/blinks.hpp"
#include "blinkscope/csv.hpp"
#include "blinkscope/error.hpp"
#include "blinkscope/io.hpp"
#include "blinkscope/pipeline.hpp"
#include "blinkscope/series.hpp"
#include "blinkscope/stats.hpp"
#include "blinkscope/summary.hpp"

namespace blinkscope::service {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// JSON mapping

inline json params_to_json(const DetectionParams& p) {
  json j;
  j["min_prominence"] = p.peak.min_prominence;
  j["min_distance"] = p.peak.min_distance;
  j["min_width"] = p.peak.min_width;
  j["max_width"] = std::isfinite(p.peak.max_width) ? json(p.peak.max_width) : json(nullptr);
  j["rel_height"] = p.peak.rel_height;
  j["smoothing_window"] = p.smoothing_window ? json(*p.smoothing_window) : json(nullptr);
  j["threshold_mode"] = to_string(p.threshold_mode);
  j["threshold_left"] = p.manual_threshold_left ? json(*p.manual_threshold_left) : json(nullptr);
  j["threshold_right"] = p.manual_threshold_right ? json(*p.manual_threshold_right) : json(nullptr);
  j["max_match_delay_ms"] = p.max_match_delay_ms;
  j["otsu_bins"] = p.otsu_bins;
  return j;
}

/// Field-level validation failure.
class ParamsError : public InputError {
public:
  explicit ParamsError(std::map<std::string, std::string> fields)
      : InputError("invalid params"), fields_(std::move(fields)) {}
  ParamsError(const std::string& field, const std::string& message)
      : ParamsError(std::map<std::string, std::string>{{field, message}}) {}
  const std::map<std::string, std::string>& fields() const { return fields_; }

private:
  std::map<std::string, std::string> fields_;
};

/// Applies the keys present in `patch` on top of `base`. Every problem is
/// reported against its field name.
inline DetectionParams params_from_json(const json& patch, DetectionParams base) {
  if (!patch.is_object()) throw ParamsError("body", "expected a JSON object");
  std::map<std::string, std::string> errors;

  auto number = [&](const char* key, auto&& assign, bool nullable = false) {
    if (!patch.contains(key)) return;
    const json& v = patch.at(key);
    if (v.is_null() && nullable) {
      assign(std::optional<double>());
    } else if (v.is_number()) {
      assign(std::optional<double>(v.get<double>()));
    } else {
      errors[key] = nullable ? "must be a number or null" : "must be a number";
    }
  };
  auto integer = [&](const char* key, auto&& assign, bool nullable = false) {
    if (!patch.contains(key)) return;
    const json& v = patch.at(key);
    if (v.is_null() && nullable) {
      assign(std::optional<std::int64_t>());
    } else if (v.is_number_integer() || (v.is_number() && std::floor(v.get<double>()) == v.get<double>())) {
      assign(std::optional<std::int64_t>(static_cast<std::int64_t>(v.get<double>())));
    } else {
      errors[key] = "must be an integer";
    }
  };

  DetectionParams p = base;
  number("min_prominence", [&](auto v) {
    if (*v < 0) errors["min_prominence"] = "must be >= 0";
    p.peak.min_prominence = *v;
  });
  integer("min_distance", [&](auto v) {
    if (*v < 1) errors["min_distance"] = "must be >= 1";
    else p.peak.min_distance = static_cast<std::size_t>(*v);
  });
  number("min_width", [&](auto v) {
    if (*v < 0) errors["min_width"] = "must be >= 0";
    p.peak.min_width = *v;
  });
  number("max_width", [&](auto v) { p.peak.max_width = v ? *v : std::numeric_limits<double>::infinity(); }, true);
  number("rel_height", [&](auto v) {
    if (!(*v > 0 && *v <= 1)) errors["rel_height"] = "must be in (0, 1]";
    p.peak.rel_height = *v;
  });
  integer("smoothing_window", [&](auto v) {
    if (!v) {
      p.smoothing_window.reset();
    } else if (*v < 1 || *v % 2 == 0) {
      errors["smoothing_window"] = "must be a positive odd integer or null";
    } else {
      p.smoothing_window = static_cast<int>(*v);
    }
  }, true);
  if (patch.contains("threshold_mode")) {
    const json& v = patch.at("threshold_mode");
    if (v == "auto") p.threshold_mode = ThresholdMode::automatic;
    else if (v == "manual") p.threshold_mode = ThresholdMode::manual;
    else errors["threshold_mode"] = "must be 'auto' or 'manual'";
  }
  number("threshold_left", [&](auto v) {
    if (v && !(*v >= 0 && *v <= 1)) errors["threshold_left"] = "must be in [0, 1]";
    p.manual_threshold_left = v;
  }, true);
  number("threshold_right", [&](auto v) {
    if (v && !(*v >= 0 && *v <= 1)) errors["threshold_right"] = "must be in [0, 1]";
    p.manual_threshold_right = v;
  }, true);
  number("max_match_delay_ms", [&](auto v) {
    if (!(*v > 0)) errors["max_match_delay_ms"] = "must be > 0";
    p.max_match_delay_ms = *v;
  });
  integer("otsu_bins", [&](auto v) {
    if (*v < 2) errors["otsu_bins"] = "must be >= 2";
    else p.otsu_bins = static_cast<std::size_t>(*v);
  });

  for (const auto& [key, value] : patch.items()) {
    static const std::vector<std::string> known{"min_prominence", "min_distance",     "min_width",      "max_width",
                                                "rel_height",     "smoothing_window", "threshold_mode", "threshold_left",
                                                "threshold_right", "max_match_delay_ms", "otsu_bins"};
    if (std::find(known.begin(), known.end(), key) == known.end()) errors[key] = "unknown parameter";
  }

  if (errors.empty()) {
    if (!(p.peak.min_width <= p.peak.max_width)) errors["max_width"] = "must be >= min_width";
    if (p.threshold_mode == ThresholdMode::manual) {
      if (!p.manual_threshold_left) errors["threshold_left"] = "required in manual mode";
      if (!p.manual_threshold_right) errors["threshold_right"] = "required in manual mode";
    }
  }
  if (!errors.empty()) throw ParamsError(std::move(errors));
  p.validate();
  return p;
}

inline json event_to_json(const BlinkEvent& e, double fps) {
  return {{"id", e.id},
          {"eye", to_string(e.eye)},
          {"apex_frame", e.apex_frame},
          {"apex_time_s", static_cast<double>(e.apex_frame) / fps},
          {"apex_ear", e.apex_ear},
          {"prominence", e.prominence},
          {"width_frames", e.width_frames},
          {"height", e.height},
          {"onset_frame", e.onset_frame},
          {"offset_frame", e.offset_frame},
          {"state", to_string(e.state)},
          {"state_source", to_string(e.state_source)}};
}

inline BlinkEvent event_from_json(const json& j) {
  BlinkEvent e;
  e.id = j.at("id").get<std::size_t>();
  e.eye = parse_eye(j.at("eye").get<std::string>());
  e.apex_frame = j.at("apex_frame").get<std::size_t>();
  e.apex_ear = j.at("apex_ear").get<double>();
  e.prominence = j.at("prominence").get<double>();
  e.width_frames = j.at("width_frames").get<double>();
  e.height = j.at("height").get<double>();
  e.onset_frame = j.at("onset_frame").get<std::size_t>();
  e.offset_frame = j.at("offset_frame").get<std::size_t>();
  e.state = parse_blink_state(j.at("state").get<std::string>());
  e.state_source = parse_state_source(j.at("state_source").get<std::string>());
  return e;
}

inline json match_to_json(const BlinkMatch& m) {
  auto opt = [](const auto& v) { return v ? json(*v) : json(nullptr); };
  return {{"left_id", opt(m.left_id)}, {"right_id", opt(m.right_id)}, {"delay_ms", opt(m.delay_ms)}};
}

inline json columns_to_json(const std::optional<ColumnSelection>& c) {
  if (!c) return nullptr;
  return {{"left", c->left_column}, {"right", c->right_column}};
}

// ---------------------------------------------------------------------------
// sessions

struct Session {
  std::string id;
  std::string source_csv;
  csv::Table table;
  double fps = 0.0;
  std::optional<ColumnSelection> auto_columns;
  std::optional<ColumnSelection> columns;
  DetectionParams params;
  std::optional<Analysis> analysis;
  bool dirty = false;
  std::uint64_t version = 1;

  std::optional<StatsReport> stats_cache;
  std::optional<SummaryBundle> summary_cache;

  mutable std::shared_mutex mutex;

  void touch() {
    ++version;
    stats_cache.reset();
    summary_cache.reset();
  }
};

class SessionStore {
public:
  std::shared_ptr<Session> create(std::string csv_text, double fps) {
    if (!(fps > 0.0) || !std::isfinite(fps)) throw ParamsError("fps", "must be > 0");
    auto s = std::make_shared<Session>();
    s->table = csv::parse(csv_text);
    if (s->table.rows.empty()) throw InputError("score file has no data rows");
    s->source_csv = std::move(csv_text);
    s->fps = fps;
    s->auto_columns = auto_select_columns(s->table.header);
    s->columns = s->auto_columns;
    std::unique_lock lock(mutex_);
    s->id = "s" + std::to_string(++counter_);
    sessions_[s->id] = s;
    return s;
  }

  std::shared_ptr<Session> find(const std::string& id) const {
    std::shared_lock lock(mutex_);
    auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second;
  }

  bool erase(const std::string& id) {
    std::unique_lock lock(mutex_);
    return sessions_.erase(id) > 0;
  }

  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return sessions_.size();
  }

private:
  mutable std::shared_mutex mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t counter_ = 0;
};

// ---------------------------------------------------------------------------
// HTTP

struct ServiceOptions {
  std::filesystem::path snapshot_dir = "snapshots";
  std::size_t default_series_budget = 4000;
};

namespace detail {

struct HttpError {
  int status;
  json body;
};

[[noreturn]] inline void fail(int status, const std::string& message) {
  throw HttpError{status, {{"error", message}}};
}

inline void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

inline json parse_body(const httplib::Request& req) {
  try {
    return json::parse(req.body);
  } catch (const nlohmann::json::exception&) {
    fail(400, "request body is not valid JSON");
  }
}

}  // namespace detail

class ReviewService {
public:
  explicit ReviewService(ServiceOptions options = {}) : options_(std::move(options)) {}

  SessionStore& store() { return store_; }

  void mount(httplib::Server& server) {
    using Req = const httplib::Request&;
    using Res = httplib::Response&;
    const std::string base = "/api/v1/sessions";
    const std::string sid = R"(/([A-Za-z0-9_-]+))";

    server.Post(base, wrap([this](Req req, Res res) { create_session(req, res); }));
    server.Get(base + sid, wrap([this](Req req, Res res) { get_session(req, res); }));
    server.Delete(base + sid, wrap([this](Req req, Res res) {
      if (!store_.erase(req.matches[1])) detail::fail(404, "unknown session");
      res.status = 204;
    }));
    server.Get(base + sid + "/columns", wrap([this](Req req, Res res) { get_columns(req, res); }));
    server.Put(base + sid + "/columns", wrap([this](Req req, Res res) { put_columns(req, res); }));
    server.Get(base + sid + "/params", wrap([this](Req req, Res res) { get_params(req, res); }));
    server.Put(base + sid + "/params", wrap([this](Req req, Res res) { put_params(req, res); }));
    server.Post(base + sid + "/detect", wrap([this](Req req, Res res) { detect(req, res); }));
    server.Get(base + sid + "/events", wrap([this](Req req, Res res) { list_events(req, res); }));
    server.Get(base + sid + R"(/events/(\d+))", wrap([this](Req req, Res res) { get_event(req, res); }));
    server.Patch(base + sid + R"(/events/(\d+))", wrap([this](Req req, Res res) { patch_event(req, res); }));
    server.Get(base + sid + "/matches", wrap([this](Req req, Res res) { get_matches(req, res); }));
    server.Get(base + sid + "/stats", wrap([this](Req req, Res res) { get_stats(req, res); }));
    server.Get(base + sid + "/summary", wrap([this](Req req, Res res) { get_summary(req, res, false); }));
    server.Get(base + sid + "/summary.svg", wrap([this](Req req, Res res) { get_summary(req, res, true); }));
    server.Get(base + sid + "/series", wrap([this](Req req, Res res) { get_series(req, res); }));
    server.Post(base + sid + "/snapshot", wrap([this](Req req, Res res) { save_snapshot(req, res); }));
    server.Post(R"(/api/v1/snapshots/([A-Za-z0-9_-]+)/restore)",
                wrap([this](Req req, Res res) { restore_snapshot(req, res); }));
  }

  /// Serialises a session to the snapshot document.
  static json snapshot_json(const Session& s) {
    json j;
    j["fps"] = s.fps;
    j["csv"] = s.source_csv;
    j["columns"] = columns_to_json(s.columns);
    j["params"] = params_to_json(s.params);
    j["version"] = s.version;
    if (s.analysis) {
      json events = json::array();
      for (const auto* side : {&s.analysis->left, &s.analysis->right})
        for (const auto& e : *side) events.push_back(event_to_json(e, s.fps));
      j["events"] = events;
    } else {
      j["events"] = nullptr;
    }
    return j;
  }

private:
  template <typename F>
  static httplib::Server::Handler wrap(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
      try {
        f(req, res);
      } catch (const detail::HttpError& e) {
        detail::send_json(res, e.body, e.status);
      } catch (const ParamsError& e) {
        json fields = json::object();
        for (const auto& [k, v] : e.fields()) fields[k] = v;
        detail::send_json(res, {{"error", e.what()}, {"fields", fields}}, 400);
      } catch (const InputError& e) {
        detail::send_json(res, {{"error", e.what()}}, 400);
      } catch (const std::exception& e) {
        detail::send_json(res, {{"error", std::string("internal error: ") + e.what()}}, 500);
      }
    };
  }

  std::shared_ptr<Session> session(const httplib::Request& req) {
    auto s = store_.find(req.matches[1]);
    if (!s) detail::fail(404, "unknown session");
    return s;
  }

  static void require_analysis(const Session& s) {
    if (!s.analysis) detail::fail(409, "detection has not been run for this session");
  }

  static void set_version(httplib::Response& res, const Session& s) {
    res.set_header("X-Session-Version", std::to_string(s.version));
  }

  static json overview(const Session& s) {
    return {{"session_id", s.id},
            {"version", s.version},
            {"fps", s.fps},
            {"rows", s.table.rows.size()},
            {"headers", s.table.header},
            {"columns", columns_to_json(s.columns)},
            {"auto_columns", columns_to_json(s.auto_columns)},
            {"params", params_to_json(s.params)},
            {"detected", s.analysis.has_value()},
            {"dirty", s.dirty}};
  }

  void create_session(const httplib::Request& req, httplib::Response& res) {
    std::string text;
    double fps = 0.0;
    const std::string type = req.get_header_value("Content-Type");
    if (type.rfind("text/csv", 0) == 0 || type.rfind("text/plain", 0) == 0) {
      text = req.body;
      if (!req.has_param("fps")) throw ParamsError("fps", "required");
      const auto v = csv::parse_number(req.get_param_value("fps"));
      fps = v ? *v : 0.0;
    } else {
      const json body = detail::parse_body(req);
      std::map<std::string, std::string> errors;
      if (!body.contains("fps") || !body["fps"].is_number()) errors["fps"] = "required number";
      if (!body.contains("csv") || !body["csv"].is_string()) errors["csv"] = "required string";
      if (!errors.empty()) throw ParamsError(std::move(errors));
      fps = body["fps"].get<double>();
      text = body["csv"].get<std::string>();
    }
    auto s = store_.create(std::move(text), fps);
    std::shared_lock lock(s->mutex);
    set_version(res, *s);
    detail::send_json(res, overview(*s), 201);
  }

  void get_session(const httplib::Request& req, httplib::Response& res) {
    auto s = session(req);
    std::shared_lock lock(s->mutex);
    set_version(res, *s);
    detail::send_json(res, overview(*s));
  }

  void get_columns(const httplib::Request& req, httplib::Response& res) {
    auto s = session(req);
    std::shared_lock lock(s->mutex);
    set_version(res, *s);
    detail::send_json(res, {{"version", s->version},
                            {"headers", s->table.header},
                            {"auto_columns", columns_to_json(s->auto_columns)},
                            {"columns", columns_to_json(s->columns)}});
  }

  void put_columns(const httplib::Request& req, httplib::Response& res) {
    auto s = session(req);
    const json body = detail::parse_body(req);
    std::map<std::string, std::string> errors;
    std::string left, right;
    std::unique_lock lock(s->mutex);
    for (const char* key : {"left", "right"}) {
      if (!body.contains(key) || !body[key].is_string()) {
        errors[key] = "required string";
        continue;
      }
      const std::string name = body[key].get<std::string>();
      if (!s->table.column(name)) errors[key] = "no such column: " + name;
      (std::string_view(key) == "left" ? left : right) = name;
    }
    if (errors.empty() && left == right) errors["right"] = "must differ from left";
    if (!errors.empty()) throw ParamsError(std::move(errors));
    s->columns = ColumnSelection{left, right};
    s->touch();
    set_version(res, *s);
    detail::send_json(res, {{"version", s->version}, {"columns", columns_to_json(s->columns)}});
  }

  void get_params(const httplib::Request& req, httplib::Response& res) {
    auto s = session(req);
    std::shared_lock lock(s->mutex);
    set_version(res, *s);
    detail::send_json(res, {{"version", s->version}, {"params", params_to_json(s->params)}});
  }

  void put_params(const httplib::Request& req, httplib::Response& res) {
    auto s = session(req);
    const json body = detail::parse_body(req);
    std::unique_lock lock(s->mutex);
    s->params = params_from_json(body, s->params);
    s->touch();
    set_version(res, *s);
    detail::send_json(res, {{"version", s->version}, {"params", params_to_json(s->params)}});
  }

  void detect(const httplib::Request& req, httplib::Response& res) {
    auto s = session(req);
    std::unique_lock lock(s->mutex);
    if (!s->columns) detail::fail(409, "no left/right columns selected");
    bool had_manual = false;
    if (s->analysis)
      for (const auto* side : {&s->analysis->left, &s->analysis->right})
        for (const auto& e : *side) had_manual |= e.state_source == StateSource::manual;

    s->analysis = run_detection(load_score_csv(s->table, *s->columns, s->fps), s->params);
    s->dirty = false;
    s->touch();

    json warnings = json::array();
    for (const auto& w : s->analysis->warnings) warnings.push_back(w);
    if (had_manual) warnings.push_back("manual state edits were cleared by re-running detection");
    set_version(res, *s);
    detail::send_json(res, {{"version", s->version},
                            {"left_events", s->analysis->left.size()},
                            {"right_events", s->analysis->right.size()},
                            {"matches", s->analysis->matches.size()},
                            {"thresholds",
                             {{"left", s->analysis->thresholds.left.value ? json(*s->analysis->thresholds.left.value)
                                                                          : json(nullptr)},
                              {"right", s->analysis->thresholds.right.value
                                            ? json(*s->analysis->thresholds.right.value)
                                            : json(nullptr)}}},
                            {"warnings", warnings}});
  }

  static std::vector<const BlinkEvent*> sorted_events(const Analysis& a) {
    std::vector<const BlinkEvent*> out;
    for (const auto* side : {&a.left, &a.right})
      for (const auto& e : *side) out.push_back(&e);
    std::sort(out.begin(), out.end(), [](const BlinkEvent* x, const BlinkEvent* y) { return x->id < y->id; });
    return out;
  }

  static std::size_t query_count(const httplib::Request& req, const char* key, std::size_t fallback) {
    if (!req.has_param(key)) return fallback;
    try {
      const auto v = csv::parse_number(req.get_param_value(key));
      if (!v || *v < 0 || std::floor(*v) != *v) throw InputError("");
      return static_cast<std::size_t>(*v);
    } catch (const InputError&) {
      throw ParamsError(key, "must be a non-negative integer");
    }
  }

  void list_events(const httplib::Request& req, httplib::Response& res) {
    auto s = session(req);
    std::shared_lock lock(s->mutex);
    require_analysis(*s);
    const auto all = sorted_events(*s->analysis);
    const std::size_t offset = query_count(req, "offset", 0);
    const std::size_t limit = query_count(req, "limit", 100);
    json events = json::array();
    for (std::size_t i = offset; i < all.size() && i - offset < limit; ++i)
      events.push_back(event_to_json(*all[i], s->fps));
    set_version(res, *s);
    detail::send_json(res, {{"version", s->version},
                            {"total", all.size()},
                            {"offset", offset},
                            {"limit", limit},
                            {"events", events}});
  }

  static BlinkEvent* find_event(Analysis& a, std::size_t id) {
    for (auto* side : {&a.left, &a.right})
      for (auto& e : *side)
        if (e.id == id) return &e;
    return nullptr;
  }

  void get_event(const httplib::Request& req, httplib::Response& res) {
    auto s = session(req);
    std::shared_lock lock(s->mutex);
    require_analysis(*s);
    const auto id = static_cast<std::size_t>(std::stoull(req.matches[2]));
    const BlinkEvent* e = find_event(*s->analysis, id);
    if (!e) detail::fail(404, "unknown blink id");
    set_version(res, *s);
    detail::send_json(res, {{"version", s->version}, {"event", event_to_json(*e, s->fps)}});
  }

  void patch_event(const httplib::Request& req, httplib::Response& res) {
    auto s = session(req);
    const json body = detail::parse_body(req);
    if (!body.contains("state") || !body["state"].is_string())
      throw ParamsError("state", "required: none, partial or complete");
    BlinkState state;
    try {
      state = parse_blink_state(body["state"].get<std::string>());
    } catch (const InputError&) {
      throw ParamsError("state", "must be none, partial or complete");
    }
    std::unique_lock lock(s->mutex);
    require_analysis(*s);
    const auto id = static_cast<std::size_t>(std::stoull(req.matches[2]));
    BlinkEvent* e = find_event(*s->analysis, id);
    if (!e) detail::fail(404, "unknown blink id");
    set_blink_state(s->analysis->events(e->eye), id, state);
    s->dirty = true;
    s->touch();
    json out{{"version", s->version}, {"event", event_to_json(*e, s->fps)}};
    if (body.contains("version") && body["version"].is_number_unsigned() &&
        body["version"].get<std::uint64_t>() + 1 != s->version)
      out["warning"] = "session changed since the supplied version; this edit overwrote it";
    set_version(res, *s);
    detail::send_json(res, out);
  }

  /// Brings matches and caches up to date after manual edits. Caller holds
  /// the unique lock.
  static void refresh(Session& s) {
    if (s.dirty) {
      rematch(*s.analysis);
      s.dirty = false;
    }
    if (!s.stats_cache) s.stats_cache = statistics(*s.analysis);
    if (!s.summary_cache) s.summary_cache = summary(*s.analysis);
  }

  template <typename F>
  void with_fresh(const httplib::Request& req, httplib::Response& res, F&& f) {
    auto s = session(req);
    {
      std::shared_lock lock(s->mutex);
      require_analysis(*s);
      if (!s->dirty && s->stats_cache && s->summary_cache) {
        set_version(res, *s);
        f(*s);
        return;
      }
    }
    std::unique_lock lock(s->mutex);
    require_analysis(*s);
    refresh(*s);
    set_version(res, *s);
    f(*s);
  }

  void get_matches(const httplib::Request& req, httplib::Response& res) {
    with_fresh(req, res, [&](const Session& s) {
      json matches = json::array();
      for (const auto& m : s.analysis->matches) matches.push_back(match_to_json(m));
      detail::send_json(res, {{"version", s.version}, {"matches", matches}});
    });
  }

  void get_stats(const httplib::Request& req, httplib::Response& res) {
    with_fresh(req, res, [&](const Session& s) {
      res.status = 200;
      res.set_content(export_stats_json(*s.stats_cache), "application/json");
    });
  }

  void get_summary(const httplib::Request& req, httplib::Response& res, bool svg) {
    with_fresh(req, res, [&](const Session& s) {
      res.status = 200;
      if (svg)
        res.set_content(render_summary_svg(*s.summary_cache), "image/svg+xml");
      else
        res.set_content(to_json(*s.summary_cache).dump(), "application/json");
    });
  }

  void get_series(const httplib::Request& req, httplib::Response& res) {
    auto s = session(req);
    std::shared_lock lock(s->mutex);
    if (!s->columns) detail::fail(409, "no left/right columns selected");
    const std::size_t budget = query_count(req, "budget", options_.default_series_budget);
    if (budget < 2) throw ParamsError("budget", "must be >= 2");
    const SeriesPair series = s->analysis ? s->analysis->series : load_score_csv(s->table, *s->columns, s->fps);
    json time = json::array(), left = json::array(), right = json::array();
    for (std::size_t i : uniform_stride_indices(series.left.size(), budget)) {
      time.push_back(static_cast<double>(i) / s->fps);
      left.push_back(series.left.is_valid(i) ? json(series.left[i]) : json(nullptr));
      right.push_back(series.right.is_valid(i) ? json(series.right[i]) : json(nullptr));
    }
    set_version(res, *s);
    detail::send_json(res, {{"version", s->version}, {"time_s", time}, {"left", left}, {"right", right}});
  }

  void save_snapshot(const httplib::Request& req, httplib::Response& res) {
    auto s = session(req);
    std::shared_lock lock(s->mutex);
    std::error_code ec;
    std::filesystem::create_directories(options_.snapshot_dir, ec);
    const auto path = options_.snapshot_dir / (s->id + ".json");
    write_file_atomic(path, snapshot_json(*s).dump());
    set_version(res, *s);
    detail::send_json(res, {{"version", s->version}, {"snapshot", s->id}, {"path", path.string()}});
  }

  void restore_snapshot(const httplib::Request& req, httplib::Response& res) {
    const std::string name = req.matches[1];
    const auto path = options_.snapshot_dir / (name + ".json");
    if (!std::filesystem::exists(path)) detail::fail(404, "unknown snapshot");
    const json j = json::parse(read_file(path));
    auto s = store_.create(j.at("csv").get<std::string>(), j.at("fps").get<double>());
    std::unique_lock lock(s->mutex);
    if (!j.at("columns").is_null())
      s->columns = ColumnSelection{j["columns"].at("left").get<std::string>(),
                                   j["columns"].at("right").get<std::string>()};
    s->params = params_from_json(j.at("params"), DetectionParams{});
    if (!j.at("events").is_null() && s->columns) {
      std::vector<BlinkEvent> left, right;
      for (const auto& ej : j["events"]) {
        BlinkEvent e = event_from_json(ej);
        (e.eye == Eye::left ? left : right).push_back(e);
      }
      s->analysis =
          analysis_from_table(load_score_csv(s->table, *s->columns, s->fps), s->params, std::move(left), std::move(right));
    }
    s->version = j.at("version").get<std::uint64_t>();
    set_version(res, *s);
    detail::send_json(res, overview(*s), 201);
  }

  ServiceOptions options_;
  SessionStore store_;
};

}  // namespace blinkscope::service
