#pragma once

///
/// @file cli.hpp
///
/// Command-line front end. Subcommands:
///
///   ear      landmark CSV -> scores.csv
///   detect   score CSV -> blinks.csv
///   stats    score CSV (and optionally an edited blinks.csv) -> stats.csv, stats.json
///   summary  score CSV (and optionally an edited blinks.csv) -> summary.svg, summary.json
///   all      every output above
///   serve    review service
///
/// Exit status: 0 success, 1 bad input or usage, 2 anything else.
///

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "httplib.h"

#include "blinkscope/blinks.hpp"
#include "blinkscope/config.hpp"
#include "blinkscope/ear.hpp"
#include "blinkscope/error.hpp"
#include "blinkscope/io.hpp"
#include "blinkscope/pipeline.hpp"
#include "blinkscope/service.hpp"
#include "blinkscope/summary.hpp"

namespace blinkscope::cli {

namespace fs = std::filesystem;

enum class InputKind { scores, landmarks };

/// Everything one batch run needs. Detection flags given on the command line
/// override the parameter file.
struct RunConfig {
  fs::path input;
  InputKind kind = InputKind::scores;
  EarVariant variant = EarVariant::planar;
  std::optional<double> fps;
  std::string left_column;
  std::string right_column;
  std::optional<fs::path> params_file;
  std::optional<fs::path> blinks_file;
  fs::path out = ".";
  std::size_t scatter_budget = 5000;
  std::vector<std::string> emit;

  // detection overrides
  std::optional<double> min_prominence, min_width, rel_height, threshold_left, threshold_right, max_delay;
  std::optional<std::string> max_width, threshold_mode, smooth;
  std::optional<std::size_t> min_distance, otsu_bins;
};

struct ServeConfig {
  std::string bind = "127.0.0.1";
  int port = 8080;
  fs::path snapshot_dir = "snapshots";
  std::optional<fs::path> ui_dir;
};

namespace detail {

inline DetectionParams detection_params(const RunConfig& c) {
  DetectionParams p;
  if (c.params_file) {
    for (const auto& [key, value] : parse_key_values(read_file(*c.params_file)))
      if (!apply_detection_key(p, key, value)) throw InputError("params file: unknown key " + key);
  }
  auto set = [&](const char* key, const auto& v) {
    if (!v) return;
    if constexpr (std::is_same_v<std::decay_t<decltype(*v)>, std::string>)
      apply_detection_key(p, key, *v);
    else
      apply_detection_key(p, key, csv::number(static_cast<double>(*v), 17));
  };
  set("min_prominence", c.min_prominence);
  set("min_distance", c.min_distance);
  set("min_width", c.min_width);
  set("max_width", c.max_width);
  set("rel_height", c.rel_height);
  set("smooth", c.smooth);
  set("threshold_mode", c.threshold_mode);
  set("threshold_left", c.threshold_left);
  set("threshold_right", c.threshold_right);
  set("max_delay", c.max_delay);
  set("otsu_bins", c.otsu_bins);
  p.validate();
  return p;
}

inline double require_fps(const RunConfig& c) {
  if (!c.fps) throw InputError("--fps is required");
  if (!(*c.fps > 0.0) || !std::isfinite(*c.fps)) throw InputError("--fps must be positive");
  return *c.fps;
}

inline SeriesPair landmark_series(const RunConfig& c, double fps) {
  const LandmarkTable t = parse_landmark_csv(read_file(c.input));
  if (c.variant == EarVariant::spatial && !t.has_depth)
    throw InputError("3D EAR needs landmark CSV with z columns");
  return ear_series_from_landmarks(t.frames, fps, c.variant);
}

inline SeriesPair load_series(const RunConfig& c, std::ostream& log) {
  const double fps = require_fps(c);
  if (c.kind == InputKind::landmarks) return landmark_series(c, fps);

  const csv::Table table = csv::parse(read_file(c.input));
  ColumnSelection sel;
  if (!c.left_column.empty() || !c.right_column.empty()) {
    if (c.left_column.empty() || c.right_column.empty())
      throw InputError("--left-column and --right-column must be given together");
    sel = {c.left_column, c.right_column};
  } else if (auto found = auto_select_columns(table.header)) {
    sel = *found;
    log << "blinkscope: using columns " << sel.left_column << " (left) and " << sel.right_column << " (right)\n";
  } else {
    throw InputError("cannot pick left/right EAR columns automatically; pass --left-column and --right-column");
  }
  return load_score_csv(table, sel, fps);
}

inline Analysis analyse(const RunConfig& c, std::ostream& log) {
  const DetectionParams params = detection_params(c);
  SeriesPair series = load_series(c, log);
  Analysis a;
  if (c.blinks_file) {
    BlinkTable t = import_blinks(read_file(*c.blinks_file));
    a = analysis_from_table(std::move(series), params, std::move(t.left), std::move(t.right));
  } else {
    a = run_detection(std::move(series), params);
  }
  for (const auto& w : a.warnings) log << "blinkscope: warning: " << w << "\n";
  log << "blinkscope: " << a.left.size() << " left and " << a.right.size() << " right blinks, " << a.matches.size()
      << " matches\n";
  return a;
}

inline bool emits(const RunConfig& c, std::string_view what) {
  return c.emit.empty() || std::find(c.emit.begin(), c.emit.end(), what) != c.emit.end();
}

inline void write_output(const RunConfig& c, const std::string& name, std::string_view bytes, std::ostream& log) {
  std::error_code ec;
  fs::create_directories(c.out, ec);
  if (!fs::is_directory(c.out)) throw IoError("cannot create output directory " + c.out.string());
  write_file_atomic(c.out / name, bytes);
  log << "blinkscope: wrote " << (c.out / name).string() << "\n";
}

inline void write_blinks(const RunConfig& c, const Analysis& a, std::ostream& log) {
  write_output(c, "blinks.csv", export_blinks(a.left, a.right, a.matches, a.fps()), log);
}

inline void write_stats(const RunConfig& c, const Analysis& a, std::ostream& log) {
  const StatsReport report = statistics(a);
  if (emits(c, "stats")) {
    write_output(c, "stats.csv", export_stats_csv(report), log);
    write_output(c, "stats.json", export_stats_json(report), log);
  }
}

inline void write_summary(const RunConfig& c, const Analysis& a, std::ostream& log) {
  SummaryOptions opt;
  opt.scatter_budget = c.scatter_budget;
  const SummaryBundle bundle = summary(a, opt);
  if (emits(c, "summary-svg")) write_output(c, "summary.svg", render_summary_svg(bundle), log);
  if (emits(c, "summary-json")) write_output(c, "summary.json", to_json(bundle).dump(1) + "\n", log);
}

inline void run_ear(const RunConfig& c, std::ostream& log) {
  const double fps = c.fps.value_or(1.0);
  const SeriesPair s = landmark_series(c, fps);
  const char* tag = c.variant == EarVariant::spatial ? "EAR_3D" : "EAR_2D";
  write_output(c, "scores.csv", export_scores(s, std::string(tag) + "_left", std::string(tag) + "_right"), log);
}

inline void run_all(const RunConfig& c, std::ostream& log) {
  const Analysis a = analyse(c, log);
  if (c.kind == InputKind::landmarks && emits(c, "scores")) {
    const char* tag = c.variant == EarVariant::spatial ? "EAR_3D" : "EAR_2D";
    write_output(c, "scores.csv", export_scores(a.series, std::string(tag) + "_left", std::string(tag) + "_right"),
                 log);
  }
  if (emits(c, "blinks")) write_blinks(c, a, log);
  write_stats(c, a, log);
  write_summary(c, a, log);
}

inline int env_port(int fallback) {
  if (const char* v = std::getenv("BLINKSCOPE_PORT")) {
    const auto n = csv::parse_number(v);
    if (!n || *n < 0 || *n > 65535 || std::floor(*n) != *n) throw InputError("BLINKSCOPE_PORT is not a port number");
    return static_cast<int>(*n);
  }
  return fallback;
}

inline void run_serve(const ServeConfig& c, std::ostream& log) {
  service::ReviewService svc({c.snapshot_dir});
  httplib::Server server;
  svc.mount(server);
  if (c.ui_dir && !server.set_mount_point("/", c.ui_dir->string()))
    throw InputError("cannot serve UI directory " + c.ui_dir->string());
  log << "blinkscope: serving on http://" << c.bind << ":" << c.port << "/api/v1/\n";
  log.flush();
  if (!server.listen(c.bind, c.port)) throw IoError("cannot listen on " + c.bind + ":" + std::to_string(c.port));
}

}  // namespace detail

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Blink detection and statistics from eye aspect ratio recordings", "blinkscope"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "blinkscope 1.0.0");

  RunConfig rc;
  ServeConfig sc;

  const std::map<std::string, InputKind> kinds{{"scores", InputKind::scores}, {"landmarks", InputKind::landmarks}};
  const std::map<std::string, EarVariant> variants{{"2d", EarVariant::planar}, {"3d", EarVariant::spatial}};

  auto add_input = [&](CLI::App* sub, bool landmarks_only) {
    sub->add_option("-i,--input", rc.input, landmarks_only ? "landmark CSV" : "score CSV (or landmark CSV with --kind)")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("-o,--out", rc.out, "output directory")->capture_default_str();
    sub->add_option("--variant", rc.variant, "EAR variant: 2d or 3d")
        ->transform(CLI::CheckedTransformer(variants, CLI::ignore_case));
    if (landmarks_only) {
      sub->add_option("--fps", rc.fps, "frames per second");
      return;
    }
    sub->add_option("--fps", rc.fps, "frames per second of the recording")->required();
    sub->add_option("--kind", rc.kind, "input kind: scores or landmarks")
        ->transform(CLI::CheckedTransformer(kinds, CLI::ignore_case));
    sub->add_option("--left-column", rc.left_column, "left-eye EAR column (default: auto)");
    sub->add_option("--right-column", rc.right_column, "right-eye EAR column (default: auto)");
    sub->add_option("--params", rc.params_file, "key=value detection parameter file")->check(CLI::ExistingFile);
    sub->add_option("--min-prominence", rc.min_prominence, "minimum peak prominence (EAR units)");
    sub->add_option("--min-distance", rc.min_distance, "minimum frames between apexes");
    sub->add_option("--min-width", rc.min_width, "minimum width in frames");
    sub->add_option("--max-width", rc.max_width, "maximum width in frames, or 'inf'");
    sub->add_option("--rel-height", rc.rel_height, "relative height at which width is measured");
    sub->add_option("--smooth", rc.smooth, "moving-average window in frames (odd), or 'none'");
    sub->add_option("--threshold-mode", rc.threshold_mode, "auto or manual")->check(CLI::IsMember({"auto", "manual"}));
    sub->add_option("--threshold-left", rc.threshold_left, "manual left-eye prominence threshold");
    sub->add_option("--threshold-right", rc.threshold_right, "manual right-eye prominence threshold");
    sub->add_option("--max-delay", rc.max_delay, "maximum left/right apex delay in ms");
    sub->add_option("--otsu-bins", rc.otsu_bins, "histogram bins for the automatic threshold");
  };

  auto* ear = app.add_subcommand("ear", "compute EAR scores from landmarks");
  add_input(ear, true);

  auto* detect = app.add_subcommand("detect", "detect and classify blinks");
  add_input(detect, false);

  auto* stats = app.add_subcommand("stats", "blink statistics");
  add_input(stats, false);
  stats->add_option("--blinks", rc.blinks_file, "reviewed blinks.csv to use instead of detecting")
      ->check(CLI::ExistingFile);

  auto* summary_cmd = app.add_subcommand("summary", "visual summary");
  add_input(summary_cmd, false);
  summary_cmd->add_option("--blinks", rc.blinks_file, "reviewed blinks.csv to use instead of detecting")
      ->check(CLI::ExistingFile);
  summary_cmd->add_option("--scatter-budget", rc.scatter_budget, "maximum points per EAR scatter")
      ->check(CLI::PositiveNumber);

  auto* all = app.add_subcommand("all", "run the full pipeline");
  add_input(all, false);
  all->add_option("--blinks", rc.blinks_file, "reviewed blinks.csv to use instead of detecting")
      ->check(CLI::ExistingFile);
  all->add_option("--scatter-budget", rc.scatter_budget, "maximum points per EAR scatter")->check(CLI::PositiveNumber);
  all->add_option("--emit", rc.emit, "outputs to write: scores, blinks, stats, summary-svg, summary-json")
      ->delimiter(',')
      ->check(CLI::IsMember({"scores", "blinks", "stats", "summary-svg", "summary-json"}));

  auto* serve = app.add_subcommand("serve", "start the review service");
  serve->add_option("--bind", sc.bind, "bind address (env BLINKSCOPE_BIND)")->envname("BLINKSCOPE_BIND");
  serve->add_option("--port", sc.port, "port (env BLINKSCOPE_PORT)")->check(CLI::Range(0, 65535));
  serve->add_option("--snapshot-dir", sc.snapshot_dir, "where session snapshots are written");
  serve->add_option("--ui-dir", sc.ui_dir, "static files served at /")->check(CLI::ExistingDirectory);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion& e) {
    out << e.what() << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "blinkscope: " << e.what() << "\n";
    const CLI::App* failed = &app;
    for (const auto* sub : app.get_subcommands()) failed = sub;
    err << failed->help();
    return 1;
  }

  try {
    if (ear->parsed()) {
      detail::run_ear(rc, err);
    } else if (detect->parsed()) {
      detail::write_blinks(rc, detail::analyse(rc, err), err);
    } else if (stats->parsed()) {
      rc.emit = {"stats"};
      detail::write_stats(rc, detail::analyse(rc, err), err);
    } else if (summary_cmd->parsed()) {
      rc.emit = {"summary-svg", "summary-json"};
      detail::write_summary(rc, detail::analyse(rc, err), err);
    } else if (all->parsed()) {
      detail::run_all(rc, err);
    } else if (serve->parsed()) {
      if (serve->count("--port") == 0) sc.port = detail::env_port(sc.port);
      detail::run_serve(sc, err);
    }
  } catch (const InputError& e) {
    err << "blinkscope: error: " << e.what() << "\n";
    return 1;
  } catch (const IoError& e) {
    err << "blinkscope: error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "blinkscope: internal error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

inline int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  std::vector<const char*> argv;
  argv.push_back("blinkscope");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace blinkscope::cli
