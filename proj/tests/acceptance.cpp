// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails. Tolerances and limits are fixed below.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <unistd.h>

#include "httplib.h"
#include "json.hpp"

#include "blinkscope/blinks.hpp"
#include "blinkscope/ear.hpp"
#include "blinkscope/io.hpp"
#include "blinkscope/peaks.hpp"
#include "blinkscope/pipeline.hpp"
#include "blinkscope/service.hpp"
#include "blinkscope/stats.hpp"
#include "blinkscope/synthetic.hpp"

#include "oracles/matching_reference.hpp"
#include "oracles/otsu_reference.hpp"
#include "oracles/peaks_reference.hpp"

namespace bs = blinkscope;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

constexpr double kPeakTol = 1e-9;
constexpr double kPeakTimeLimitS = 60.0;
constexpr double kOtsuTimeLimitS = 10.0;
constexpr double kEarTol = 1e-9;
constexpr double kPipelineTimeLimitS = 5.0;
constexpr double kFreqRelTol = 1e-12;

constexpr std::size_t kPeakSignals = 1000;
constexpr std::size_t kOtsuSets = 500;
constexpr std::size_t kEarSets = 1000;
constexpr std::size_t kMatchConfigs = 200;
constexpr std::size_t kMatchMaxPerEye = 12;

struct Result {
  bool pass;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---------------------------------------------------------------------------

std::vector<double> random_signal(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> x(n);
  switch (rng() % 5) {
    case 0:
      for (auto& v : x) v = u(rng);
      break;
    case 1: {
      double acc = 0.0;
      for (auto& v : x) v = acc += g(rng);
      break;
    }
    case 2: {
      // small integer alphabet: many plateaus and equal heights
      const auto levels = 2 + rng() % 5;
      for (auto& v : x) v = static_cast<double>(rng() % levels);
      break;
    }
    case 3: {
      const double f1 = 0.001 + 0.05 * u(rng), f2 = 0.01 + 0.2 * u(rng);
      for (std::size_t i = 0; i < n; ++i)
        x[i] = std::sin(f1 * static_cast<double>(i)) + 0.3 * std::sin(f2 * static_cast<double>(i)) + 0.05 * g(rng);
      break;
    }
    default: {
      // inverted EAR with dips and quantised noise
      for (auto& v : x) v = 0.7 + std::round(g(rng) * 3.0) / 1000.0;
      for (std::size_t i = 0; i < n; i += 30 + rng() % 200) {
        const double depth = 0.05 + 0.3 * u(rng);
        const std::size_t half = 3 + rng() % 40;
        for (std::size_t k = 0; k < 2 * half && i + k < n; ++k)
          x[i + k] += depth * 0.5 *
                      (1.0 - std::cos(std::numbers::pi * static_cast<double>(k) / static_cast<double>(half)));
      }
    }
  }
  return x;
}

Result peak_differential() {
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::size_t compared = 0;
  const auto t0 = Clock::now();
  for (std::size_t s = 0; s < kPeakSignals; ++s) {
    const std::size_t n = 10 + rng() % (5000 - 10 + 1);
    const auto x = random_signal(rng, n);
    double lo = x[0], hi = x[0];
    for (double v : x) lo = std::min(lo, v), hi = std::max(hi, v);

    oracle::RefParams rp;
    rp.min_distance = rng() % 3 == 0 ? 1 : 1 + rng() % 150;
    rp.min_prominence = rng() % 4 == 0 ? 0.0 : u(rng) * 0.5 * (hi - lo);
    rp.min_width = rng() % 3 == 0 ? 0.0 : u(rng) * 20.0;
    rp.max_width = rng() % 2 == 0 ? std::numeric_limits<double>::infinity() : rp.min_width + u(rng) * 300.0;
    rp.rel_height = rng() % 5 == 0 ? 1.0 : std::max(0.01, u(rng));

    bs::PeakParams pp{rp.min_prominence, rp.min_distance, rp.min_width, rp.max_width, rp.rel_height};
    const auto got = bs::find_peaks(x, pp);
    const auto want = oracle::ref_find_peaks(x, rp);
    if (got.size() != want.size())
      return {false, fmt("signal %zu (n=%zu): %zu peaks, reference %zu", s, n, got.size(), want.size())};
    for (std::size_t k = 0; k < got.size(); ++k) {
      const auto& g = got[k];
      const auto& w = want[k];
      if (g.index != w.index) return {false, fmt("signal %zu peak %zu: index %zu vs %zu", s, k, g.index, w.index)};
      if (g.left_base != w.left_base || g.right_base != w.right_base)
        return {false, fmt("signal %zu peak %zu: bases differ", s, k)};
      const double errs[] = {std::abs(g.prominence - w.prominence), std::abs(g.width - w.width),
                             std::abs(g.left_ip - w.left_ip), std::abs(g.right_ip - w.right_ip),
                             std::abs(g.width_height - w.width_height)};
      for (double e : errs)
        if (!(e <= kPeakTol)) return {false, fmt("signal %zu peak %zu: measurement error %.3g", s, k, e)};
      ++compared;
    }
  }
  const double dt = seconds_since(t0);
  if (dt >= kPeakTimeLimitS) return {false, fmt("took %.1f s (limit %.0f s)", dt, kPeakTimeLimitS)};
  return {true, fmt("%zu signals, %zu peaks identical, %.2f s", kPeakSignals, compared, dt)};
}

// ---------------------------------------------------------------------------

Result otsu_oracle() {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::size_t degenerate = 0;
  const auto t0 = Clock::now();
  for (std::size_t s = 0; s < kOtsuSets; ++s) {
    const std::size_t n = s % 50 == 0 ? 1 + rng() % 3 : 2 + rng() % 300;
    std::vector<double> v(n);
    switch (rng() % 4) {
      case 0:
        for (auto& x : v) x = u(rng);
        break;
      case 1:
        for (auto& x : v) x = rng() % 2 ? 0.05 + 0.1 * u(rng) : 0.2 + 0.15 * u(rng);
        break;
      case 2:
        for (auto& x : v) x = static_cast<double>(rng() % 40) / 100.0;
        break;
      default:
        for (auto& x : v) x = 0.25;
        if (rng() % 2) v[rng() % n] = 0.25 + 1e-12 * static_cast<double>(rng() % 1000);
    }
    const std::size_t bins = s % 5 == 0 ? 2 + rng() % 600 : 256;

    const auto want = oracle::ref_otsu(v, bins);
    std::optional<double> got;
    try {
      got = bs::otsu_threshold(v, bins);
    } catch (const bs::DegenerateDistribution&) {
    }
    if (got.has_value() != want.has_value())
      return {false, fmt("set %zu: degeneracy differs (library %d, oracle %d)", s, got.has_value(), want.has_value())};
    if (!want) {
      ++degenerate;
      continue;
    }
    if (*got != *want) return {false, fmt("set %zu: threshold %.17g vs %.17g", s, *got, *want)};
  }
  const double dt = seconds_since(t0);
  if (dt >= kOtsuTimeLimitS) return {false, fmt("took %.1f s (limit %.0f s)", dt, kOtsuTimeLimitS)};
  return {true, fmt("%zu sets identical (%zu degenerate on both sides), %.2f s", kOtsuSets, degenerate, dt)};
}

// ---------------------------------------------------------------------------

bs::EyeLandmarks random_eye(std::mt19937_64& rng, bool with_z) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double w = 1.0 + u(rng) * 0.5;
  bs::EyeLandmarks p;
  auto z = [&]() -> std::optional<double> { return with_z ? std::optional<double>(0.3 * u(rng)) : std::nullopt; };
  p[0] = {0.0 + 0.05 * u(rng), 0.05 * u(rng), z()};
  p[3] = {2.0 * w + 0.05 * u(rng), 0.05 * u(rng), z()};
  p[1] = {0.6 * w + 0.1 * u(rng), 0.2 + 0.15 * u(rng), z()};
  p[2] = {1.4 * w + 0.1 * u(rng), 0.2 + 0.15 * u(rng), z()};
  p[4] = {1.4 * w + 0.1 * u(rng), -0.2 - 0.15 * u(rng), z()};
  p[5] = {0.6 * w + 0.1 * u(rng), -0.2 - 0.15 * u(rng), z()};
  return p;
}

Result ear_invariance() {
  std::mt19937_64 rng(4242);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g(0.0, 1.0);
  double worst2 = 0.0, worst3 = 0.0;
  for (std::size_t s = 0; s < kEarSets; ++s) {
    // similarity transform in the plane
    const auto p = random_eye(rng, false);
    const double th = 2.0 * std::numbers::pi * u(rng), sc = std::exp(4.0 * u(rng) - 2.0);
    const double tx = 1000.0 * (u(rng) - 0.5), ty = 1000.0 * (u(rng) - 0.5);
    bs::EyeLandmarks q = p;
    for (auto& pt : q) {
      const double x = pt.x, y = pt.y;
      pt.x = sc * (std::cos(th) * x - std::sin(th) * y) + tx;
      pt.y = sc * (std::sin(th) * x + std::cos(th) * y) + ty;
    }
    worst2 = std::max(worst2, std::abs(bs::compute_ear_2d(p) - bs::compute_ear_2d(q)));

    // rigid motion in space: random unit quaternion plus translation
    const auto p3 = random_eye(rng, true);
    double qw = g(rng), qx = g(rng), qy = g(rng), qz = g(rng);
    const double norm = std::sqrt(qw * qw + qx * qx + qy * qy + qz * qz);
    qw /= norm, qx /= norm, qy /= norm, qz /= norm;
    const double r[3][3] = {{1 - 2 * (qy * qy + qz * qz), 2 * (qx * qy - qz * qw), 2 * (qx * qz + qy * qw)},
                            {2 * (qx * qy + qz * qw), 1 - 2 * (qx * qx + qz * qz), 2 * (qy * qz - qx * qw)},
                            {2 * (qx * qz - qy * qw), 2 * (qy * qz + qx * qw), 1 - 2 * (qx * qx + qy * qy)}};
    const double t[3] = {500.0 * (u(rng) - 0.5), 500.0 * (u(rng) - 0.5), 500.0 * (u(rng) - 0.5)};
    bs::EyeLandmarks q3 = p3;
    for (auto& pt : q3) {
      const double v[3] = {pt.x, pt.y, *pt.z};
      pt.x = r[0][0] * v[0] + r[0][1] * v[1] + r[0][2] * v[2] + t[0];
      pt.y = r[1][0] * v[0] + r[1][1] * v[1] + r[1][2] * v[2] + t[1];
      pt.z = r[2][0] * v[0] + r[2][1] * v[1] + r[2][2] * v[2] + t[2];
    }
    worst3 = std::max(worst3, std::abs(bs::compute_ear_3d(p3) - bs::compute_ear_3d(q3)));
  }

  const bs::EyeLandmarks sym{{{0, 0, 0.0}, {0.5, 0.3, 0.0}, {1.5, 0.3, 0.0}, {2, 0, 0.0}, {1.5, -0.3, 0.0}, {0.5, -0.3, 0.0}}};
  const double sym2 = bs::compute_ear_2d(sym);
  const double sym3 = bs::compute_ear_3d(sym);

  const bool ok = worst2 <= kEarTol && worst3 <= kEarTol && sym2 == 0.3 && sym3 == 0.3;
  return {ok, fmt("max 2D similarity drift %.2g, max 3D rigid drift %.2g, symmetric fixture %.17g / %.17g", worst2,
                  worst3, sym2, sym3)};
}

// ---------------------------------------------------------------------------

Result matching_oracle() {
  std::mt19937_64 rng(9001);
  const std::int64_t fps_choices[] = {30, 60, 120, 240};
  const std::int64_t delay_choices[] = {50, 100, 250, 500};
  std::size_t total_pairs = 0;
  for (std::size_t c = 0; c < kMatchConfigs; ++c) {
    const std::int64_t fps = fps_choices[rng() % 4];
    const std::int64_t max_delay = delay_choices[rng() % 4];
    const std::int64_t window = max_delay * fps / 1000;
    const std::int64_t span = std::max<std::int64_t>(4, window * static_cast<std::int64_t>(1 + rng() % 8));
    auto apexes = [&](std::size_t count) {
      std::set<std::int64_t> s;
      while (s.size() < count) s.insert(static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(span + count)));
      return std::vector<std::int64_t>(s.begin(), s.end());
    };
    const auto la = apexes(rng() % (kMatchMaxPerEye + 1));
    const auto ra = apexes(rng() % (kMatchMaxPerEye + 1));

    std::vector<bs::BlinkEvent> left, right;
    for (std::size_t i = 0; i < la.size(); ++i)
      left.push_back({.id = i, .eye = bs::Eye::left, .apex_frame = static_cast<std::size_t>(la[i])});
    for (std::size_t i = 0; i < ra.size(); ++i)
      right.push_back({.id = 100 + i, .eye = bs::Eye::right, .apex_frame = static_cast<std::size_t>(ra[i])});
    // feed the library unsorted input
    std::shuffle(left.begin(), left.end(), rng);
    std::shuffle(right.begin(), right.end(), rng);

    const auto matches = bs::match_blinks(left, right, static_cast<double>(fps), static_cast<double>(max_delay));
    std::map<std::size_t, std::int64_t> apex_of;
    for (const auto& e : left) apex_of[e.id] = static_cast<std::int64_t>(e.apex_frame);
    for (const auto& e : right) apex_of[e.id] = static_cast<std::int64_t>(e.apex_frame);

    std::multiset<std::size_t> seen;
    std::size_t pairs = 0;
    std::int64_t total = 0;
    for (const auto& m : matches) {
      if (m.left_id) seen.insert(*m.left_id);
      if (m.right_id) seen.insert(*m.right_id);
      if (!m.bilateral()) {
        if (m.delay_ms) return {false, fmt("config %zu: unilateral match carries a delay", c)};
        continue;
      }
      const std::int64_t gap = apex_of.at(*m.right_id) - apex_of.at(*m.left_id);
      if (!oracle::ref_eligible(gap, fps, max_delay))
        return {false, fmt("config %zu: pair outside the delay window", c)};
      const double want_ms = static_cast<double>(gap) * 1000.0 / static_cast<double>(fps);
      if (!m.delay_ms || std::abs(*m.delay_ms - want_ms) > 1e-9)
        return {false, fmt("config %zu: delay_ms mismatch", c)};
      ++pairs;
      total += std::llabs(gap);
    }
    if (seen.size() != la.size() + ra.size() || std::set<std::size_t>(seen.begin(), seen.end()).size() != seen.size())
      return {false, fmt("config %zu: events missing or repeated in matches", c)};

    const auto ref = oracle::ref_best_matching(la, ra, fps, max_delay);
    if (pairs != ref.pairs || total != ref.total_gap)
      return {false, fmt("config %zu: %zu pairs / %lld frames total vs oracle %zu / %lld", c, pairs,
                         static_cast<long long>(total), ref.pairs, static_cast<long long>(ref.total_gap))};
    total_pairs += pairs;
  }
  return {true, fmt("%zu configurations, %zu pairs, pair count and total delay equal to brute force in all",
                    kMatchConfigs, total_pairs)};
}

// ---------------------------------------------------------------------------

std::string check_report(const bs::StatsReport& r) {
  auto sum = [](const std::vector<std::size_t>& v) {
    std::size_t s = 0;
    for (auto x : v) s += x;
    return s;
  };
  if (sum(r.per_minute_partial_left) != r.partial_total_left) return "partial left minutes do not sum to total";
  if (sum(r.per_minute_partial_right) != r.partial_total_right) return "partial right minutes do not sum to total";
  if (sum(r.per_minute_complete_left) != r.complete_total_left) return "complete left minutes do not sum to total";
  if (sum(r.per_minute_complete_right) != r.complete_total_right) return "complete right minutes do not sum to total";
  const std::pair<double, std::size_t> freqs[] = {{r.partial_freq_left_bpm, r.partial_total_left},
                                                  {r.partial_freq_right_bpm, r.partial_total_right},
                                                  {r.complete_freq_left_bpm, r.complete_total_left},
                                                  {r.complete_freq_right_bpm, r.complete_total_right}};
  for (const auto& [f, total] : freqs) {
    const double want = static_cast<double>(total) / r.duration_minutes;
    if (std::abs(f - want) > kFreqRelTol * std::max(1.0, want)) return "frequency differs from total / duration";
  }
  const std::array<std::array<std::optional<double>, 3>, 5> triples{{
      {r.prominence_min, r.prominence_avg, r.prominence_max},
      {r.width_min, r.width_avg, r.width_max},
      {r.height_min, r.height_avg, r.height_max},
      {r.ear_left_min, r.ear_before_blink_left_avg, r.ear_left_max},
      {r.ear_right_min, r.ear_before_blink_right_avg, r.ear_right_max},
  }};
  for (const auto& t : triples) {
    if (!t[0] || !t[1] || !t[2]) continue;
    if (!(*t[0] <= *t[1] && *t[1] <= *t[2])) return "min <= avg <= max violated";
  }
  return {};
}

Result stats_reconciliation() {
  std::size_t fixtures = 0, exclusions = 0;

  auto reconcile = [&](const std::string& name, bs::Analysis a,
                       const std::vector<bs::synthetic::PlantedPair>* plan) -> std::string {
    ++fixtures;
    const auto base = bs::statistics(a);
    if (auto err = check_report(base); !err.empty()) return name + ": " + err;

    if (plan) {
      const std::size_t minutes = base.per_minute_complete_left.size();
      std::vector<std::size_t> pl(minutes), pr(minutes), cl(minutes), cr(minutes);
      for (const auto& p : *plan) {
        const std::size_t ml = bs::minute_of(p.left_apex, a.fps(), minutes);
        const std::size_t mr = bs::minute_of(p.right_apex, a.fps(), minutes);
        ++(p.complete ? cl : pl)[ml];
        ++(p.complete ? cr : pr)[mr];
      }
      if (cl != base.per_minute_complete_left || cr != base.per_minute_complete_right ||
          pl != base.per_minute_partial_left || pr != base.per_minute_partial_right)
        return name + ": per-minute counts differ from the planted schedule";
    }

    // exclude every fifth event in turn and check exactly its counters move
    for (const bs::Eye eye : {bs::Eye::left, bs::Eye::right}) {
      const auto& events = eye == bs::Eye::left ? a.left : a.right;
      for (std::size_t k = 0; k < events.size(); k += 5) {
        bs::Analysis edited = a;
        const bs::BlinkEvent victim = events[k];
        bs::set_blink_state(edited.events(eye), victim.id, bs::BlinkState::none);
        bs::rematch(edited);
        const auto r = bs::statistics(edited);
        if (auto err = check_report(r); !err.empty()) return name + " after exclusion: " + err;

        bs::StatsReport want = base;
        const bool left = eye == bs::Eye::left;
        const bool partial = victim.state == bs::BlinkState::partial;
        const std::size_t m = bs::minute_of(victim.apex_frame, a.fps(), base.per_minute_complete_left.size());
        auto& total = left ? (partial ? want.partial_total_left : want.complete_total_left)
                           : (partial ? want.partial_total_right : want.complete_total_right);
        auto& minutes = left ? (partial ? want.per_minute_partial_left : want.per_minute_complete_left)
                             : (partial ? want.per_minute_partial_right : want.per_minute_complete_right);
        --total;
        --minutes[m];
        const auto counters = [](const bs::StatsReport& s) {
          return std::tuple(s.partial_total_left, s.partial_total_right, s.complete_total_left,
                            s.complete_total_right, s.per_minute_partial_left, s.per_minute_partial_right,
                            s.per_minute_complete_left, s.per_minute_complete_right);
        };
        if (counters(r) != counters(want)) return name + ": exclusion moved unexpected counters";
        ++exclusions;
      }
    }
    return {};
  };

  const std::pair<double, std::uint64_t> synthetic_runs[] = {{0.5, 1}, {1.0, 2}, {3.0, 3}, {2.5, 4}, {5.0, 5}};
  for (const auto& [minutes, seed] : synthetic_runs) {
    const auto rec = bs::synthetic::make_recording(minutes, 240.0, 15, seed);
    auto err = reconcile(fmt("synthetic %.1f min", minutes), bs::run_detection(rec.series, {}), &rec.plan);
    if (!err.empty()) return {false, err};
  }
  {
    const auto text = bs::read_file(BLINKSCOPE_SAMPLE_SCORES);
    const auto table = bs::csv::parse(text);
    const auto series = bs::load_score_csv(table, *bs::auto_select_columns(table.header), 240.0);
    auto err = reconcile("sample score file", bs::run_detection(series, {}), nullptr);
    if (!err.empty()) return {false, err};
  }
  return {true, fmt("%zu fixtures reconciled, %zu single-event exclusions checked", fixtures, exclusions)};
}

// ---------------------------------------------------------------------------

Result pipeline_performance() {
  const auto rec = bs::synthetic::make_recording(20.0, 240.0, 17, 2024);
  const std::string text = bs::export_scores(rec.series);

  const auto t0 = Clock::now();
  const auto table = bs::csv::parse(text);
  const auto series = bs::load_score_csv(table, {"EAR_2D_left", "EAR_2D_right"}, 240.0);
  const auto a = bs::run_detection(series, {});
  const auto stats = bs::statistics(a);
  const auto bundle = bs::summary(a);
  const double dt = seconds_since(t0);

  const std::size_t found = stats.partial_total_left + stats.complete_total_left;
  const bool ok = dt < kPipelineTimeLimitS && series.left.size() == 288000 && bundle.fps == 240.0;
  return {ok, fmt("%zu samples/eye, %zu planted, %zu left / %zu right detected, %zu matches, %.2f s (limit %.0f s)",
                  series.left.size(), rec.plan.size(), found, a.right.size(), a.matches.size(), dt,
                  kPipelineTimeLimitS)};
}

// ---------------------------------------------------------------------------

int run_cli_binary(const std::vector<std::string>& args) {
  std::string cmd = std::string("\"") + BLINKSCOPE_CLI_PATH + "\"";
  for (const auto& a : args) cmd += " \"" + a + "\"";
  cmd += " 2>/dev/null";
  return std::system(cmd.c_str());
}

Result determinism() {
  const fs::path root = fs::temp_directory_path() / fmt("blinkscope_accept_%d", static_cast<int>(::getpid()));
  fs::remove_all(root);
  const fs::path a = root / "a", b = root / "b";
  const std::string input = BLINKSCOPE_SAMPLE_SCORES;
  if (run_cli_binary({"all", "--fps", "240", "--input", input, "--out", a.string()}) != 0 ||
      run_cli_binary({"all", "--fps", "240", "--input", input, "--out", b.string()}) != 0)
    return {false, "CLI run failed"};

  const char* outputs[] = {"blinks.csv", "stats.csv", "stats.json", "summary.svg", "summary.json"};
  for (const char* name : outputs) {
    if (!fs::exists(a / name)) return {false, std::string("missing output ") + name};
    if (bs::read_file(a / name) != bs::read_file(b / name)) return {false, std::string(name) + " differs between runs"};
  }

  bs::service::ReviewService svc({root / "snapshots"});
  httplib::Server server;
  svc.mount(server);
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread worker([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  std::string failure;
  std::string service_stats;
  {
    httplib::Client client("127.0.0.1", port);
    nlohmann::json body{{"fps", 240}, {"csv", bs::read_file(input)}};
    auto created = client.Post("/api/v1/sessions", body.dump(), "application/json");
    if (!created || created->status != 201) {
      failure = "session create failed";
    } else {
      const std::string id = nlohmann::json::parse(created->body)["session_id"];
      auto det = client.Post("/api/v1/sessions/" + id + "/detect", "", "application/json");
      auto st = client.Get("/api/v1/sessions/" + id + "/stats");
      if (!det || det->status != 200 || !st || st->status != 200)
        failure = "service detect/stats failed";
      else
        service_stats = st->body;
    }
  }
  server.stop();
  worker.join();
  if (!failure.empty()) return {false, failure};

  const std::string cli_stats = bs::read_file(a / "stats.json");
  fs::remove_all(root);
  if (service_stats != cli_stats) return {false, "service stats JSON differs from CLI stats.json"};
  return {true, fmt("5 CLI outputs byte-identical across runs; service stats JSON identical to CLI (%zu bytes)",
                    cli_stats.size())};
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Result()>> criteria[] = {
      {"peak-engine differential", peak_differential},
      {"otsu oracle", otsu_oracle},
      {"EAR invariances", ear_invariance},
      {"matching oracle", matching_oracle},
      {"statistics reconciliation", stats_reconciliation},
      {"pipeline performance", pipeline_performance},
      {"determinism", determinism},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Result r;
    try {
      r = run();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %s: %s\n", r.pass ? "PASS" : "FAIL", name, r.detail.c_str());
    std::fflush(stdout);
    failed += r.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
