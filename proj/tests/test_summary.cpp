#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <gtest/gtest.h>

#include "blinkscope/pipeline.hpp"
#include "blinkscope/summary.hpp"
#include "blinkscope/synthetic.hpp"

using namespace blinkscope;
namespace pt = boost::property_tree;

namespace {

struct SvgCounts {
  std::size_t circles = 0, polygons = 0, bpm_bars = 0, delay_bars = 0, polylines = 0;
  std::size_t left_markers = 0, right_markers = 0;
};

void walk(const pt::ptree& node, SvgCounts& c) {
  for (const auto& [name, child] : node) {
    if (name == "<xmlattr>") continue;
    const std::string cls = child.get("<xmlattr>.class", "");
    if (name == "circle" && cls.find("marker") != std::string::npos) ++c.circles;
    if (name == "polygon" && cls.find("marker") != std::string::npos) ++c.polygons;
    if (name == "polyline") ++c.polylines;
    if (name == "rect" && cls == "bpm-bar") ++c.bpm_bars;
    if (name == "rect" && cls == "delay-bar") ++c.delay_bars;
    if (cls.find("marker") != std::string::npos) {
      if (cls.find("left") != std::string::npos) ++c.left_markers;
      if (cls.find("right") != std::string::npos) ++c.right_markers;
    }
    walk(child, c);
  }
}

SvgCounts parse_svg(const std::string& svg) {
  std::istringstream in(svg);
  pt::ptree tree;
  pt::read_xml(in, tree);
  SvgCounts c;
  walk(tree, c);
  return c;
}

}  // namespace

TEST(Rolling, ConstantSeries) {
  const EarSeries s(std::vector<double>(100, 0.3), 30.0, Eye::left);
  const auto r = rolling_stats(s, 7);
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_DOUBLE_EQ(r.mean[i], 0.3);
    EXPECT_EQ(r.std[i], 0.0);
  }
}

TEST(Rolling, EvenWindowHandValues) {
  // window 2 covers [i, i + 1]
  const EarSeries s({0, 1, 0, 1}, 30.0, Eye::left);
  const auto r = rolling_stats(s, 2);
  const double mean[] = {0.5, 0.5, 0.5, 1.0};
  const double sd[] = {0.5, 0.5, 0.5, 0.0};
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_NEAR(r.mean[i], mean[i], 1e-15);
    EXPECT_NEAR(r.std[i], sd[i], 1e-15);
  }
}

TEST(Rolling, WindowOneIsIdentity) {
  const EarSeries s({0.1, 0.7, 0.3}, 30.0, Eye::left);
  const auto r = rolling_stats(s, 1);
  EXPECT_EQ(r.mean.values(), s.values());
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(r.std[i], 0.0);
}

TEST(Rolling, MatchesDirectWindows) {
  const auto rec = synthetic::make_recording(0.2, 120.0, 10, 9);
  const auto& s = rec.series.left;
  const std::size_t w = 15;
  const auto r = rolling_stats(s, w);
  for (std::size_t i = 0; i < s.size(); i += 37) {
    const std::size_t lo = i >= (w - 1) / 2 ? i - (w - 1) / 2 : 0;
    const std::size_t hi = std::min(s.size() - 1, i + w / 2);
    double sum = 0, n = 0;
    for (std::size_t k = lo; k <= hi; ++k) sum += s[k], ++n;
    const double m = sum / n;
    double ss = 0;
    for (std::size_t k = lo; k <= hi; ++k) ss += (s[k] - m) * (s[k] - m);
    EXPECT_NEAR(r.mean[i], m, 1e-12);
    EXPECT_NEAR(r.std[i], std::sqrt(ss / n), 1e-9);
  }
}

TEST(Stride, KeepsEndsAndBudget) {
  EXPECT_EQ(uniform_stride_indices(5, 10), (std::vector<std::size_t>{0, 1, 2, 3, 4}));
  const auto idx = uniform_stride_indices(288000, 5000);
  EXPECT_LE(idx.size(), 5000u);
  EXPECT_EQ(idx.front(), 0u);
  EXPECT_EQ(idx.back(), 287999u);
  EXPECT_TRUE(uniform_stride_indices(0, 10).empty());
}

TEST(DelayEdges, CenteredOnZero) {
  const auto e = delay_bin_edges(500.0, 10.0);
  EXPECT_EQ(e.size(), 102u);
  EXPECT_EQ(e.front(), -505.0);
  EXPECT_EQ(e.back(), 505.0);
  EXPECT_EQ(e[50], -5.0);
  EXPECT_EQ(e[51], 5.0);
}

TEST(Summary, ZeroEvents) {
  const EarSeries s(std::vector<double>(24000, 0.3), 240.0, Eye::left);
  const auto b = build_summary(s, s, {}, {}, {}, 240.0);
  EXPECT_TRUE(b.markers.empty());
  for (auto c : b.blinks_per_minute) EXPECT_EQ(c, 0u);
  for (auto c : b.delay_counts) EXPECT_EQ(c, 0u);
  const auto svg = render_summary_svg(b);
  const auto counts = parse_svg(svg);
  EXPECT_EQ(counts.circles + counts.polygons, 0u);
  EXPECT_NE(svg.find("class=\"axes\""), std::string::npos);
}

TEST(Summary, ZeroDelaysLandInCentralBin) {
  const auto rec = synthetic::make_recording(1.0, 240.0, 10, 5, 0);
  auto a = run_detection(rec.series, {});
  std::size_t bilateral = 0;
  for (auto& m : a.matches)
    if (m.bilateral()) {
      m.delay_ms = 0.0;
      ++bilateral;
    }
  ASSERT_GT(bilateral, 0u);
  const auto b = summary(a);
  std::size_t total = 0;
  for (auto c : b.delay_counts) total += c;
  EXPECT_EQ(total, bilateral);
  EXPECT_EQ(b.delay_counts[50], bilateral);
}

TEST(Summary, BlinksPerMinuteFollowsPlant) {
  const auto rec = synthetic::make_recording(20.0, 240.0, 17, 12);
  const auto a = run_detection(rec.series, {});
  const auto b = summary(a);
  std::vector<std::size_t> want(20, 0);
  for (const auto& p : rec.plan) ++want[minute_of(p.left_apex, 240.0, 20)];
  EXPECT_EQ(b.blinks_per_minute, want);
  EXPECT_LE(b.scatter_left.size(), 5000u);
}

TEST(Summary, SvgIsWellFormedAndCountsMatch) {
  const auto rec = synthetic::make_recording(2.0, 240.0, 15, 8);
  auto a = run_detection(rec.series, {});
  set_blink_state(a.left, a.left[0].id, BlinkState::none);
  rematch(a);
  const auto b = summary(a);
  const auto svg = render_summary_svg(b);
  const auto c = parse_svg(svg);

  std::size_t complete = 0, partial = 0, left = 0;
  for (const auto& m : b.markers) {
    complete += m.state == BlinkState::complete;
    partial += m.state == BlinkState::partial;
    left += m.eye == Eye::left;
  }
  EXPECT_EQ(c.circles, complete);
  EXPECT_EQ(c.polygons, partial);
  EXPECT_EQ(c.left_markers, left);
  EXPECT_EQ(c.right_markers, b.markers.size() - left);
  EXPECT_EQ(b.markers.size(), a.left.size() + a.right.size() - 1);
  EXPECT_EQ(c.bpm_bars, b.blinks_per_minute.size());
  EXPECT_EQ(c.delay_bars, b.delay_counts.size());
  EXPECT_NE(svg.find("#1f77b4"), std::string::npos);
  EXPECT_NE(svg.find("#d62728"), std::string::npos);
  EXPECT_EQ(svg, render_summary_svg(b));
}

TEST(Summary, JsonRoundTrip) {
  const auto rec = synthetic::make_recording(1.0, 240.0, 12, 4);
  const auto b = summary(run_detection(rec.series, {}));
  const auto back = summary_from_json(nlohmann::ordered_json::parse(to_json(b).dump()));
  EXPECT_EQ(back, b);
}

TEST(Summary, RejectsBadOptions) {
  const EarSeries s(std::vector<double>(100, 0.3), 240.0, Eye::left);
  SummaryOptions o;
  o.scatter_budget = 10;
  EXPECT_THROW(build_summary(s, s, {}, {}, {}, 240.0, o), InputError);
  EXPECT_THROW(build_summary(s, s, {}, {}, {}, 0.0), InputError);
}
