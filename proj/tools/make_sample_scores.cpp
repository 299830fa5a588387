// Writes the bundled sample score file: two minutes at 240 fps with planted
// blinks, 2D and 3D columns for each eye and a few dropped-tracking runs.
//
//   make_sample_scores <out.csv> [seed]

#include <cstdio>
#include <cstdlib>
#include <string>

#include "blinkscope/csv.hpp"
#include "blinkscope/io.hpp"
#include "blinkscope/synthetic.hpp"

using namespace blinkscope;

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: make_sample_scores <out.csv> [seed]\n");
    return 1;
  }
  const std::uint64_t seed = argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 7;
  const double fps = 240.0;
  const auto rec = synthetic::make_recording(2.0, fps, 17, seed);
  // the 3D columns sit slightly above the 2D ones with their own noise
  synthetic::Gaussian noise(seed + 100);

  auto dropped = [](std::size_t i) {
    return (i >= 3000 && i < 3012) || (i >= 17500 && i < 17540) || (i >= 26000 && i < 26003);
  };

  csv::Writer w;
  w.row({"frame", "timestamp_s", "EAR2D6_l", "EAR2D6_r", "EAR3D6_l", "EAR3D6_r"});
  const std::size_t n = rec.series.left.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double l = rec.series.left[i], r = rec.series.right[i];
    const double l3 = std::clamp(l * 1.04 + 0.001 * noise(), 0.0, 1.0);
    const double r3 = std::clamp(r * 1.04 + 0.001 * noise(), 0.0, 1.0);
    const bool gap = dropped(i);
    w.row({std::to_string(i), csv::number(static_cast<double>(i) / fps, 9), gap ? "" : csv::number(l, 6),
           gap ? "" : csv::number(r, 6), gap ? "" : csv::number(l3, 6), gap ? "" : csv::number(r3, 6)});
  }
  write_file_atomic(argv[1], w.take());
  return 0;
}
