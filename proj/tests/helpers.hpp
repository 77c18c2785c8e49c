#pragma once

#include <cmath>
#include <vector>

#include "pentrace/rng.hpp"
#include "pentrace/signal.hpp"

namespace pentrace::test {

// Session from a pen-status pattern; timestamps advance by dt seconds.
inline Session session_from_pattern(const std::vector<int>& pen, double dt = 0.005) {
  Session s;
  s.subject_id = "T";
  s.tick_rate = 1000.0;
  for (std::size_t i = 0; i < pen.size(); ++i) {
    Sample smp;
    smp.x = static_cast<double>(i);
    smp.y = 0.0;
    smp.t_ticks = static_cast<std::int64_t>(std::llround(static_cast<double>(i) * dt * 1000.0));
    smp.t = static_cast<double>(smp.t_ticks) / 1000.0;
    smp.pen_status = pen[i];
    smp.pressure = pen[i] == kPenOnSurface ? 500.0 : 0.0;
    smp.tilt = 45.0;
    smp.azimuth = 270.0;
    s.samples.push_back(smp);
  }
  return s;
}

// Explicit sample constructor for hand-built trajectories.
inline Sample make_sample(double x, double y, double t, int pen, double pressure = 0.0,
                          double tilt = 45.0, double azimuth = 270.0) {
  Sample s;
  s.x = x;
  s.y = y;
  s.t = t;
  s.t_ticks = static_cast<std::int64_t>(std::llround(t * 1000.0));
  s.pen_status = pen;
  s.pressure = pen == kPenOnSurface ? pressure : 0.0;
  s.tilt = tilt;
  s.azimuth = azimuth;
  return s;
}

// Random but structurally valid session: alternating runs, strictly
// increasing timestamps, zero in-air pressure.
inline Session random_session(Rng& rng, int min_strokes = 3, int max_strokes = 9) {
  Session s;
  s.subject_id = "R";
  const int n_strokes = min_strokes + rng.below_int(max_strokes - min_strokes + 1);
  double t = 0.0;
  double x = rng.uniform(0.0, 1000.0), y = rng.uniform(0.0, 1000.0);
  int pen = kPenOnSurface;
  for (int k = 0; k < n_strokes; ++k) {
    const int m = 3 + rng.below_int(40);
    for (int i = 0; i < m; ++i) {
      Sample smp;
      smp.x = x;
      smp.y = y;
      smp.t = t;
      smp.t_ticks = static_cast<std::int64_t>(std::llround(t * 1e6));
      smp.pen_status = pen;
      smp.pressure = pen == kPenOnSurface ? rng.uniform(1.0, 1000.0) : 0.0;
      smp.tilt = rng.uniform(0.0, 90.0);
      smp.azimuth = rng.uniform(0.0, 360.0);
      s.samples.push_back(smp);
      t += 0.005 * (1.0 + 0.2 * rng.uniform01());
      x += rng.normal(0.0, 12.0);
      y += rng.normal(0.0, 12.0);
    }
    pen = pen == kPenOnSurface ? kPenInAir : kPenOnSurface;
  }
  s.tick_rate = 1e6;
  return s;
}

}  // namespace pentrace::test
