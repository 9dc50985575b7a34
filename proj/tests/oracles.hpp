#pragma once

// Reference implementations written straight from the metric definitions.
// They share no code with the library beyond the Mask type.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

#include "rc4d/image.hpp"

namespace oracle {

// Hand-labelled fixture: sin(2 pi t / T) + s t with T = 4 s, s = 0.5 per
// cycle, dt = 0.01 s over 18 s. Extrema satisfy cos(theta) = -s T / (2 pi);
// the labelled sample is the better of the two grid points bracketing each
// analytic extremum. Each cycle is a peak and the following trough.
inline double drift_fixture_score()
{
  double const T = 4.0, s = 0.5 / T, dt = 0.01, duration = 18.0;
  int const    n = static_cast<int>(std::lround(duration / dt)) + 1;
  auto const   value = [&](int i) {
    double const t = i * dt;
    return s * t + std::sin(2 * std::numbers::pi * t / T);
  };
  double mean = 0;
  for (int i = 0; i < n; i++) mean += value(i);
  mean /= n;

  double const theta_peak = std::acos(-s * T / (2 * std::numbers::pi));
  double const theta_trough = 2 * std::numbers::pi - theta_peak;
  auto const   label = [&](double theta, bool peak) {
    double const t = theta * T / (2 * std::numbers::pi);
    int const    lo = static_cast<int>(std::floor(t / dt)), hi = lo + 1;
    return (value(hi) > value(lo)) == peak ? hi : lo;
  };

  double mid = 0, range = 0;
  int    cycles = 0;
  for (int j = 0;; j++) {
    double const tt = (theta_trough + 2 * std::numbers::pi * j) * T / (2 * std::numbers::pi);
    if (tt > duration) break;
    double const p = value(label(theta_peak + 2 * std::numbers::pi * j, true)) - mean;
    double const q = value(label(theta_trough + 2 * std::numbers::pi * j, false)) - mean;
    mid += std::abs((p + q) / 2);
    range += p - q;
    cycles++;
  }
  if (cycles != 4) throw std::logic_error("drift fixture should hold four cycles");
  return (mid / cycles) / (range / cycles);
}

inline rc4d::Mask square(int n, int x0, int y0, int size)
{
  rc4d::Mask m(n);
  for (int y = y0; y < y0 + size; y++) {
    for (int x = x0; x < x0 + size; x++) m(x, y) = 1;
  }
  return m;
}

// Boundary by explicit neighbour inspection, distances by exhaustive search,
// nearest-rank 95th percentile of each directed set.
inline double hd95(rc4d::Mask const &a, rc4d::Mask const &b)
{
  auto pts = [](rc4d::Mask const &m) {
    std::vector<std::pair<int, int>> p;
    for (int y = 0; y < m.height(); y++) {
      for (int x = 0; x < m.width(); x++) {
        if (!m(x, y)) continue;
        bool      edge = false;
        int const dxs[] = {1, -1, 0, 0}, dys[] = {0, 0, 1, -1};
        for (int k = 0; k < 4; k++) {
          int const xx = x + dxs[k], yy = y + dys[k];
          if (xx < 0 || yy < 0 || xx >= m.width() || yy >= m.height() || !m(xx, yy)) edge = true;
        }
        if (edge) p.emplace_back(x, y);
      }
    }
    return p;
  };
  auto directed = [](auto const &from, auto const &to) {
    std::vector<double> d;
    for (auto [x, y] : from) {
      double best = 1e300;
      for (auto [u, v] : to) best = std::min(best, std::hypot(double(x - u), double(y - v)));
      d.push_back(best);
    }
    std::sort(d.begin(), d.end());
    auto const rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(d.size()) - 1e-12));
    return d[rank - 1];
  };
  auto const pa = pts(a), pb = pts(b);
  return std::max(directed(pa, pb), directed(pb, pa));
}

} // namespace oracle
