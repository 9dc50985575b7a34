#include "rc4d/trajectory.hpp"

#include <cmath>
#include <numbers>

namespace rc4d {

KPoint SpokePlan::kpoint(int spoke, int sample) const noexcept
{
  double const theta = angles[static_cast<std::size_t>(spoke)] * std::numbers::pi / 180.0;
  double const r = readout[static_cast<std::size_t>(sample)];
  return {r * std::cos(theta), r * std::sin(theta)};
}

std::vector<KPoint> SpokePlan::kpoints() const
{
  std::vector<KPoint> out;
  out.reserve(static_cast<std::size_t>(n_samples()));
  for (int s = 0; s < n_spokes(); s++) {
    for (int j = 0; j < samples_per_spoke(); j++) {
      out.push_back(kpoint(s, j));
    }
  }
  return out;
}

std::vector<KPoint> SpokePlan::spoke_kpoints(int spoke) const
{
  std::vector<KPoint> out;
  out.reserve(readout.size());
  for (int j = 0; j < samples_per_spoke(); j++) {
    out.push_back(kpoint(spoke, j));
  }
  return out;
}

SpokePlan SpokePlan::subset(std::span<int const> spokes) const
{
  SpokePlan out;
  out.matrix = matrix;
  out.readout = readout;
  out.acquired_spokes = acquired_spokes;
  for (int s : spokes) {
    if (s < 0 || s >= n_spokes()) throw Error("spoke index out of range");
    out.angles.push_back(angles[static_cast<std::size_t>(s)]);
    out.timestamps.push_back(timestamps[static_cast<std::size_t>(s)]);
  }
  return out;
}

int readout_samples(int matrix, double readout_oversampling)
{
  int n = static_cast<int>(std::lround(readout_oversampling * matrix));
  if (n % 2 == 0) n += 1;
  return n;
}

SpokePlan plan(TrajectorySpec const &spec)
{
  if (spec.n_spokes < 1) throw Error("n_spokes must be at least 1");
  if (spec.matrix < 2) throw Error("matrix must be at least 2");
  if (spec.readout_oversampling < 1.0) throw Error("readout oversampling must be at least 1");
  if (!(spec.spoke_interval > 0)) throw Error("spoke interval must be positive");

  SpokePlan p;
  p.matrix = spec.matrix;
  p.acquired_spokes = spec.n_spokes;
  p.angles.resize(static_cast<std::size_t>(spec.n_spokes));
  p.timestamps.resize(static_cast<std::size_t>(spec.n_spokes));
  for (int i = 0; i < spec.n_spokes; i++) {
    p.angles[static_cast<std::size_t>(i)] = std::fmod(i * golden_angle_deg, 180.0);
    p.timestamps[static_cast<std::size_t>(i)] = i * spec.spoke_interval;
  }

  int const    m = readout_samples(spec.matrix, spec.readout_oversampling);
  double const kmax = spec.matrix / 2.0;
  p.readout.resize(static_cast<std::size_t>(m));
  int const centre = (m - 1) / 2;
  for (int j = 0; j < m; j++) {
    // centre sample is exactly zero
    p.readout[static_cast<std::size_t>(j)] = m == 1 ? 0.0 : kmax * (j - centre) / static_cast<double>(centre);
  }
  return p;
}

int nyquist_spokes(int matrix)
{
  if (matrix < 2) throw Error("matrix must be at least 2");
  return static_cast<int>(std::lround(matrix * std::numbers::pi / 2.0));
}

SpokePlan undersample(SpokePlan const &p, int keep_first)
{
  if (keep_first < 1 || keep_first > p.n_spokes()) {
    throw Error("keep_first must lie in [1, " + std::to_string(p.n_spokes()) + "]");
  }
  SpokePlan out = p;
  out.angles.resize(static_cast<std::size_t>(keep_first));
  out.timestamps.resize(static_cast<std::size_t>(keep_first));
  return out;
}

} // namespace rc4d
