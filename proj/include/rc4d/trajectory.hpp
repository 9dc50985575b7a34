#pragma once

#include <span>
#include <vector>

#include "rc4d/phantom.hpp"

namespace rc4d {

// 180 / phi, the golden-angle increment for full-spoke radial sampling.
inline double const golden_angle_deg = 180.0 * 2.0 / (1.0 + 2.23606797749978969640917366873128);

struct TrajectorySpec
{
  int    matrix = 64;
  int    n_spokes = 1;
  double readout_oversampling = 2.0;
  double spoke_interval = 3e-3; // seconds; one TR per spoke
};

// Radial spoke geometry in acquisition order. Every spoke shares the same
// readout positions (cycles/FOV along the spoke direction).
struct SpokePlan
{
  int                 matrix = 0;
  std::vector<double> angles;     // degrees in [0, 180)
  std::vector<double> timestamps; // seconds
  std::vector<double> readout;    // signed radius of each sample along the spoke
  int                 acquired_spokes = 0; // spokes before any undersampling

  int    n_spokes() const noexcept { return static_cast<int>(angles.size()); }
  int    samples_per_spoke() const noexcept { return static_cast<int>(readout.size()); }
  int    n_samples() const noexcept { return n_spokes() * samples_per_spoke(); }
  double acceleration() const noexcept { return static_cast<double>(acquired_spokes) / n_spokes(); }

  KPoint              kpoint(int spoke, int sample) const noexcept;
  std::vector<KPoint> kpoints() const; // spoke-major
  std::vector<KPoint> spoke_kpoints(int spoke) const;

  // Spokes at the given indices, order preserved.
  SpokePlan subset(std::span<int const> spokes) const;
};

int readout_samples(int matrix, double readout_oversampling);

SpokePlan plan(TrajectorySpec const &spec);

// N * pi / 2, rounded to the nearest spoke
int nyquist_spokes(int matrix);

// Keeps the first `keep_first` spokes in acquisition order.
SpokePlan undersample(SpokePlan const &p, int keep_first);

} // namespace rc4d
