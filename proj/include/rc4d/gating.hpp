#pragma once

#include <cstdint>
#include <vector>

#include "rc4d/trajectory.hpp"

namespace rc4d {

struct WaveformParams
{
  double        period = 4.0;    // seconds
  double        amplitude = 1.0;
  double        drift = 0.0;     // baseline slope, units per second
  double        jitter = 0.0;    // per-cycle period std, fraction of period
  double        noise = 0.0;     // additive Gaussian std
  double        dt = 0.01;       // sampling interval, seconds
  std::uint64_t seed = 0;
};

// Self-gating respiratory surrogate sampled on t_i = i * dt.
struct RespWaveform
{
  std::vector<double> values;
  double              dt = 0.01;
  WaveformParams      params;

  double duration() const noexcept { return values.empty() ? 0.0 : (values.size() - 1) * dt; }
  // Linear interpolation; throws outside [0, duration()].
  double at(double t) const;
};

RespWaveform synthesize(WaveformParams const &params, double duration);

// Peaks and troughs of the de-meaned waveform, as sample indices. Found
// from sign changes of the derivative of a moving average (window one tenth
// of the nominal period), refined to the raw extremum within that window.
struct Extrema
{
  std::vector<int> peaks;
  std::vector<int> troughs;
};
Extrema detect_extrema(RespWaveform const &w);
double  detected_period(RespWaveform const &w); // mean peak spacing, seconds

struct Regularity
{
  double score = 0;      // mean |mid-level| / mean peak-to-trough range
  bool   is_regular = true;
  int    cycles = 0;
};

inline constexpr double irregular_threshold = 0.20;

// Each cycle is a peak and the trough that follows it. Throws
// "insufficient cycles" when fewer than two are found.
Regularity regularity_score(RespWaveform const &w);

struct BinAssignment
{
  std::vector<std::int32_t> bin_of_spoke;
  std::vector<double>       representative; // median amplitude per bin

  int              n_bins() const noexcept { return static_cast<int>(representative.size()); }
  std::vector<int> spokes_in_bin(int bin) const; // acquisition order
  std::vector<int> bin_sizes() const;
};

// Equal-count amplitude binning. Bin 0 holds the lowest amplitudes
// (end-expiration); ties are broken by acquisition time.
BinAssignment bin_spokes(RespWaveform const &w, SpokePlan const &plan, int n_bins = 8);

} // namespace rc4d
