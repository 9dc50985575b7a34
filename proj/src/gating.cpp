#include "rc4d/gating.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

namespace rc4d {

double RespWaveform::at(double t) const
{
  if (values.empty()) throw Error("empty waveform");
  double const pos = t / dt;
  double const last = static_cast<double>(values.size() - 1);
  if (pos < -1e-9 || pos > last + 1e-9) throw Error("timestamp outside waveform support");
  double const clamped = std::clamp(pos, 0.0, last);
  auto const   i = static_cast<std::size_t>(std::floor(clamped));
  if (i + 1 >= values.size()) return values.back();
  double const f = clamped - static_cast<double>(i);
  return values[i] * (1.0 - f) + values[i + 1] * f;
}

RespWaveform synthesize(WaveformParams const &params, double duration)
{
  if (!(params.period > 0)) throw Error("waveform period must be positive");
  if (!(params.dt > 0)) throw Error("waveform dt must be positive");
  if (duration < 2.0 * params.period) throw Error("duration must cover at least two periods");

  std::mt19937_64                  rng(params.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  // cycle boundaries with jittered lengths
  std::vector<double> starts{0.0};
  while (starts.back() <= duration) {
    double const len = params.period * std::max(0.5, 1.0 + params.jitter * normal(rng));
    starts.push_back(starts.back() + len);
  }

  auto const   n = static_cast<std::size_t>(std::floor(duration / params.dt + 1e-9)) + 1;
  RespWaveform w;
  w.dt = params.dt;
  w.params = params;
  w.values.resize(n);
  std::size_t c = 0;
  for (std::size_t i = 0; i < n; i++) {
    double const t = static_cast<double>(i) * params.dt;
    while (t >= starts[c + 1]) c++;
    double const phase = 2.0 * std::numbers::pi * (static_cast<double>(c) + (t - starts[c]) / (starts[c + 1] - starts[c]));
    double const noise = params.noise > 0 ? params.noise * normal(rng) : 0.0;
    w.values[i] = params.drift * t + params.amplitude * std::sin(phase) + noise;
  }
  return w;
}

namespace {

std::vector<double> demeaned(std::vector<double> const &v)
{
  double const mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  std::vector<double> out(v.size());
  std::transform(v.begin(), v.end(), out.begin(), [mean](double x) { return x - mean; });
  return out;
}

} // namespace

Extrema detect_extrema(RespWaveform const &w)
{
  Extrema ex;
  if (w.values.size() < 3) return ex;
  auto const sig = demeaned(w.values);
  int const  n = static_cast<int>(sig.size());
  int const  half = std::max(1, static_cast<int>(std::lround(w.params.period / 10.0 / w.dt / 2.0)));

  std::vector<double> smooth(sig.size());
  for (int i = 0; i < n; i++) {
    int const lo = std::max(0, i - half), hi = std::min(n - 1, i + half);
    double    acc = 0;
    for (int j = lo; j <= hi; j++) acc += sig[static_cast<std::size_t>(j)];
    smooth[static_cast<std::size_t>(i)] = acc / (hi - lo + 1);
  }

  auto refine = [&](int i, bool peak) {
    int const lo = std::max(0, i - half), hi = std::min(n - 1, i + half);
    int       best = lo;
    for (int j = lo; j <= hi; j++) {
      double const v = sig[static_cast<std::size_t>(j)], b = sig[static_cast<std::size_t>(best)];
      if (peak ? v > b : v < b) best = j;
    }
    return best;
  };

  int last_sign = 0;
  for (int i = 0; i + 1 < n; i++) {
    double const d = smooth[static_cast<std::size_t>(i + 1)] - smooth[static_cast<std::size_t>(i)];
    int const    sign = d > 0 ? 1 : (d < 0 ? -1 : 0);
    if (sign == 0) continue;
    if (last_sign > 0 && sign < 0) {
      int const p = refine(i, true);
      // enforce peak/trough alternation, keeping the more extreme candidate
      if (!ex.peaks.empty() && (ex.troughs.empty() || ex.troughs.back() < ex.peaks.back())) {
        if (sig[static_cast<std::size_t>(p)] > sig[static_cast<std::size_t>(ex.peaks.back())]) ex.peaks.back() = p;
      }
      else {
        ex.peaks.push_back(p);
      }
    }
    else if (last_sign < 0 && sign > 0) {
      int const t = refine(i, false);
      if (!ex.troughs.empty() && (ex.peaks.empty() || ex.peaks.back() < ex.troughs.back())) {
        if (sig[static_cast<std::size_t>(t)] < sig[static_cast<std::size_t>(ex.troughs.back())]) ex.troughs.back() = t;
      }
      else {
        ex.troughs.push_back(t);
      }
    }
    last_sign = sign;
  }
  return ex;
}

double detected_period(RespWaveform const &w)
{
  auto const ex = detect_extrema(w);
  if (ex.peaks.size() < 2) throw Error("insufficient cycles");
  return (ex.peaks.back() - ex.peaks.front()) * w.dt / static_cast<double>(ex.peaks.size() - 1);
}

Regularity regularity_score(RespWaveform const &w)
{
  auto const ex = detect_extrema(w);
  auto const sig = demeaned(w.values);

  double mid_sum = 0, range_sum = 0;
  int    cycles = 0;
  for (int p : ex.peaks) {
    auto const next = std::upper_bound(ex.troughs.begin(), ex.troughs.end(), p);
    if (next == ex.troughs.end()) break;
    double const peak = sig[static_cast<std::size_t>(p)];
    double const trough = sig[static_cast<std::size_t>(*next)];
    mid_sum += std::abs((peak + trough) / 2.0);
    range_sum += peak - trough;
    cycles++;
  }
  if (cycles < 2) throw Error("insufficient cycles");

  Regularity r;
  r.cycles = cycles;
  r.score = (mid_sum / cycles) / (range_sum / cycles);
  r.is_regular = r.score <= irregular_threshold;
  return r;
}

std::vector<int> BinAssignment::spokes_in_bin(int bin) const
{
  std::vector<int> out;
  for (std::size_t i = 0; i < bin_of_spoke.size(); i++) {
    if (bin_of_spoke[i] == bin) out.push_back(static_cast<int>(i));
  }
  return out;
}

std::vector<int> BinAssignment::bin_sizes() const
{
  std::vector<int> sizes(representative.size(), 0);
  for (auto b : bin_of_spoke) sizes[static_cast<std::size_t>(b)]++;
  return sizes;
}

BinAssignment bin_spokes(RespWaveform const &w, SpokePlan const &plan, int n_bins)
{
  if (n_bins < 1) throw Error("n_bins must be positive");
  int const n = plan.n_spokes();
  if (n < n_bins) throw Error("fewer spokes than bins");

  std::vector<double> amp(static_cast<std::size_t>(n));
  for (int i = 0; i < n; i++) {
    amp[static_cast<std::size_t>(i)] = w.at(plan.timestamps[static_cast<std::size_t>(i)]);
  }

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    auto const ia = static_cast<std::size_t>(a), ib = static_cast<std::size_t>(b);
    if (amp[ia] != amp[ib]) return amp[ia] < amp[ib];
    return plan.timestamps[ia] < plan.timestamps[ib];
  });

  BinAssignment out;
  out.bin_of_spoke.assign(static_cast<std::size_t>(n), 0);
  out.representative.assign(static_cast<std::size_t>(n_bins), 0.0);
  int const base = n / n_bins, extra = n % n_bins;
  int       pos = 0;
  for (int b = 0; b < n_bins; b++) {
    int const           size = base + (b < extra ? 1 : 0);
    std::vector<double> members;
    for (int k = 0; k < size; k++, pos++) {
      int const s = order[static_cast<std::size_t>(pos)];
      out.bin_of_spoke[static_cast<std::size_t>(s)] = b;
      members.push_back(amp[static_cast<std::size_t>(s)]);
    }
    // members are already sorted
    auto const m = members.size();
    out.representative[static_cast<std::size_t>(b)] =
      m % 2 ? members[m / 2] : 0.5 * (members[m / 2 - 1] + members[m / 2]);
  }
  return out;
}

} // namespace rc4d
