#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rc4d/container.hpp"
#include "rc4d/cs_recon.hpp"
#include "rc4d/gating.hpp"
#include "rc4d/metrics.hpp"
#include "rc4d/phantom.hpp"

namespace rc4d {

// Each stage is a pure function of its input container and options.

Container make_phantom(PhantomSpec const &spec);
PhantomSpec phantom_of(Container const &c);

struct AcquireOptions
{
  int            n_spokes = 3000;
  double         spoke_interval = 3e-3;
  double         readout_oversampling = 2.0;
  WaveformParams waveform;
  std::uint64_t  seed = 0; // overrides waveform.seed
};

// Simulates golden-angle acquisition of the moving phantom: every spoke
// samples the analytic spectrum at the waveform value of its timestamp.
Container acquire(Container const &phantom, AcquireOptions const &opt);

Container undersample(Container const &acquired, int keep_first);

Container gate(Container const &acquired, int n_bins = 8);

enum class ReconMethod { nufft, cs };

struct ReconOptions
{
  ReconMethod    method = ReconMethod::nufft;
  CsConfig       cs;
  GriddingConfig gridding;
  bool           trace = false; // attach the CS objective trace as trace.json
};

Container reconstruct(Container const &gated, ReconOptions const &opt);

// Helpers shared by the stages and tests.
SpokePlan             plan_of(Container const &c);
RespWaveform          waveform_of(Container const &c);
BinAssignment         bins_of(Container const &c);
std::vector<SpokeSet> binned_data(Container const &gated);
ImageSeries           truth_series(Container const &c); // phantom rendered at the bin amplitudes

struct EvaluateOptions
{
  QualityConfig         quality;
  double                fov_mm = 374.0;
  std::optional<double> wall_time_s;
};

struct LesionScores
{
  Counts                detection;
  Counts                segmentation;
  std::optional<double> hd95_mm;
};

// Threshold segmentation of the lesion in every frame of `pred`, scored
// against the lesion support at the frame's bin amplitude.
LesionScores lesion_scores(ImageSeries const &pred, PhantomSpec const &spec, std::vector<double> const &amplitudes,
                           double spacing_mm);

// MetricsReport JSON. `ref` defaults to the phantom truth carried in `pred`.
nlohmann::json evaluate(Container const &pred, Container const *ref, EvaluateOptions const &opt = {});

struct ExportOptions
{
  int size = 64;
  int split_train = 37;
  int split_test = 11;
};

RealImage   resize_bilinear(RealImage const &img, int width, int height);
// Z-score over every pixel of the series; returns (mean, std).
std::pair<double, double> zscore(ImageSeries &s);

// Writes one paired sample directory per (full, under) pair plus index.json.
void export_training(std::vector<std::pair<Container, Container>> const &pairs, ExportOptions const &opt,
                     std::filesystem::path const &out);

} // namespace rc4d
