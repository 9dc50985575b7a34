#pragma once

#include <vector>

#include "rc4d/image.hpp"

namespace rc4d {

struct QualityConfig
{
  double              max_i = 1.0; // PSNR ceiling
  double              k1 = 0.01;
  double              k2 = 0.03;
  double              dynamic_range = 1.0; // L in c1 = (k1 L)^2, c2 = (k2 L)^2
  int                 ssim_window = 11;
  double              ssim_sigma = 1.5;
  std::vector<double> msssim_weights{0.0448, 0.2856, 0.3001, 0.2363, 0.1333};

  void validate() const;
};

double rmse(RealImage const &pred, RealImage const &ref);
double rmse(ImageSeries const &pred, ImageSeries const &ref); // over every pixel of every frame

// 20 log10(MAX_I / RMSE); +infinity for identical inputs.
double psnr(RealImage const &pred, RealImage const &ref, QualityConfig const &cfg = {});
double psnr(ImageSeries const &pred, ImageSeries const &ref, QualityConfig const &cfg = {});

// Mean of the local SSIM statistic over all fully-contained Gaussian windows.
double ssim(RealImage const &pred, RealImage const &ref, QualityConfig const &cfg = {});
double ssim(ImageSeries const &pred, ImageSeries const &ref, QualityConfig const &cfg = {}); // frame mean

struct SsimTerms
{
  double ssim = 0; // mean of l * cs
  double cs = 0;   // mean of the contrast-structure term alone
};
SsimTerms ssim_terms(RealImage const &pred, RealImage const &ref, QualityConfig const &cfg = {});

// Scales whose size still holds one window, capped at the weight count.
int msssim_scales(int width, int height, QualityConfig const &cfg = {});

// prod_{j<M} cs_j^{w_j} * ssim_M^{w_M}, weights renormalized over the M
// usable scales, 2x2 mean pooling between scales. Negative terms clamp to 0.
double msssim(RealImage const &pred, RealImage const &ref, QualityConfig const &cfg = {});
double msssim(ImageSeries const &pred, ImageSeries const &ref, QualityConfig const &cfg = {});

RealImage downsample2(RealImage const &img);

// Half-open pixel extents [x0, x1) x [y0, y1).
struct Box
{
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  long area() const noexcept { return x1 > x0 && y1 > y0 ? static_cast<long>(x1 - x0) * (y1 - y0) : 0; }
};

struct Instance
{
  Mask   mask;
  Box    box;
  double confidence = 1.0;
};

struct SegSample
{
  std::vector<Instance> predicted;
  std::vector<Instance> truth;
  double                spacing_mm = 1.0;
};

struct Counts
{
  int tp = 0, fp = 0, fn = 0;
  Counts &operator+=(Counts const &o)
  {
    tp += o.tp, fp += o.fp, fn += o.fn;
    return *this;
  }
};

struct MatchCounts
{
  Counts detection;
  Counts segmentation;
};

Box    bounding_box(Mask const &m);
double box_iou(Box const &a, Box const &b);
double mask_iou(Mask const &a, Mask const &b);

// Greedy matching in descending confidence order. A prediction is a true
// positive when its best IoU against a still-unmatched ground truth reaches
// the threshold.
MatchCounts match_and_count(SegSample const &sample, double iou_threshold = 0.5);

struct Prf
{
  double precision = 0, recall = 0, dice = 0;
  bool   precision_defined = false, recall_defined = false, dice_defined = false;
};
Prf prf_dice(Counts const &c);

// Mask pixels with at least one 4-neighbour outside the mask (or the image).
Mask boundary(Mask const &m);

// Symmetric 95th-percentile boundary distance (nearest rank), in mm.
double hd95(Mask const &a, Mask const &b, double spacing_mm = 1.0);

// Exact squared Euclidean distance to the nearest set pixel.
Grid<double> squared_distance_transform(Mask const &sites);

} // namespace rc4d
