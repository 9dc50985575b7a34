#include "rc4d/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace rc4d {

namespace {

void require_same(RealImage const &a, RealImage const &b)
{
  if (!a.same_shape(b) || a.size() == 0) throw Error("image shape mismatch");
}

void require_same(ImageSeries const &a, ImageSeries const &b)
{
  if (a.n_frames() != b.n_frames() || a.n_frames() == 0) throw Error("series length mismatch");
  for (int f = 0; f < a.n_frames(); f++) require_same(a.frames[static_cast<std::size_t>(f)], b.frames[static_cast<std::size_t>(f)]);
}

std::vector<double> gaussian_window(int size, double sigma)
{
  std::vector<double> w(static_cast<std::size_t>(size));
  double const        c = (size - 1) / 2.0;
  for (int i = 0; i < size; i++) w[static_cast<std::size_t>(i)] = std::exp(-(i - c) * (i - c) / (2 * sigma * sigma));
  double const s = std::accumulate(w.begin(), w.end(), 0.0);
  for (auto &v : w) v /= s;
  return w;
}

} // namespace

void QualityConfig::validate() const
{
  if (!(k1 > 0 && k2 > 0 && dynamic_range > 0 && max_i > 0)) throw Error("quality constants must be positive");
  if (ssim_window < 1) throw Error("ssim window must be positive");
  if (msssim_weights.empty()) throw Error("ms-ssim needs at least one weight");
}

double rmse(RealImage const &pred, RealImage const &ref)
{
  require_same(pred, ref);
  double acc = 0;
  for (std::size_t i = 0; i < pred.size(); i++) acc += (pred[i] - ref[i]) * (pred[i] - ref[i]);
  return std::sqrt(acc / static_cast<double>(pred.size()));
}

double rmse(ImageSeries const &pred, ImageSeries const &ref)
{
  require_same(pred, ref);
  double      acc = 0;
  std::size_t n = 0;
  for (std::size_t f = 0; f < pred.frames.size(); f++) {
    auto const &p = pred.frames[f];
    auto const &r = ref.frames[f];
    for (std::size_t i = 0; i < p.size(); i++) acc += (p[i] - r[i]) * (p[i] - r[i]);
    n += p.size();
  }
  return std::sqrt(acc / static_cast<double>(n));
}

namespace {

double psnr_from_rmse(double e, double max_i)
{
  if (e == 0.0) return std::numeric_limits<double>::infinity();
  return 20.0 * std::log10(max_i / e);
}

} // namespace

double psnr(RealImage const &pred, RealImage const &ref, QualityConfig const &cfg)
{
  return psnr_from_rmse(rmse(pred, ref), cfg.max_i);
}

double psnr(ImageSeries const &pred, ImageSeries const &ref, QualityConfig const &cfg)
{
  return psnr_from_rmse(rmse(pred, ref), cfg.max_i);
}

SsimTerms ssim_terms(RealImage const &pred, RealImage const &ref, QualityConfig const &cfg)
{
  require_same(pred, ref);
  cfg.validate();
  int const win = cfg.ssim_window;
  if (pred.width() < win || pred.height() < win) throw Error("image smaller than ssim window");

  auto const   w = gaussian_window(win, cfg.ssim_sigma);
  double const c1 = std::pow(cfg.k1 * cfg.dynamic_range, 2);
  double const c2 = std::pow(cfg.k2 * cfg.dynamic_range, 2);

  double    ssim_sum = 0, cs_sum = 0;
  int const nx = pred.width() - win + 1, ny = pred.height() - win + 1;
  for (int oy = 0; oy < ny; oy++) {
    for (int ox = 0; ox < nx; ox++) {
      double mx = 0, my = 0;
      for (int j = 0; j < win; j++) {
        for (int i = 0; i < win; i++) {
          double const g = w[static_cast<std::size_t>(i)] * w[static_cast<std::size_t>(j)];
          mx += g * pred(ox + i, oy + j);
          my += g * ref(ox + i, oy + j);
        }
      }
      double vx = 0, vy = 0, cxy = 0;
      for (int j = 0; j < win; j++) {
        for (int i = 0; i < win; i++) {
          double const g = w[static_cast<std::size_t>(i)] * w[static_cast<std::size_t>(j)];
          double const dx = pred(ox + i, oy + j) - mx;
          double const dy = ref(ox + i, oy + j) - my;
          vx += g * dx * dx;
          vy += g * dy * dy;
          cxy += g * dx * dy;
        }
      }
      double const cs = (2 * cxy + c2) / (vx + vy + c2);
      double const l = (2 * mx * my + c1) / (mx * mx + my * my + c1);
      ssim_sum += l * cs;
      cs_sum += cs;
    }
  }
  double const count = static_cast<double>(nx) * ny;
  return {ssim_sum / count, cs_sum / count};
}

double ssim(RealImage const &pred, RealImage const &ref, QualityConfig const &cfg)
{
  return ssim_terms(pred, ref, cfg).ssim;
}

double ssim(ImageSeries const &pred, ImageSeries const &ref, QualityConfig const &cfg)
{
  require_same(pred, ref);
  double acc = 0;
  for (std::size_t f = 0; f < pred.frames.size(); f++) acc += ssim(pred.frames[f], ref.frames[f], cfg);
  return acc / static_cast<double>(pred.frames.size());
}

RealImage downsample2(RealImage const &img)
{
  RealImage out(img.width() / 2, img.height() / 2);
  for (int y = 0; y < out.height(); y++) {
    for (int x = 0; x < out.width(); x++) {
      out(x, y) = 0.25 * (img(2 * x, 2 * y) + img(2 * x + 1, 2 * y) + img(2 * x, 2 * y + 1) + img(2 * x + 1, 2 * y + 1));
    }
  }
  return out;
}

int msssim_scales(int width, int height, QualityConfig const &cfg)
{
  int scales = 0;
  int w = width, h = height;
  while (scales < static_cast<int>(cfg.msssim_weights.size()) && w >= cfg.ssim_window && h >= cfg.ssim_window) {
    scales++;
    w /= 2;
    h /= 2;
  }
  return scales;
}

double msssim(RealImage const &pred, RealImage const &ref, QualityConfig const &cfg)
{
  require_same(pred, ref);
  int const scales = msssim_scales(pred.width(), pred.height(), cfg);
  if (scales == 0) throw Error("image smaller than ssim window");

  double const total = std::accumulate(cfg.msssim_weights.begin(), cfg.msssim_weights.begin() + scales, 0.0);
  RealImage    a = pred, b = ref;
  double       result = 1.0;
  for (int s = 0; s < scales; s++) {
    auto const   t = ssim_terms(a, b, cfg);
    double const w = cfg.msssim_weights[static_cast<std::size_t>(s)] / total;
    double const term = s + 1 == scales ? t.ssim : t.cs;
    result *= std::pow(std::max(term, 0.0), w);
    if (s + 1 < scales) {
      a = downsample2(a);
      b = downsample2(b);
    }
  }
  return result;
}

double msssim(ImageSeries const &pred, ImageSeries const &ref, QualityConfig const &cfg)
{
  require_same(pred, ref);
  double acc = 0;
  for (std::size_t f = 0; f < pred.frames.size(); f++) acc += msssim(pred.frames[f], ref.frames[f], cfg);
  return acc / static_cast<double>(pred.frames.size());
}

Box bounding_box(Mask const &m)
{
  Box  b{m.width(), m.height(), 0, 0};
  bool any = false;
  for (int y = 0; y < m.height(); y++) {
    for (int x = 0; x < m.width(); x++) {
      if (!m(x, y)) continue;
      any = true;
      b.x0 = std::min(b.x0, x);
      b.y0 = std::min(b.y0, y);
      b.x1 = std::max(b.x1, x + 1);
      b.y1 = std::max(b.y1, y + 1);
    }
  }
  return any ? b : Box{};
}

double box_iou(Box const &a, Box const &b)
{
  Box const  inter{std::max(a.x0, b.x0), std::max(a.y0, b.y0), std::min(a.x1, b.x1), std::min(a.y1, b.y1)};
  long const i = inter.area();
  long const u = a.area() + b.area() - i;
  return u > 0 ? static_cast<double>(i) / static_cast<double>(u) : 0.0;
}

double mask_iou(Mask const &a, Mask const &b)
{
  if (!a.same_shape(b)) throw Error("mask shape mismatch");
  long inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.size(); i++) {
    bool const pa = a[i] != 0, pb = b[i] != 0;
    inter += pa && pb;
    uni += pa || pb;
  }
  return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

namespace {

Counts greedy_match(SegSample const &s, double threshold, bool use_masks)
{
  std::vector<std::size_t> order(s.predicted.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return s.predicted[a].confidence > s.predicted[b].confidence;
  });

  std::vector<bool> taken(s.truth.size(), false);
  Counts            c;
  for (auto pi : order) {
    auto const &p = s.predicted[pi];
    double      best = -1;
    std::size_t best_gt = 0;
    for (std::size_t g = 0; g < s.truth.size(); g++) {
      if (taken[g]) continue;
      double const iou = use_masks ? mask_iou(p.mask, s.truth[g].mask) : box_iou(p.box, s.truth[g].box);
      if (iou > best) {
        best = iou;
        best_gt = g;
      }
    }
    if (best >= threshold) {
      taken[best_gt] = true;
      c.tp++;
    }
    else {
      c.fp++;
    }
  }
  c.fn = static_cast<int>(std::count(taken.begin(), taken.end(), false));
  return c;
}

} // namespace

MatchCounts match_and_count(SegSample const &sample, double iou_threshold)
{
  return {greedy_match(sample, iou_threshold, false), greedy_match(sample, iou_threshold, true)};
}

Prf prf_dice(Counts const &c)
{
  if (c.tp < 0 || c.fp < 0 || c.fn < 0) throw Error("counts must be non-negative");
  Prf r;
  if (c.tp + c.fp > 0) {
    r.precision = static_cast<double>(c.tp) / (c.tp + c.fp);
    r.precision_defined = true;
  }
  if (c.tp + c.fn > 0) {
    r.recall = static_cast<double>(c.tp) / (c.tp + c.fn);
    r.recall_defined = true;
  }
  if (c.tp + c.fp + c.fn > 0) {
    r.dice = c.tp / (c.tp + 0.5 * (c.fp + c.fn));
    r.dice_defined = true;
  }
  return r;
}

Mask boundary(Mask const &m)
{
  Mask out(m.width(), m.height());
  auto bg = [&](int x, int y) { return x < 0 || y < 0 || x >= m.width() || y >= m.height() || !m(x, y); };
  for (int y = 0; y < m.height(); y++) {
    for (int x = 0; x < m.width(); x++) {
      if (m(x, y) && (bg(x - 1, y) || bg(x + 1, y) || bg(x, y - 1) || bg(x, y + 1))) out(x, y) = 1;
    }
  }
  return out;
}

namespace {

// Felzenszwalb & Huttenlocher lower envelope of parabolas, in place.
void distance_1d(std::vector<double> &f)
{
  auto const          n = f.size();
  std::vector<double> d(n), z(n + 1);
  std::vector<int>    v(n);
  double const        inf = std::numeric_limits<double>::infinity();
  int                 k = -1;
  for (std::size_t q = 0; q < n; q++) {
    if (f[q] == inf) continue;
    double const qd = static_cast<double>(q);
    while (k >= 0) {
      double const vk = v[static_cast<std::size_t>(k)];
      double const s = ((f[q] + qd * qd) - (f[static_cast<std::size_t>(vk)] + vk * vk)) / (2 * qd - 2 * vk);
      if (s <= z[static_cast<std::size_t>(k)]) {
        k--;
      }
      else {
        break;
      }
    }
    k++;
    v[static_cast<std::size_t>(k)] = static_cast<int>(q);
    if (k == 0) {
      z[0] = -inf;
    }
    else {
      double const vp = v[static_cast<std::size_t>(k - 1)];
      z[static_cast<std::size_t>(k)] = ((f[q] + qd * qd) - (f[static_cast<std::size_t>(vp)] + vp * vp)) / (2 * qd - 2 * vp);
    }
    z[static_cast<std::size_t>(k + 1)] = inf;
  }
  if (k < 0) return; // no sites on this line
  int j = 0;
  for (std::size_t q = 0; q < n; q++) {
    while (z[static_cast<std::size_t>(j + 1)] < static_cast<double>(q)) j++;
    double const dq = static_cast<double>(q) - v[static_cast<std::size_t>(j)];
    d[q] = dq * dq + f[static_cast<std::size_t>(v[static_cast<std::size_t>(j)])];
  }
  f = std::move(d);
}

} // namespace

Grid<double> squared_distance_transform(Mask const &sites)
{
  double const inf = std::numeric_limits<double>::infinity();
  Grid<double> dt(sites.width(), sites.height(), inf);
  for (std::size_t i = 0; i < sites.size(); i++) {
    if (sites[i]) dt[i] = 0.0;
  }
  std::vector<double> line;
  for (int x = 0; x < dt.width(); x++) {
    line.resize(static_cast<std::size_t>(dt.height()));
    for (int y = 0; y < dt.height(); y++) line[static_cast<std::size_t>(y)] = dt(x, y);
    distance_1d(line);
    for (int y = 0; y < dt.height(); y++) dt(x, y) = line[static_cast<std::size_t>(y)];
  }
  for (int y = 0; y < dt.height(); y++) {
    line.resize(static_cast<std::size_t>(dt.width()));
    for (int x = 0; x < dt.width(); x++) line[static_cast<std::size_t>(x)] = dt(x, y);
    distance_1d(line);
    for (int x = 0; x < dt.width(); x++) dt(x, y) = line[static_cast<std::size_t>(x)];
  }
  return dt;
}

namespace {

double directed_p95(Mask const &from, Grid<double> const &to_dt)
{
  std::vector<double> d;
  for (std::size_t i = 0; i < from.size(); i++) {
    if (from[i]) d.push_back(std::sqrt(to_dt[i]));
  }
  std::sort(d.begin(), d.end());
  std::size_t const rank = (95 * d.size() + 99) / 100; // ceil(0.95 n)
  return d[std::max<std::size_t>(rank, 1) - 1];
}

} // namespace

double hd95(Mask const &a, Mask const &b, double spacing_mm)
{
  if (!a.same_shape(b)) throw Error("mask shape mismatch");
  auto nonempty = [](Mask const &m) { return std::any_of(m.values().begin(), m.values().end(), [](auto v) { return v != 0; }); };
  if (!nonempty(a) || !nonempty(b)) throw Error("hd95 requires non-empty masks");
  auto const ba = boundary(a), bb = boundary(b);
  auto const da = squared_distance_transform(ba), db = squared_distance_transform(bb);
  return std::max(directed_p95(ba, db), directed_p95(bb, da)) * spacing_mm;
}

} // namespace rc4d
