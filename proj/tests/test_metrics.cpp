#include "rc4d/metrics.hpp"

#include "oracles.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>

using namespace rc4d;
using Catch::Approx;

namespace {

RealImage constant(int n, double v) { return RealImage(n, n, v); }

RealImage random_image(int w, int h, unsigned seed)
{
  std::mt19937                           rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RealImage                              img(w, h);
  for (auto &v : img.values()) v = u(rng);
  return img;
}

// b = 0.7 a + 0.3 noise, smoothed a little so the pair has structure at coarse scales.
std::pair<RealImage, RealImage> correlated_pair(int n, unsigned seed)
{
  auto const a0 = random_image(n, n, seed), noise = random_image(n, n, seed + 1);
  RealImage  a(n), b(n);
  for (int y = 0; y < n; y++) {
    for (int x = 0; x < n; x++) {
      double s = 0;
      int    c = 0;
      for (int dy = -1; dy <= 1; dy++) {
        for (int dx = -1; dx <= 1; dx++) {
          int const xx = std::clamp(x + dx, 0, n - 1), yy = std::clamp(y + dy, 0, n - 1);
          s += a0(xx, yy);
          c++;
        }
      }
      a(x, y) = s / c;
      b(x, y) = 0.7 * a(x, y) + 0.3 * noise(x, y);
    }
  }
  return {a, b};
}

// Direct per-window evaluation of the local statistic with an 11x11
// sigma 1.5 Gaussian, over every window fully inside the image.
std::pair<double, double> ssim_oracle(RealImage const &x, RealImage const &y)
{
  int const    win = 11;
  double const c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  double       w[win][win], total = 0;
  for (int i = 0; i < win; i++) {
    for (int j = 0; j < win; j++) {
      w[i][j] = std::exp(-((i - 5.0) * (i - 5.0) + (j - 5.0) * (j - 5.0)) / (2 * 1.5 * 1.5));
      total += w[i][j];
    }
  }
  double ssum = 0, cssum = 0;
  int    count = 0;
  for (int oy = 0; oy + win <= x.height(); oy++) {
    for (int ox = 0; ox + win <= x.width(); ox++) {
      double mx = 0, my = 0;
      for (int i = 0; i < win; i++) {
        for (int j = 0; j < win; j++) {
          mx += w[i][j] / total * x(ox + j, oy + i);
          my += w[i][j] / total * y(ox + j, oy + i);
        }
      }
      double vx = 0, vy = 0, cxy = 0;
      for (int i = 0; i < win; i++) {
        for (int j = 0; j < win; j++) {
          double const dx = x(ox + j, oy + i) - mx, dy = y(ox + j, oy + i) - my;
          vx += w[i][j] / total * dx * dx;
          vy += w[i][j] / total * dy * dy;
          cxy += w[i][j] / total * dx * dy;
        }
      }
      double const l = (2 * mx * my + c1) / (mx * mx + my * my + c1);
      double const cs = (2 * cxy + c2) / (vx + vy + c2);
      ssum += l * cs;
      cssum += cs;
      count++;
    }
  }
  return {ssum / count, cssum / count};
}

RealImage pool(RealImage const &img)
{
  RealImage out(img.width() / 2, img.height() / 2);
  for (int y = 0; y < out.height(); y++) {
    for (int x = 0; x < out.width(); x++) {
      out(x, y) = 0.25 * (img(2 * x, 2 * y) + img(2 * x + 1, 2 * y) + img(2 * x, 2 * y + 1) + img(2 * x + 1, 2 * y + 1));
    }
  }
  return out;
}

double msssim_oracle(RealImage x, RealImage y)
{
  std::vector<double> const weights{0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
  int                       m = 0;
  for (int s = std::min(x.width(), x.height()); s >= 11 && m < 5; s /= 2) m++;
  double wsum = 0;
  for (int j = 0; j < m; j++) wsum += weights[static_cast<std::size_t>(j)];
  double result = 1;
  for (int j = 0; j < m; j++) {
    auto const [s, cs] = ssim_oracle(x, y);
    double const term = j == m - 1 ? s : cs;
    result *= std::pow(std::max(0.0, term), weights[static_cast<std::size_t>(j)] / wsum);
    x = pool(x);
    y = pool(y);
  }
  return result;
}

Instance instance(Mask m, double confidence = 1.0)
{
  Box const b = bounding_box(m);
  return {std::move(m), b, confidence};
}

Mask convex_blob(int n, std::mt19937 &rng)
{
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double const cx = 12 + 24 * u(rng), cy = 12 + 24 * u(rng), a = 3 + 8 * u(rng), b = 3 + 8 * u(rng), t = 3 * u(rng);
  Mask         m(n);
  for (int y = 0; y < n; y++) {
    for (int x = 0; x < n; x++) {
      double const dx = x - cx, dy = y - cy;
      double const p = dx * std::cos(t) + dy * std::sin(t), q = -dx * std::sin(t) + dy * std::cos(t);
      m(x, y) = (p * p) / (a * a) + (q * q) / (b * b) <= 1.0;
    }
  }
  return m;
}

} // namespace

TEST_CASE("rmse and psnr", "[metrics]")
{
  auto const zero = constant(16, 0.0);
  CHECK(rmse(zero, zero) == 0.0);
  CHECK(rmse(zero, constant(16, 1.0)) == 1.0);
  CHECK(rmse(constant(16, 0.6), constant(16, 0.5)) == Approx(0.1).epsilon(1e-12));
  CHECK(psnr(constant(16, 0.1), zero) == Approx(20.0).epsilon(1e-12));
  CHECK(psnr(constant(16, 0.5), zero) == Approx(6.0206).margin(5e-5));
  CHECK(std::isinf(psnr(zero, zero)));
  CHECK_THROWS(rmse(zero, constant(8, 0.0)));

  ImageSeries a{{zero, constant(16, 0.2)}}, b{{zero, zero}};
  CHECK(rmse(a, b) == Approx(std::sqrt(0.02)));
}

TEST_CASE("ssim identities", "[metrics]")
{
  auto const a = random_image(32, 24, 1), b = random_image(32, 24, 2);
  CHECK(ssim(a, a) == Approx(1.0).epsilon(1e-12));
  CHECK(ssim(a, b) == Approx(ssim(b, a)).epsilon(1e-12));
  CHECK(ssim(a, b) < 0.5);

  for (auto [u, v] : {std::pair{0.2, 0.7}, std::pair{0.0, 1.0}, std::pair{0.5, 0.5}}) {
    double const c1 = 1e-4;
    CHECK(ssim(constant(16, u), constant(16, v)) == Approx((2 * u * v + c1) / (u * u + v * v + c1)).epsilon(1e-12));
  }
  CHECK_THROWS(ssim(constant(10, 0.0), constant(10, 0.0)));
}

TEST_CASE("ssim matches the direct window oracle", "[metrics]")
{
  auto const [a, b] = correlated_pair(40, 3);
  auto const t = ssim_terms(a, b);
  auto const [s, cs] = ssim_oracle(a, b);
  CHECK(t.ssim == Approx(s).epsilon(1e-12));
  CHECK(t.cs == Approx(cs).epsilon(1e-12));
}

TEST_CASE("ms-ssim", "[metrics]")
{
  auto const [a, b] = correlated_pair(64, 5);
  CHECK(msssim(a, a) == Approx(1.0).epsilon(1e-12));
  CHECK(msssim_scales(64, 64) == 3);
  CHECK(msssim_scales(256, 256) == 5);
  CHECK(msssim_scales(16, 40) == 1);

  double const expected = msssim_oracle(a, b);
  CHECK(std::abs(msssim(a, b) - expected) < 1e-9);

  // a single feasible scale reduces to single-scale SSIM
  auto const [c, d] = correlated_pair(16, 7);
  CHECK(msssim(c, d) == Approx(ssim(c, d)).epsilon(1e-12));
  QualityConfig one;
  one.msssim_weights = {1.0};
  CHECK(msssim(a, b, one) == Approx(ssim(a, b)).epsilon(1e-12));
}

TEST_CASE("detection matching", "[metrics]")
{
  auto const gt = oracle::square(32, 5, 5, 10);

  SECTION("identical prediction")
  {
    auto const c = match_and_count({{instance(gt)}, {instance(gt)}, 1.0});
    CHECK(c.detection.tp == 1);
    CHECK(c.detection.fp == 0);
    CHECK(c.detection.fn == 0);
    CHECK(c.segmentation.tp == 1);
  }

  SECTION("no predictions")
  {
    auto const c = match_and_count({{}, {instance(gt), instance(oracle::square(32, 20, 20, 5))}, 1.0});
    CHECK(c.detection.tp == 0);
    CHECK(c.detection.fp == 0);
    CHECK(c.detection.fn == 2);
  }

  SECTION("two predictions compete for one object")
  {
    // both inside the object: 60 and 55 of its 100 pixels
    Mask p1(32), p2(32);
    for (int y = 5; y < 11; y++) {
      for (int x = 5; x < 15; x++) p1(x, y) = 1;
    }
    for (int y = 5; y < 15; y++) {
      for (int x = 5; x < 10; x++) p2(x, y) = 1;
    }
    for (int y = 5; y < 10; y++) p2(10, y) = 1;
    REQUIRE(mask_iou(p1, gt) == Approx(0.6));
    REQUIRE(mask_iou(p2, gt) == Approx(0.55));
    for (auto [c1, c2] : {std::pair{0.9, 0.8}, std::pair{0.8, 0.9}}) {
      auto const c = match_and_count({{instance(p1, c1), instance(p2, c2)}, {instance(gt)}, 1.0});
      CHECK(c.segmentation.tp == 1);
      CHECK(c.segmentation.fp == 1);
      CHECK(c.segmentation.fn == 0);
    }
  }

  SECTION("below threshold")
  {
    auto const c = match_and_count({{instance(oracle::square(32, 10, 10, 10))}, {instance(gt)}, 1.0});
    CHECK(c.detection.tp == 0);
    CHECK(c.detection.fp == 1);
    CHECK(c.detection.fn == 1);
  }

  CHECK(box_iou({0, 0, 10, 10}, {5, 0, 15, 10}) == Approx(50.0 / 150.0));
  CHECK(box_iou({0, 0, 2, 2}, {5, 5, 7, 7}) == 0.0);
  Box const b = bounding_box(gt);
  CHECK(b.x0 == 5);
  CHECK(b.y0 == 5);
  CHECK(b.x1 == 15);
  CHECK(b.y1 == 15);
}

TEST_CASE("precision, recall and dice", "[metrics]")
{
  auto const a = prf_dice({8, 2, 2});
  CHECK(a.precision == Approx(0.8));
  CHECK(a.recall == Approx(0.8));
  CHECK(a.dice == Approx(0.8));

  auto const b = prf_dice({5, 0, 0});
  CHECK(b.precision == 1.0);
  CHECK(b.recall == 1.0);
  CHECK(b.dice == 1.0);

  auto const c = prf_dice({0, 3, 1});
  CHECK(c.precision == 0.0);
  CHECK(c.recall == 0.0);
  CHECK(c.dice == 0.0);

  auto const d = prf_dice({0, 0, 0});
  CHECK_FALSE(d.precision_defined);
  CHECK_FALSE(d.recall_defined);
  CHECK_FALSE(d.dice_defined);

  // dice is the harmonic mean of precision and recall
  for (Counts k : {Counts{3, 1, 4}, Counts{10, 7, 2}, Counts{1, 0, 9}}) {
    auto const p = prf_dice(k);
    CHECK(p.dice == Approx(2 * p.precision * p.recall / (p.precision + p.recall)));
  }
}

TEST_CASE("hd95", "[metrics]")
{
  auto const a = oracle::square(40, 10, 10, 10);
  CHECK(hd95(a, a) == 0.0);

  for (auto [dx, dy] : {std::pair{3, 0}, std::pair{0, 5}, std::pair{2, 7}, std::pair{11, 1}}) {
    auto const b = oracle::square(40, 10 + dx, 10 + dy, 10);
    INFO("shift " << dx << "," << dy);
    CHECK(hd95(a, b) == oracle::hd95(a, b));
    CHECK(hd95(a, b) == hd95(b, a));
    CHECK(hd95(a, b, 1.3) == Approx(1.3 * oracle::hd95(a, b)));
  }

  CHECK_THROWS(hd95(a, Mask(40)));
  CHECK_THROWS(hd95(Mask(40), a));
}

TEST_CASE("hd95 on random shapes", "[metrics]")
{
  std::mt19937 rng(17);
  double const diag = std::sqrt(2.0);
  for (int trial = 0; trial < 20; trial++) {
    auto const a = convex_blob(48, rng), b = convex_blob(48, rng), c = convex_blob(48, rng);
    CHECK(hd95(a, b) == oracle::hd95(a, b));
    CHECK(hd95(a, c) <= hd95(a, b) + hd95(b, c) + 2 * diag);

    // equivariant under flips and transposition
    Mask fa(48), fb(48), ta(48), tb(48);
    for (int y = 0; y < 48; y++) {
      for (int x = 0; x < 48; x++) {
        fa(47 - x, y) = a(x, y);
        fb(47 - x, y) = b(x, y);
        ta(y, x) = a(x, y);
        tb(y, x) = b(x, y);
      }
    }
    CHECK(hd95(fa, fb) == Approx(hd95(a, b)));
    CHECK(hd95(ta, tb) == Approx(hd95(a, b)));
  }
}

TEST_CASE("distance transform", "[metrics]")
{
  Mask sites(9, 7);
  sites(2, 3) = 1;
  sites(7, 0) = 1;
  auto const d = squared_distance_transform(sites);
  for (int y = 0; y < 7; y++) {
    for (int x = 0; x < 9; x++) {
      double const e = std::min((x - 2) * (x - 2) + (y - 3) * (y - 3), (x - 7) * (x - 7) + y * y);
      CHECK(d(x, y) == e);
    }
  }
}
