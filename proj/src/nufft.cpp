#include "rc4d/nufft.hpp"

#include <cmath>
#include <mutex>
#include <numbers>
#include <numeric>

#include <fftw3.h>

namespace rc4d {

namespace {

// FFTW planning is not thread-safe; execution on distinct arrays is.
std::mutex &fftw_planner_mutex()
{
  static std::mutex m;
  return m;
}

double kb_kernel(double t, int width, double beta)
{
  double const x = 2.0 * t / width;
  double const r = 1.0 - x * x;
  if (r < 0) return 0.0;
  return std::cyl_bessel_i(0.0, beta * std::sqrt(r));
}

// Continuous Fourier transform of kb_kernel at frequency nu (cycles per cell).
double kb_transform(double nu, int width, double beta)
{
  double const z2 = beta * beta - std::pow(std::numbers::pi * width * nu, 2);
  if (z2 > 1e-12) {
    double const z = std::sqrt(z2);
    return width * std::sinh(z) / z;
  }
  if (z2 < -1e-12) {
    double const z = std::sqrt(-z2);
    return width * std::sin(z) / z;
  }
  return width;
}

int wrap(int i, int n) noexcept
{
  int const r = i % n;
  return r < 0 ? r + n : r;
}

} // namespace

double GriddingConfig::kernel_beta() const
{
  double const w = kernel_width, s = oversampling;
  return std::numbers::pi * std::sqrt(w * w / (s * s) * (s - 0.5) * (s - 0.5) - 0.8);
}

int GriddingConfig::grid_size(int matrix) const
{
  int g = static_cast<int>(std::ceil(oversampling * matrix - 1e-9));
  if (g % 2) g += 1;
  return g;
}

void GriddingConfig::validate() const
{
  if (!(oversampling >= 1.25)) throw Error("gridding oversampling must be at least 1.25");
  if (kernel_width < 2 || kernel_width % 2) throw Error("kernel width must be even and at least 2");
}

void SpokeSet::validate() const
{
  if (samples.size() != static_cast<std::size_t>(plan.n_samples())) {
    throw Error("sample count does not match spoke plan");
  }
}

struct NufftOperator::Impl
{
  int                 n = 0; // image matrix
  int                 g = 0; // oversampled grid
  int                 width = 0;
  std::vector<int>    x0, y0;   // first grid cell touched, per sample
  std::vector<double> wx, wy;   // width taps per sample
  std::vector<double> deapod;   // 1-D, per image pixel
  fftw_plan           fwd = nullptr;
  fftw_plan           bwd = nullptr;

  ~Impl()
  {
    std::lock_guard lock(fftw_planner_mutex());
    if (fwd) fftw_destroy_plan(fwd);
    if (bwd) fftw_destroy_plan(bwd);
  }

  std::size_t cell(int x, int y) const noexcept
  {
    return static_cast<std::size_t>(wrap(y, g)) * static_cast<std::size_t>(g) + static_cast<std::size_t>(wrap(x, g));
  }
};

NufftOperator::NufftOperator(SpokePlan plan, GriddingConfig cfg)
  : plan_(std::move(plan))
  , cfg_(cfg)
  , impl_(std::make_unique<Impl>())
{
  cfg_.validate();
  if (plan_.matrix < 2) throw Error("spoke plan has no matrix size");
  auto &im = *impl_;
  im.n = plan_.matrix;
  im.g = cfg_.grid_size(im.n);
  im.width = cfg_.kernel_width;
  double const beta = cfg_.kernel_beta();
  double const to_grid = static_cast<double>(im.g) / im.n;

  auto const  kp = plan_.kpoints();
  std::size_t const w = static_cast<std::size_t>(im.width);
  im.x0.resize(kp.size());
  im.y0.resize(kp.size());
  im.wx.resize(kp.size() * w);
  im.wy.resize(kp.size() * w);
  for (std::size_t j = 0; j < kp.size(); j++) {
    double const ux = kp[j].kx * to_grid;
    double const uy = kp[j].ky * to_grid;
    // cells m with u - W/2 < m <= u + W/2
    im.x0[j] = static_cast<int>(std::floor(ux - im.width / 2.0)) + 1;
    im.y0[j] = static_cast<int>(std::floor(uy - im.width / 2.0)) + 1;
    for (std::size_t t = 0; t < w; t++) {
      im.wx[j * w + t] = kb_kernel(ux - (im.x0[j] + static_cast<int>(t)), im.width, beta);
      im.wy[j * w + t] = kb_kernel(uy - (im.y0[j] + static_cast<int>(t)), im.width, beta);
    }
  }

  im.deapod.resize(static_cast<std::size_t>(im.n));
  double peak = 0;
  for (int i = 0; i < im.n; i++) {
    im.deapod[static_cast<std::size_t>(i)] = kb_transform((i - im.n / 2) / static_cast<double>(im.g), im.width, beta);
    peak = std::max(peak, std::abs(im.deapod[static_cast<std::size_t>(i)]));
  }
  for (auto &d : im.deapod) {
    d = std::max(d, 1e-6 * peak);
  }

  std::vector<Complex> scratch(static_cast<std::size_t>(im.g) * static_cast<std::size_t>(im.g));
  auto *buf = reinterpret_cast<fftw_complex *>(scratch.data());
  std::lock_guard lock(fftw_planner_mutex());
  im.fwd = fftw_plan_dft_2d(im.g, im.g, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
  im.bwd = fftw_plan_dft_2d(im.g, im.g, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (!im.fwd || !im.bwd) throw Error("FFT planning failed");
}

NufftOperator::~NufftOperator() = default;
NufftOperator::NufftOperator(NufftOperator &&) noexcept = default;
NufftOperator &NufftOperator::operator=(NufftOperator &&) noexcept = default;

SpokeSet NufftOperator::forward(ComplexImage const &image) const
{
  SpokeSet out{plan_, std::vector<Complex>(static_cast<std::size_t>(plan_.n_samples()))};
  forward_into(image, out.samples);
  return out;
}

void NufftOperator::forward_into(ComplexImage const &image, std::span<Complex> samples) const
{
  auto const &im = *impl_;
  if (image.width() != im.n || image.height() != im.n) throw Error("image dimensions do not match spoke plan");
  if (samples.size() != static_cast<std::size_t>(plan_.n_samples())) throw Error("sample buffer size mismatch");

  std::vector<Complex> grid(static_cast<std::size_t>(im.g) * static_cast<std::size_t>(im.g));
  int const            half = im.n / 2;
  for (int iy = 0; iy < im.n; iy++) {
    for (int ix = 0; ix < im.n; ix++) {
      double const d = im.deapod[static_cast<std::size_t>(ix)] * im.deapod[static_cast<std::size_t>(iy)];
      grid[im.cell(ix - half, iy - half)] = image(ix, iy) / d;
    }
  }
  fftw_execute_dft(im.fwd, reinterpret_cast<fftw_complex *>(grid.data()), reinterpret_cast<fftw_complex *>(grid.data()));

  std::size_t const w = static_cast<std::size_t>(im.width);
  for (std::size_t j = 0; j < samples.size(); j++) {
    Complex acc = 0;
    for (std::size_t ty = 0; ty < w; ty++) {
      Complex row = 0;
      for (std::size_t tx = 0; tx < w; tx++) {
        row += im.wx[j * w + tx] * grid[im.cell(im.x0[j] + static_cast<int>(tx), im.y0[j] + static_cast<int>(ty))];
      }
      acc += im.wy[j * w + ty] * row;
    }
    samples[j] = acc;
  }
}

ComplexImage NufftOperator::adjoint(std::span<Complex const> samples) const
{
  auto const &im = *impl_;
  if (samples.size() != static_cast<std::size_t>(plan_.n_samples())) throw Error("sample count does not match spoke plan");

  std::vector<Complex> grid(static_cast<std::size_t>(im.g) * static_cast<std::size_t>(im.g));
  std::size_t const    w = static_cast<std::size_t>(im.width);
  for (std::size_t j = 0; j < samples.size(); j++) {
    for (std::size_t ty = 0; ty < w; ty++) {
      Complex const v = im.wy[j * w + ty] * samples[j];
      for (std::size_t tx = 0; tx < w; tx++) {
        grid[im.cell(im.x0[j] + static_cast<int>(tx), im.y0[j] + static_cast<int>(ty))] += im.wx[j * w + tx] * v;
      }
    }
  }
  fftw_execute_dft(im.bwd, reinterpret_cast<fftw_complex *>(grid.data()), reinterpret_cast<fftw_complex *>(grid.data()));

  ComplexImage out(im.n);
  int const    half = im.n / 2;
  for (int iy = 0; iy < im.n; iy++) {
    for (int ix = 0; ix < im.n; ix++) {
      double const d = im.deapod[static_cast<std::size_t>(ix)] * im.deapod[static_cast<std::size_t>(iy)];
      out(ix, iy) = grid[im.cell(ix - half, iy - half)] / d;
    }
  }
  return out;
}

ComplexImage NufftOperator::reconstruct(std::span<Complex const> samples, std::span<double const> weights) const
{
  if (weights.size() != samples.size()) throw Error("density weights do not match sample layout");
  std::vector<Complex> weighted(samples.size());
  for (std::size_t j = 0; j < samples.size(); j++) {
    weighted[j] = samples[j] * weights[j];
  }
  auto const   areas = sample_areas(plan_);
  double const total_area = std::accumulate(areas.begin(), areas.end(), 0.0);
  double const total_weight = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total_weight > 0)) throw Error("density weights must have a positive sum");
  double const n2 = static_cast<double>(plan_.matrix) * plan_.matrix;
  double const scale = total_area / (total_weight * n2);

  ComplexImage out = adjoint(weighted);
  for (auto &v : out.values()) {
    v *= scale;
  }
  return out;
}

SpokeSet forward(ComplexImage const &image, SpokePlan const &plan, GriddingConfig const &cfg)
{
  return NufftOperator(plan, cfg).forward(image);
}

ComplexImage adjoint(SpokeSet const &data, GriddingConfig const &cfg, std::span<double const> weights)
{
  data.validate();
  NufftOperator const op(data.plan, cfg);
  if (weights.empty()) return op.adjoint(data.samples);
  return op.reconstruct(data.samples, weights);
}

SpokeSet direct_dft(ComplexImage const &image, SpokePlan const &plan)
{
  int const n = plan.matrix;
  if (image.width() != n || image.height() != n) throw Error("image dimensions do not match spoke plan");
  auto const kp = plan.kpoints();
  SpokeSet   out{plan, std::vector<Complex>(kp.size())};
  for (std::size_t j = 0; j < kp.size(); j++) {
    Complex acc = 0;
    for (int iy = 0; iy < n; iy++) {
      double const y = pixel_position(iy, n);
      for (int ix = 0; ix < n; ix++) {
        double const x = pixel_position(ix, n);
        acc += image(ix, iy) * std::polar(1.0, -2.0 * std::numbers::pi * (kp[j].kx * x + kp[j].ky * y));
      }
    }
    out.samples[j] = acc;
  }
  return out;
}

std::vector<double> sample_areas(SpokePlan const &plan)
{
  int const    spokes = plan.n_spokes();
  double const dk = plan.samples_per_spoke() > 1 ? std::abs(plan.readout[1] - plan.readout[0]) : 1.0;
  std::vector<double> per_sample(plan.readout.size());
  for (std::size_t j = 0; j < plan.readout.size(); j++) {
    double const r = std::abs(plan.readout[j]);
    per_sample[j] = r == 0.0 ? std::numbers::pi * dk * dk / (4.0 * spokes) : r * dk * std::numbers::pi / spokes;
  }
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(plan.n_samples()));
  for (int s = 0; s < spokes; s++) {
    out.insert(out.end(), per_sample.begin(), per_sample.end());
  }
  return out;
}

std::vector<double> density_weights(SpokePlan const &plan)
{
  auto         w = sample_areas(plan);
  double const total = std::accumulate(w.begin(), w.end(), 0.0);
  if (!(total > 0)) throw Error("spoke plan has no k-space extent");
  double const scale = static_cast<double>(w.size()) / total;
  for (auto &v : w) {
    v *= scale;
  }
  return w;
}

} // namespace rc4d
