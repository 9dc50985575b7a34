#pragma once

#include <memory>
#include <span>
#include <vector>

#include "rc4d/image.hpp"
#include "rc4d/trajectory.hpp"

namespace rc4d {

struct GriddingConfig
{
  double oversampling = 2.0;
  int    kernel_width = 4;

  // Beatty, Nishimura & Pauly (2005): pi * sqrt(W^2/s^2 (s - 1/2)^2 - 0.8)
  double kernel_beta() const;
  int    grid_size(int matrix) const; // even, >= oversampling * matrix
  void   validate() const;
};

// Radial samples, spoke-major, laid out as plan.kpoints().
struct SpokeSet
{
  SpokePlan            plan;
  std::vector<Complex> samples;

  Complex       &at(int spoke, int sample) { return samples[index(spoke, sample)]; }
  Complex const &at(int spoke, int sample) const { return samples[index(spoke, sample)]; }
  void           validate() const;

private:
  std::size_t index(int spoke, int sample) const
  {
    return static_cast<std::size_t>(spoke) * static_cast<std::size_t>(plan.samples_per_spoke()) +
           static_cast<std::size_t>(sample);
  }
};

// Kaiser-Bessel gridding nuFFT for one spoke plan. The forward operator
// approximates
//   y_j = sum_n x_n exp(-i 2 pi k_j . r_n),  r_n = pixel_position(n)
// and adjoint() without weights is its exact conjugate transpose.
// Construction precomputes kernel taps and the FFT plan; const methods are
// safe to call concurrently.
class NufftOperator
{
public:
  NufftOperator(SpokePlan plan, GriddingConfig cfg = {});
  ~NufftOperator();
  NufftOperator(NufftOperator &&) noexcept;
  NufftOperator &operator=(NufftOperator &&) noexcept;

  SpokePlan const      &plan() const noexcept { return plan_; }
  GriddingConfig const &config() const noexcept { return cfg_; }
  int                   matrix() const noexcept { return plan_.matrix; }

  SpokeSet forward(ComplexImage const &image) const;
  // Same as forward() but writes into `samples` (size plan().n_samples()).
  void forward_into(ComplexImage const &image, std::span<Complex> samples) const;

  // Exact adjoint of forward().
  ComplexImage adjoint(std::span<Complex const> samples) const;
  // Density-compensated gridding reconstruction, scaled so that a fully
  // sampled acquisition of an image returns approximately that image.
  ComplexImage reconstruct(std::span<Complex const> samples, std::span<double const> weights) const;

private:
  struct Impl;
  SpokePlan             plan_;
  GriddingConfig        cfg_;
  std::unique_ptr<Impl> impl_;
};

SpokeSet forward(ComplexImage const &image, SpokePlan const &plan, GriddingConfig const &cfg = {});

// Exact adjoint when `weights` is empty; otherwise the density-compensated,
// deapodized, cropped gridding reconstruction.
ComplexImage adjoint(SpokeSet const &data, GriddingConfig const &cfg = {}, std::span<double const> weights = {});

// Literal non-uniform DFT. O(N^2 * samples); meant for N <= 32.
SpokeSet direct_dft(ComplexImage const &image, SpokePlan const &plan);

// k-space area represented by each sample, in (cycles/FOV)^2: a ramp
// |k| * dk * pi / n_spokes, with the centre sample getting pi dk^2 / (4 n_spokes).
std::vector<double> sample_areas(SpokePlan const &plan);

// sample_areas() rescaled so the weights sum to the sample count.
std::vector<double> density_weights(SpokePlan const &plan);

} // namespace rc4d
