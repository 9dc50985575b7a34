#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "rc4d/image.hpp"

namespace rc4d {

struct KPoint
{
  double kx = 0; // cycles per field of view
  double ky = 0;
};

// Filled ellipse in normalized field-of-view units ([-0.5, 0.5] per axis).
// (dx, dy) is the displacement per unit respiratory waveform value.
struct Ellipse
{
  double      cx = 0;
  double      cy = 0;
  double      a = 0;
  double      b = 0;
  double      rot = 0; // radians
  double      intensity = 0;
  double      dx = 0;
  double      dy = 0;
  std::string name; // optional label, "lesion" marks the evaluation target

  bool contains(double x, double y, double waveform_value) const noexcept;
  // Half-widths of the axis-aligned bounding box.
  std::array<double, 2> extent() const noexcept;
};

struct PhantomSpec
{
  std::vector<Ellipse> ellipses;
  int                  matrix = 64;

  void validate() const;
  // Index of the ellipse named `name`, or -1.
  int find(std::string const &name) const noexcept;
};

// Body outline, liver with an embedded lesion, kidney, spine and aorta.
// Liver and lesion move together in y; peak composite intensity is 0.9.
PhantomSpec liver_phantom(int matrix);

// Throws "motion exceeds FOV" when any displaced ellipse leaves [-0.5, 0.5].
ComplexImage rasterize(PhantomSpec const &spec, double waveform_value);

// Closed-form Fourier transform of the displaced scene,
//   F(k) = sum_e I_e * pi*a*b * jinc(|diag(a,b) R^T k|) * exp(-i2pi k.c_e)
// where jinc(r) = 2 J1(2 pi r) / (2 pi r). F(0) is the scene integral.
std::vector<Complex> analytic_kspace(PhantomSpec const &spec, double waveform_value, std::span<KPoint const> kpoints);

// One real frame per representative waveform amplitude.
ImageSeries render_series(PhantomSpec const &spec, std::span<double const> phase_values);

// Binary support of a single ellipse after displacement.
Mask ellipse_mask(Ellipse const &e, int matrix, double waveform_value);

nlohmann::json to_json(PhantomSpec const &spec);
PhantomSpec    phantom_from_json(nlohmann::json const &j);

} // namespace rc4d
