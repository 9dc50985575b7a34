#include "rc4d/phantom.hpp"

#include <cmath>
#include <numbers>

namespace rc4d {

namespace {

double jinc(double r)
{
  double const x = 2.0 * std::numbers::pi * r;
  if (std::abs(x) < 1e-8) return 1.0 - x * x / 8.0;
  return 2.0 * std::cyl_bessel_j(1.0, x) / x;
}

void check_fov(PhantomSpec const &spec, double waveform_value)
{
  for (auto const &e : spec.ellipses) {
    auto const   ext = e.extent();
    double const cx = e.cx + e.dx * waveform_value;
    double const cy = e.cy + e.dy * waveform_value;
    if (cx - ext[0] < -0.5 || cx + ext[0] > 0.5 || cy - ext[1] < -0.5 || cy + ext[1] > 0.5) {
      throw Error("motion exceeds FOV");
    }
  }
}

} // namespace

bool Ellipse::contains(double x, double y, double waveform_value) const noexcept
{
  double const px = x - (cx + dx * waveform_value);
  double const py = y - (cy + dy * waveform_value);
  double const c = std::cos(rot), s = std::sin(rot);
  double const u = (c * px + s * py) / a;
  double const v = (-s * px + c * py) / b;
  return u * u + v * v <= 1.0;
}

std::array<double, 2> Ellipse::extent() const noexcept
{
  double const c = std::cos(rot), s = std::sin(rot);
  return {std::sqrt(a * a * c * c + b * b * s * s), std::sqrt(a * a * s * s + b * b * c * c)};
}

void PhantomSpec::validate() const
{
  if (matrix < 8) throw Error("phantom matrix must be at least 8");
  for (auto const &e : ellipses) {
    if (!(e.a > 0) || !(e.b > 0)) throw Error("ellipse semi-axes must be positive");
  }
  check_fov(*this, 0.0);
}

int PhantomSpec::find(std::string const &name) const noexcept
{
  for (std::size_t i = 0; i < ellipses.size(); i++) {
    if (ellipses[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

PhantomSpec liver_phantom(int matrix)
{
  PhantomSpec spec;
  spec.matrix = matrix;
  spec.ellipses = {
    {0.00, 0.00, 0.42, 0.32, 0.0, 0.20, 0.0, 0.010, "body"},
    {-0.12, 0.06, 0.20, 0.14, 0.30, 0.35, 0.0, 0.040, "liver"},
    {-0.10, 0.07, 0.045, 0.04, 0.0, 0.35, 0.0, 0.040, "lesion"},
    {0.17, -0.06, 0.06, 0.09, -0.4, 0.25, 0.0, 0.020, "kidney"},
    {0.00, -0.22, 0.05, 0.05, 0.0, 0.40, 0.0, 0.0, "spine"},
    {0.06, -0.14, 0.025, 0.025, 0.0, 0.50, 0.0, 0.0, "aorta"},
  };
  return spec;
}

ComplexImage rasterize(PhantomSpec const &spec, double waveform_value)
{
  spec.validate();
  check_fov(spec, waveform_value);
  int const    n = spec.matrix;
  ComplexImage img(n);
  for (int iy = 0; iy < n; iy++) {
    double const y = pixel_position(iy, n);
    for (int ix = 0; ix < n; ix++) {
      double const x = pixel_position(ix, n);
      double       v = 0;
      for (auto const &e : spec.ellipses) {
        if (e.contains(x, y, waveform_value)) v += e.intensity;
      }
      img(ix, iy) = v;
    }
  }
  return img;
}

std::vector<Complex> analytic_kspace(PhantomSpec const &spec, double waveform_value, std::span<KPoint const> kpoints)
{
  std::vector<Complex> out(kpoints.size());
  for (auto const &e : spec.ellipses) {
    double const c = std::cos(e.rot), s = std::sin(e.rot);
    double const cx = e.cx + e.dx * waveform_value;
    double const cy = e.cy + e.dy * waveform_value;
    double const area = std::numbers::pi * e.a * e.b;
    for (std::size_t i = 0; i < kpoints.size(); i++) {
      auto const [kx, ky] = kpoints[i];
      // k rotated into the ellipse frame, then scaled by the semi-axes
      double const ku = e.a * (c * kx + s * ky);
      double const kv = e.b * (-s * kx + c * ky);
      double const phase = -2.0 * std::numbers::pi * (kx * cx + ky * cy);
      out[i] += e.intensity * area * jinc(std::hypot(ku, kv)) * std::polar(1.0, phase);
    }
  }
  return out;
}

ImageSeries render_series(PhantomSpec const &spec, std::span<double const> phase_values)
{
  ImageSeries series;
  series.frames.reserve(phase_values.size());
  for (double v : phase_values) {
    series.frames.push_back(magnitude(rasterize(spec, v)));
  }
  return series;
}

Mask ellipse_mask(Ellipse const &e, int matrix, double waveform_value)
{
  Mask m(matrix);
  for (int iy = 0; iy < matrix; iy++) {
    for (int ix = 0; ix < matrix; ix++) {
      m(ix, iy) = e.contains(pixel_position(ix, matrix), pixel_position(iy, matrix), waveform_value) ? 1 : 0;
    }
  }
  return m;
}

nlohmann::json to_json(PhantomSpec const &spec)
{
  nlohmann::json j;
  j["matrix"] = spec.matrix;
  j["ellipses"] = nlohmann::json::array();
  for (auto const &e : spec.ellipses) {
    nlohmann::json je = {{"cx", e.cx}, {"cy", e.cy}, {"a", e.a}, {"b", e.b}, {"rot", e.rot},
                         {"intensity", e.intensity}, {"dx", e.dx}, {"dy", e.dy}};
    if (!e.name.empty()) je["name"] = e.name;
    j["ellipses"].push_back(je);
  }
  return j;
}

PhantomSpec phantom_from_json(nlohmann::json const &j)
{
  auto need = [](nlohmann::json const &obj, char const *key, std::string const &path) -> nlohmann::json const & {
    if (!obj.is_object() || !obj.contains(key)) throw ValidationError(path + key, "missing key '" + path + key + "'");
    return obj.at(key);
  };
  auto number = [&](nlohmann::json const &obj, char const *key, std::string const &path) {
    auto const &v = need(obj, key, path);
    if (!v.is_number()) throw ValidationError(path + key, "key '" + path + key + "' must be a number");
    return v.get<double>();
  };

  PhantomSpec spec;
  auto const &m = need(j, "matrix", "");
  if (!m.is_number_integer()) throw ValidationError("matrix", "key 'matrix' must be an integer");
  spec.matrix = m.get<int>();
  auto const &list = need(j, "ellipses", "");
  if (!list.is_array()) throw ValidationError("ellipses", "key 'ellipses' must be an array");
  for (std::size_t i = 0; i < list.size(); i++) {
    auto const path = "ellipses[" + std::to_string(i) + "].";
    auto const &je = list[i];
    Ellipse     e;
    e.cx = number(je, "cx", path);
    e.cy = number(je, "cy", path);
    e.a = number(je, "a", path);
    e.b = number(je, "b", path);
    e.rot = number(je, "rot", path);
    e.intensity = number(je, "intensity", path);
    e.dx = number(je, "dx", path);
    e.dy = number(je, "dy", path);
    if (je.contains("name")) e.name = je.at("name").get<std::string>();
    spec.ellipses.push_back(std::move(e));
  }
  return spec;
}

} // namespace rc4d
