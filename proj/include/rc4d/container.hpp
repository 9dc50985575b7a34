#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "rc4d/image.hpp"

namespace rc4d {

enum class Role { image_series, kspace, angles, timestamps, bins, waveform };
enum class DType { f32, f64, c64, i32 };

std::string role_name(Role r);
std::string dtype_name(DType d);
std::size_t dtype_size(DType d);

using Payload = std::variant<std::vector<float>, std::vector<double>, std::vector<std::complex<float>>,
                             std::vector<std::int32_t>>;

struct Array
{
  std::string               name;
  Role                      role = Role::image_series;
  std::vector<std::int64_t> shape;
  Payload                   data;

  DType       dtype() const noexcept { return static_cast<DType>(data.index()); }
  std::size_t element_count() const noexcept;
  std::string file() const { return name + ".bin"; }

  template <typename T>
  std::vector<T> const &as() const
  {
    if (auto const *p = std::get_if<std::vector<T>>(&data)) return *p;
    throw Error("array '" + name + "' has dtype " + dtype_name(dtype()));
  }
};

// On-disk layout: <dir>/manifest.json, one <name>.bin per array (raw
// little-endian, C order; c64 is interleaved f32 real/imag) and one
// <name>.json per attached document.
struct Container
{
  std::vector<Array>                    arrays;
  nlohmann::json                        provenance = nlohmann::json::object();
  std::map<std::string, nlohmann::json> documents;

  Array const *find(std::string const &name) const noexcept;
  Array const &get(std::string const &name) const;
  void         put(Array a); // replaces an array of the same name
  void         erase(std::string const &name);
  // First image_series array with three dimensions, preferring `preferred`.
  Array const *series_array(std::string const &preferred = "recon") const noexcept;
};

inline constexpr int container_format_version = 1;

nlohmann::json manifest(Container const &c);

// Written to a sibling temporary directory, then renamed into place.
void      write_container(Container const &c, std::filesystem::path const &dir);
Container read_container(std::filesystem::path const &dir);

Array       series_to_array(std::string name, ImageSeries const &s);
ImageSeries array_to_series(Array const &a);

} // namespace rc4d
