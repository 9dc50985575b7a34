#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "rc4d/error.hpp"

namespace rc4d {

using Complex = std::complex<double>;

// Row-major 2-D array. x runs along a row, y selects the row.
template <typename T>
class Grid
{
public:
  Grid() = default;
  Grid(int width, int height, T fill = T{})
    : width_(width)
    , height_(height)
    , data_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill)
  {
    if (width < 0 || height < 0) throw Error("negative grid dimension");
  }
  explicit Grid(int n, T fill = T{}) : Grid(n, n, fill) {}

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool square() const noexcept { return width_ == height_; }

  T &operator()(int x, int y) { return data_[index(x, y)]; }
  T const &operator()(int x, int y) const { return data_[index(x, y)]; }
  T &operator[](std::size_t i) { return data_[i]; }
  T const &operator[](std::size_t i) const { return data_[i]; }

  std::span<T> values() noexcept { return data_; }
  std::span<T const> values() const noexcept { return data_; }
  std::vector<T> &storage() noexcept { return data_; }
  std::vector<T> const &storage() const noexcept { return data_; }

  bool same_shape(Grid const &o) const noexcept { return width_ == o.width_ && height_ == o.height_; }
  friend bool operator==(Grid const &, Grid const &) = default;

private:
  std::size_t index(int x, int y) const noexcept
  {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int            width_ = 0;
  int            height_ = 0;
  std::vector<T> data_;
};

using ComplexImage = Grid<Complex>;
using RealImage = Grid<double>;
using Mask = Grid<unsigned char>;

// A respiratory-resolved 2D+t stack; every frame shares one shape.
struct ImageSeries
{
  std::vector<RealImage> frames;

  int  n_frames() const noexcept { return static_cast<int>(frames.size()); }
  int  width() const noexcept { return frames.empty() ? 0 : frames.front().width(); }
  int  height() const noexcept { return frames.empty() ? 0 : frames.front().height(); }
  bool consistent() const noexcept
  {
    for (auto const &f : frames) {
      if (!f.same_shape(frames.front())) return false;
    }
    return true;
  }
};

RealImage    magnitude(ComplexImage const &img);
ComplexImage to_complex(RealImage const &img);

// Normalized field-of-view coordinate of pixel index i on an n-pixel axis.
// The pixel at i = n/2 sits exactly at the origin.
inline double pixel_position(int i, int n) noexcept { return (i - n / 2) / static_cast<double>(n); }

} // namespace rc4d
