#include "rc4d/image.hpp"

#include <cmath>

namespace rc4d {

RealImage magnitude(ComplexImage const &img)
{
  RealImage out(img.width(), img.height());
  for (std::size_t i = 0; i < img.size(); i++) {
    out[i] = std::abs(img[i]);
  }
  return out;
}

ComplexImage to_complex(RealImage const &img)
{
  ComplexImage out(img.width(), img.height());
  for (std::size_t i = 0; i < img.size(); i++) {
    out[i] = img[i];
  }
  return out;
}

} // namespace rc4d
