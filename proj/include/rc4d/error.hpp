#pragma once

#include <stdexcept>
#include <string>

namespace rc4d {

// Base for all library failures.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

// Malformed input (bad manifest key, inconsistent shapes in a container).
// The CLI maps this to exit code 2.
class ValidationError : public Error
{
public:
  ValidationError(std::string key, std::string const &what)
    : Error(what)
    , key_(std::move(key))
  {
  }

  std::string const &key() const noexcept { return key_; }

private:
  std::string key_;
};

} // namespace rc4d
