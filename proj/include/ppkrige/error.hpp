#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ppk {

enum class ErrorKind
{
  invalid_argument,
  insufficient_data,
  singular_covariance,
  series_divergent,
  invalid_pcf,
  flat_intensity,
  undefined_r2,
  io
};

std::string_view to_string(ErrorKind kind);

//! Every failure raised by the library carries one of the kinds above so the
//! CLI can map it to an exit code without string matching.
class Error : public std::runtime_error
{
public:
  Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(what)
    , kind_(kind)
  {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what)
{
  throw Error(kind, what);
}

inline void require(bool condition, const std::string& what)
{
  if (!condition)
    fail(ErrorKind::invalid_argument, what);
}

} // namespace ppk
