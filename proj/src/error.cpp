#include "ppkrige/error.hpp"

namespace ppk {

std::string_view to_string(ErrorKind kind)
{
  switch (kind) {
    case ErrorKind::invalid_argument:
      return "invalid-argument";
    case ErrorKind::insufficient_data:
      return "insufficient-data";
    case ErrorKind::singular_covariance:
      return "singular-covariance";
    case ErrorKind::series_divergent:
      return "series-divergent";
    case ErrorKind::invalid_pcf:
      return "invalid-pcf";
    case ErrorKind::flat_intensity:
      return "flat-intensity";
    case ErrorKind::undefined_r2:
      return "undefined-r2";
    case ErrorKind::io:
      return "io";
  }
  return "unknown";
}

} // namespace ppk
