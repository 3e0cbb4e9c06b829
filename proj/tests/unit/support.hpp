#pragma once

#include "ppkrige/error.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#define CHECK_ERROR_KIND(expr, expected_kind)                                                                  \
  do {                                                                                                         \
    bool thrown_ = false;                                                                                      \
    try {                                                                                                      \
      (void)(expr);                                                                                            \
    } catch (const ppk::Error& e_) {                                                                           \
      thrown_ = true;                                                                                          \
      CHECK_MESSAGE(e_.kind() == (expected_kind), "got " << ppk::to_string(e_.kind()) << ": " << e_.what());  \
    }                                                                                                          \
    CHECK_MESSAGE(thrown_, "expected " << ppk::to_string(expected_kind));                                      \
  } while (false)

namespace testing {

struct MeanSe
{
  double mean = 0.0;
  double se = 0.0;
};

inline MeanSe mean_se(const std::vector<double>& v)
{
  const double n = static_cast<double>(v.size());
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v)
    ss += (x - m) * (x - m);
  return {m, std::sqrt(ss / (n - 1.0) / n)};
}

} // namespace testing
