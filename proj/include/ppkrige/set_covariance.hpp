#pragma once

#include "ppkrige/geometry.hpp"

#include <vector>

namespace ppk {

//! Set covariance of the observed region, gamma(d) = nu(S_obs ∩ (S_obs - d)),
//! tabulated at every integer pixel shift via FFT autocorrelation of the mask
//! and bilinearly interpolated in between.
class SetCovariance
{
public:
  explicit SetCovariance(const Window& window);

  //! Overlap area for displacement (dx, dy) in spatial units.
  double operator()(double dx, double dy) const;

  //! Overlap as a proportion of nu(S_obs); in [0, 1].
  double weight(double dx, double dy) const { return (*this)(dx, dy) / observed_area_; }

  double observed_area() const { return observed_area_; }

  //! Overlap pixel count at an integer pixel shift.
  double pixel_overlap(int di, int dj) const;

private:
  int nx_ = 0;
  int ny_ = 0;
  double pw_ = 0.0;
  double ph_ = 0.0;
  double observed_area_ = 0.0;
  // (2 nx - 1) x (2 ny - 1), shift (di, dj) stored at (di + nx - 1, dj + ny - 1)
  std::vector<double> table_;
};

} // namespace ppk
