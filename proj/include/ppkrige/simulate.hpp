#pragma once

#include "ppkrige/geometry.hpp"
#include "ppkrige/pcf.hpp"

#include <cstdint>
#include <vector>

namespace ppk {

struct ThomasParams
{
  double kappa = 10.0; //!< parent intensity
  double mu = 50.0;    //!< mean offspring per parent
  double sigma = 0.05; //!< offspring displacement standard deviation
  std::uint64_t seed = 0;

  double intensity() const { return kappa * mu; }
  void validate() const;
};

//! Parents are simulated on the window dilated by `buffer_sigmas * sigma`
//! so that clusters centred outside the window still contribute offspring.
struct SimulatedRealization
{
  PointPattern parents;                       //!< includes buffer-zone parents
  PointPattern offspring;                     //!< retained offspring, the observable pattern
  std::vector<std::uint32_t> parent_of;       //!< parent index of each retained offspring
  std::vector<std::uint32_t> offspring_drawn; //!< Poisson(mu) draw per parent, before clipping
  ThomasParams params;
};

inline constexpr double thomas_buffer_sigmas = 4.0;

SimulatedRealization simulate_thomas(const ThomasParams& params, const Rect& region);
SimulatedRealization simulate_thomas(const ThomasParams& params, const Window& window);

//! Conditional intensity sum over all parents of mu / (2 pi sigma^2) exp(-|x - p|^2 / 2 sigma^2).
double thomas_local_intensity(const SimulatedRealization& realization, Point x);
std::vector<double> thomas_local_intensity(const SimulatedRealization& realization, std::span<const Point> at);
//! Evaluated at every cell centre of `grid`.
std::vector<double> thomas_local_intensity(const SimulatedRealization& realization, const ObservationGrid& grid);

//! Analytic gradient of the conditional intensity.
Point thomas_intensity_gradient(const SimulatedRealization& realization, Point x);

//! Midpoint-rule value of the integral over S_obs of |grad lambda(x|U)|^2
//! on an n x n raster, cells weighted by their observed fraction.
double thomas_gradient_integral(const SimulatedRealization& realization, const Window& window, int n);

//! g(r) = 1 + exp(-r^2 / 4 sigma^2) / (4 pi kappa sigma^2).
PcfFunction thomas_pcf(const ThomasParams& params);

PointPattern simulate_poisson(double lambda, const Rect& region, std::uint64_t seed);
PointPattern simulate_poisson(double lambda, const Window& window, std::uint64_t seed);

} // namespace ppk
