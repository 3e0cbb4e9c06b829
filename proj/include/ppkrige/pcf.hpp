#pragma once

#include "ppkrige/geometry.hpp"
#include "ppkrige/set_covariance.hpp"

#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace ppk {

//! Pair correlation function g(r). Either a closed form (Poisson, Thomas) or
//! an empirical curve on strictly increasing abscissae that is linearly
//! interpolated, held at g(r_1) below the first abscissa and equal to one
//! beyond the last.
class PcfFunction
{
public:
  enum class Kind
  {
    poisson,
    thomas,
    empirical
  };

  PcfFunction() = default;

  static PcfFunction poisson();
  static PcfFunction thomas(double kappa, double sigma);
  static PcfFunction empirical(std::vector<double> r, std::vector<double> g, double bandwidth);

  Kind kind() const { return kind_; }

  //! Throws invalid-argument for negative or NaN r.
  double operator()(double r) const;
  //! No argument checking; r must be >= 0.
  double value(double r) const;

  //! Distance beyond which g is exactly one: 0 for Poisson, the last abscissa
  //! for empirical curves, +inf for Thomas.
  double range() const;

  double kappa() const { return kappa_; }
  double sigma() const { return sigma_; }
  double bandwidth() const { return bandwidth_; }
  std::span<const double> abscissae() const { return r_; }
  std::span<const double> values() const { return g_; }

private:
  Kind kind_ = Kind::poisson;
  double kappa_ = 0.0;
  double sigma_ = 0.0;
  double bandwidth_ = 0.0;
  bool uniform_ = false;
  std::vector<double> r_;
  std::vector<double> g_;
};

double evaluate_pcf(const PcfFunction& g, double r);

struct PcfOptions
{
  //! Default: a quarter of the window diameter.
  std::optional<double> r_max;
  int n_r = 128;
  //! Default: Stoyan's rule of thumb.
  std::optional<double> bandwidth;
  //! Pairs whose translation weight falls below this are dropped.
  double weight_floor = 1e-3;
};

//! Kernel estimate of g from the points of `pattern` in S_obs, with an
//! Epanechnikov kernel of half-width h, translation edge correction and
//! reflection at r = 0. Abscissae are r_k = k r_max / n_r, k = 1..n_r.
PcfFunction estimate_pcf(const PointPattern& pattern, const Window& window, const PcfOptions& options = {});

//! Same as above, reusing a precomputed set covariance of `window`.
PcfFunction estimate_pcf(const PointPattern& pattern,
                         const Window& window,
                         const SetCovariance& setcov,
                         const PcfOptions& options = {});

//! h = 0.15 / sqrt(lambda_hat), lambda_hat = Phi(S_obs) / nu(S_obs).
double stoyan_bandwidth(const PointPattern& pattern, const Window& window);

//! nu(S_obs ∩ (S_obs - d)) / nu(S_obs). Builds the set covariance; prefer
//! SetCovariance::weight when evaluating many displacements.
double translation_weight(Point displacement, const Window& window);

//! Epanechnikov kernel with half-width h.
inline double epanechnikov(double u, double h)
{
  const double t = u / h;
  return std::abs(t) < 1.0 ? 0.75 / h * (1.0 - t * t) : 0.0;
}

} // namespace ppk
