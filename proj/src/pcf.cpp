#include "ppkrige/pcf.hpp"

#include "ppkrige/error.hpp"
#include "ppkrige/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace ppk {

PcfFunction PcfFunction::poisson()
{
  return {};
}

PcfFunction PcfFunction::thomas(double kappa, double sigma)
{
  require(kappa > 0.0 && sigma > 0.0, "Thomas pcf needs positive kappa and sigma");
  PcfFunction g;
  g.kind_ = Kind::thomas;
  g.kappa_ = kappa;
  g.sigma_ = sigma;
  return g;
}

PcfFunction PcfFunction::empirical(std::vector<double> r, std::vector<double> values, double bandwidth)
{
  require(!r.empty() && r.size() == values.size(), "empirical pcf needs matching, non-empty abscissae and values");
  require(r.front() > 0.0, "empirical pcf abscissae must be positive");
  for (std::size_t k = 1; k < r.size(); ++k)
    require(r[k] > r[k - 1], "empirical pcf abscissae must be strictly increasing");
  for (auto& v : values) {
    if (!std::isfinite(v))
      fail(ErrorKind::invalid_pcf, "empirical pcf has non-finite values");
    v = std::max(v, 0.0);
  }
  PcfFunction g;
  g.kind_ = Kind::empirical;
  g.bandwidth_ = bandwidth;
  const double step = r.front();
  g.uniform_ = true;
  for (std::size_t k = 0; k < r.size(); ++k)
    if (std::abs(r[k] - step * static_cast<double>(k + 1)) > 1e-9 * r.back()) {
      g.uniform_ = false;
      break;
    }
  g.r_ = std::move(r);
  g.g_ = std::move(values);
  return g;
}

double PcfFunction::value(double r) const
{
  switch (kind_) {
    case Kind::poisson:
      return 1.0;
    case Kind::thomas: {
      const double s2 = sigma_ * sigma_;
      return 1.0 + std::exp(-r * r / (4.0 * s2)) / (4.0 * std::numbers::pi * kappa_ * s2);
    }
    case Kind::empirical:
      break;
  }
  if (r > r_.back())
    return 1.0;
  if (r <= r_.front())
    return g_.front();
  std::size_t hi;
  if (uniform_) {
    hi = std::min(r_.size() - 1, static_cast<std::size_t>(r / r_.front()));
    // guard against rounding at the interval edges
    while (hi > 0 && r_[hi - 1] >= r)
      --hi;
    while (hi < r_.size() - 1 && r_[hi] < r)
      ++hi;
  } else {
    hi = static_cast<std::size_t>(std::lower_bound(r_.begin(), r_.end(), r) - r_.begin());
  }
  const std::size_t lo = hi - 1;
  const double t = (r - r_[lo]) / (r_[hi] - r_[lo]);
  return g_[lo] + t * (g_[hi] - g_[lo]);
}

double PcfFunction::operator()(double r) const
{
  require(r >= 0.0, "pcf argument must be non-negative");
  return value(r);
}

double PcfFunction::range() const
{
  switch (kind_) {
    case Kind::poisson:
      return 0.0;
    case Kind::thomas:
      return std::numeric_limits<double>::infinity();
    case Kind::empirical:
      return r_.back();
  }
  return 0.0;
}

double evaluate_pcf(const PcfFunction& g, double r)
{
  return g(r);
}

double stoyan_bandwidth(const PointPattern& pattern, const Window& window)
{
  const PointPattern obs = pattern.observed_in(window);
  if (obs.empty())
    fail(ErrorKind::insufficient_data, "Stoyan bandwidth needs at least one observed point");
  const double lambda_hat = static_cast<double>(obs.size()) / window.observed_area();
  return 0.15 / std::sqrt(lambda_hat);
}

double translation_weight(Point displacement, const Window& window)
{
  require(std::hypot(displacement.x, displacement.y) < window.bounds().diameter(),
          "displacement must be shorter than the window diameter");
  return SetCovariance(window).weight(displacement.x, displacement.y);
}

PcfFunction estimate_pcf(const PointPattern& pattern, const Window& window, const PcfOptions& options)
{
  return estimate_pcf(pattern, window, SetCovariance(window), options);
}

PcfFunction estimate_pcf(const PointPattern& pattern,
                         const Window& window,
                         const SetCovariance& setcov,
                         const PcfOptions& options)
{
  const PointPattern obs = pattern.observed_in(window);
  if (obs.size() < 2)
    fail(ErrorKind::insufficient_data, "pcf estimation needs at least two observed points");
  const double r_max = options.r_max.value_or(0.25 * window.bounds().diameter());
  require(r_max > 0.0 && r_max < 0.5 * window.bounds().diameter(),
          "r_max must lie in (0, half the window diameter)");
  require(options.n_r >= 2, "n_r must be at least 2");

  const double lambda_hat = static_cast<double>(obs.size()) / window.observed_area();
  const double h = options.bandwidth.value_or(0.15 / std::sqrt(lambda_hat));
  require(h > 0.0, "bandwidth must be positive");

  std::vector<double> r(static_cast<std::size_t>(options.n_r));
  for (int k = 0; k < options.n_r; ++k)
    r[static_cast<std::size_t>(k)] = r_max * (k + 1) / options.n_r;

  const std::vector<double> sums = kernels::pcf_pair_sums(obs.points(), setcov, r, h, options.weight_floor);
  std::vector<double> g(r.size());
  for (std::size_t k = 0; k < r.size(); ++k)
    g[k] = std::max(0.0, sums[k] / (2.0 * std::numbers::pi * r[k] * lambda_hat * lambda_hat));
  return PcfFunction::empirical(std::move(r), std::move(g), h);
}

} // namespace ppk
