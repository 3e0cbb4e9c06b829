#include "ppkrige/simulate.hpp"

#include "ppkrige/error.hpp"
#include "ppkrige/kernels.hpp"
#include "ppkrige/rng.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace ppk {

void ThomasParams::validate() const
{
  require(std::isfinite(kappa) && kappa > 0.0, "kappa must be positive");
  require(std::isfinite(mu) && mu > 0.0, "mu must be positive");
  require(std::isfinite(sigma) && sigma > 0.0, "sigma must be positive");
}

namespace {

std::vector<Point> uniform_points(Rng& rng, const Rect& region, std::size_t n)
{
  std::uniform_real_distribution<double> ux(region.xmin, region.xmax);
  std::uniform_real_distribution<double> uy(region.ymin, region.ymax);
  std::vector<Point> pts(n);
  for (auto& p : pts) {
    p.x = ux(rng);
    p.y = uy(rng);
  }
  return pts;
}

std::size_t poisson_count(Rng& rng, double mean)
{
  if (!(mean > 0.0))
    return 0;
  std::poisson_distribution<long long> dist(mean);
  return static_cast<std::size_t>(dist(rng));
}

} // namespace

SimulatedRealization simulate_thomas(const ThomasParams& params, const Rect& region)
{
  params.validate();
  Rng rng = make_rng(params.seed);
  const Rect dilated = region.dilated(thomas_buffer_sigmas * params.sigma);

  std::vector<Point> parents = uniform_points(rng, dilated, poisson_count(rng, params.kappa * dilated.area()));

  std::normal_distribution<double> offset(0.0, params.sigma);
  std::vector<Point> children;
  std::vector<std::uint32_t> parent_of;
  std::vector<std::uint32_t> drawn(parents.size());
  for (std::size_t p = 0; p < parents.size(); ++p) {
    const std::size_t m = poisson_count(rng, params.mu);
    drawn[p] = static_cast<std::uint32_t>(m);
    for (std::size_t c = 0; c < m; ++c) {
      // draw both coordinates unconditionally so the stream does not depend on clipping
      const double dx = offset(rng);
      const double dy = offset(rng);
      const Point x{parents[p].x + dx, parents[p].y + dy};
      if (region.contains(x)) {
        children.push_back(x);
        parent_of.push_back(static_cast<std::uint32_t>(p));
      }
    }
  }

  SimulatedRealization out;
  out.parents = PointPattern(dilated, std::move(parents));
  out.offspring = PointPattern(region, std::move(children));
  out.parent_of = std::move(parent_of);
  out.offspring_drawn = std::move(drawn);
  out.params = params;
  return out;
}

SimulatedRealization simulate_thomas(const ThomasParams& params, const Window& window)
{
  return simulate_thomas(params, window.bounds());
}

double thomas_local_intensity(const SimulatedRealization& realization, Point x)
{
  const Point at[1] = {x};
  return kernels::cluster_intensity(realization.parents.points(), at, realization.params.mu,
                                    realization.params.sigma)[0];
}

std::vector<double> thomas_local_intensity(const SimulatedRealization& realization, std::span<const Point> at)
{
  return kernels::cluster_intensity(realization.parents.points(), at, realization.params.mu,
                                    realization.params.sigma);
}

std::vector<double> thomas_local_intensity(const SimulatedRealization& realization, const ObservationGrid& grid)
{
  std::vector<Point> centres(grid.size());
  for (std::size_t c = 0; c < grid.size(); ++c)
    centres[c] = grid.center(c);
  return thomas_local_intensity(realization, centres);
}

Point thomas_intensity_gradient(const SimulatedRealization& realization, Point x)
{
  const double s2 = realization.params.sigma * realization.params.sigma;
  const double norm = realization.params.mu / (2.0 * std::numbers::pi * s2);
  Point g{0.0, 0.0};
  for (const auto& p : realization.parents.points()) {
    const double dx = x.x - p.x;
    const double dy = x.y - p.y;
    const double v = norm * std::exp(-(dx * dx + dy * dy) / (2.0 * s2));
    g.x -= v * dx / s2;
    g.y -= v * dy / s2;
  }
  return g;
}

double thomas_gradient_integral(const SimulatedRealization& realization, const Window& window, int n)
{
  require(n > 0, "raster size must be positive");
  const kernels::Raster raster{window.bounds(), n, n};
  std::vector<double> rows(static_cast<std::size_t>(n), 0.0);
#pragma omp parallel for schedule(static)
  for (int j = 0; j < n; ++j) {
    double row = 0.0;
    for (int i = 0; i < n; ++i) {
      const Point c = raster.center(i, j);
      const double x0 = raster.bounds.xmin + i * raster.cell_width();
      const double y0 = raster.bounds.ymin + j * raster.cell_height();
      const double frac =
        window.is_full() ? 1.0
                         : window.observed_fraction({x0, y0, x0 + raster.cell_width(), y0 + raster.cell_height()});
      if (frac == 0.0)
        continue;
      const Point g = thomas_intensity_gradient(realization, c);
      row += (g.x * g.x + g.y * g.y) * frac;
    }
    rows[static_cast<std::size_t>(j)] = row;
  }
  double total = 0.0;
  for (double r : rows)
    total += r;
  return total * raster.cell_area();
}

PcfFunction thomas_pcf(const ThomasParams& params)
{
  params.validate();
  return PcfFunction::thomas(params.kappa, params.sigma);
}

PointPattern simulate_poisson(double lambda, const Rect& region, std::uint64_t seed)
{
  require(std::isfinite(lambda) && lambda > 0.0, "Poisson intensity must be positive");
  Rng rng = make_rng(seed);
  const std::size_t n = poisson_count(rng, lambda * region.area());
  return PointPattern(region, uniform_points(rng, region, n));
}

PointPattern simulate_poisson(double lambda, const Window& window, std::uint64_t seed)
{
  return simulate_poisson(lambda, window.bounds(), seed);
}

} // namespace ppk
