#include "ppkrige/mesh.hpp"

#include "ppkrige/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace ppk {

std::string_view to_string(GradientMethod method)
{
  switch (method) {
    case GradientMethod::kernel:
      return "kernel";
    case GradientMethod::counting:
      return "counting";
    case GradientMethod::knn:
      return "knn";
  }
  return "kernel";
}

GradientMethod parse_gradient_method(std::string_view name)
{
  if (name == "kernel")
    return GradientMethod::kernel;
  if (name == "counting")
    return GradientMethod::counting;
  if (name == "knn")
    return GradientMethod::knn;
  fail(ErrorKind::invalid_argument, "unknown gradient method '" + std::string(name) + "'");
}

GradientEstimate gradient_from_surface(const kernels::Raster& raster,
                                       std::vector<double> intensity,
                                       const Window& window)
{
  require(raster.nx >= 2 && raster.ny >= 2, "gradient raster needs at least 2 x 2 cells");
  require(intensity.size() == raster.size(), "surface size does not match the raster");
  const int nx = raster.nx;
  const int ny = raster.ny;

  std::vector<double> frac(raster.size(), 1.0);
  if (!window.is_full()) {
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const double x0 = raster.bounds.xmin + i * raster.cell_width();
        const double y0 = raster.bounds.ymin + j * raster.cell_height();
        frac[static_cast<std::size_t>(j) * nx + i] =
          window.observed_fraction({x0, y0, x0 + raster.cell_width(), y0 + raster.cell_height()});
      }
  }

  auto at = [&](int i, int j) { return static_cast<std::size_t>(j) * nx + i; };
  // one-sided difference towards an observed neighbour, forward preferred
  auto diff = [&](int i, int j, int di, int dj, int n_along, int pos, double step) {
    const std::size_t c = at(i, j);
    if (pos + 1 < n_along && frac[at(i + di, j + dj)] > 0.0)
      return (intensity[at(i + di, j + dj)] - intensity[c]) / step;
    if (pos > 0 && frac[at(i - di, j - dj)] > 0.0)
      return (intensity[c] - intensity[at(i - di, j - dj)]) / step;
    return 0.0;
  };

  GradientEstimate out;
  out.raster = raster;
  out.grad_sq.assign(raster.size(), 0.0);
  std::vector<double> rows(static_cast<std::size_t>(ny), 0.0);
#pragma omp parallel for schedule(static)
  for (int j = 0; j < ny; ++j) {
    double row = 0.0;
    for (int i = 0; i < nx; ++i) {
      const std::size_t c = at(i, j);
      if (frac[c] == 0.0)
        continue;
      const double gx = diff(i, j, 1, 0, nx, i, raster.cell_width());
      const double gy = diff(i, j, 0, 1, ny, j, raster.cell_height());
      out.grad_sq[c] = gx * gx + gy * gy;
      row += out.grad_sq[c] * frac[c];
    }
    rows[static_cast<std::size_t>(j)] = row;
  }
  double total = 0.0;
  for (double r : rows)
    total += r;
  out.integral = total * raster.cell_area();
  out.intensity = std::move(intensity);
  return out;
}

GradientEstimate estimate_gradient_integral(const PointPattern& pattern,
                                            const Window& window,
                                            const GradientOptions& options)
{
  require(options.n >= 50, "gradient raster must be at least 50 x 50");
  const PointPattern obs = pattern.observed_in(window);
  if (obs.size() < 2)
    fail(ErrorKind::insufficient_data, "gradient estimation needs at least two observed points");
  const kernels::Raster raster{window.bounds(), options.n, options.n};

  std::vector<double> surface;
  double bandwidth = 0.0;
  int k = 0;
  switch (options.method) {
    case GradientMethod::kernel:
      bandwidth = options.bandwidth ? *options.bandwidth : diggle_bandwidth(obs, window);
      require(bandwidth > 0.0, "bandwidth must be positive");
      surface = kernels::gaussian_intensity(obs.points(), raster, bandwidth);
      break;
    case GradientMethod::counting: {
      surface.assign(raster.size(), 0.0);
      const double inv_area = 1.0 / raster.cell_area();
      for (const auto& p : obs.points()) {
        const int i = std::clamp(static_cast<int>((p.x - raster.bounds.xmin) / raster.cell_width()), 0, raster.nx - 1);
        const int j = std::clamp(static_cast<int>((p.y - raster.bounds.ymin) / raster.cell_height()), 0, raster.ny - 1);
        surface[static_cast<std::size_t>(j) * raster.nx + i] += inv_area;
      }
      break;
    }
    case GradientMethod::knn:
      k = options.k ? *options.k : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(obs.size()))));
      require(k >= 1 && static_cast<std::size_t>(k) <= obs.size(), "k must lie in [1, number of points]");
      surface = kernels::knn_intensity(obs.points(), raster, k);
      break;
  }

  GradientEstimate out = gradient_from_surface(raster, std::move(surface), window);
  out.method = options.method;
  out.bandwidth = bandwidth;
  out.k = k;
  return out;
}

namespace {

double gauss2(double d, double s)
{
  return std::exp(-0.5 * d * d / (s * s)) / (2.0 * std::numbers::pi * s * s);
}

struct DigglePairs
{
  kernels::PairList pairs;
  double lambda = 0.0;
};

DigglePairs diggle_pairs(const PointPattern& obs, const Window& window, const SetCovariance& setcov, double h_max)
{
  DigglePairs out;
  out.lambda = static_cast<double>(obs.size()) / window.observed_area();
  // the sqrt(2) h kernel is negligible beyond 8 sqrt(2) h
  const double cutoff = std::min(window.bounds().diameter(), 8.0 * std::numbers::sqrt2 * h_max);
  out.pairs = kernels::close_pairs(obs.points(), setcov, cutoff, 1e-3);
  return out;
}

double criterion_from_pairs(const DigglePairs& dp, double h)
{
  const double s2 = std::numbers::sqrt2 * h;
  double sum = 0.0;
  for (std::size_t p = 0; p < dp.pairs.distance.size(); ++p) {
    const double d = dp.pairs.distance[p];
    sum += (gauss2(d, s2) - 2.0 * gauss2(d, h)) * dp.pairs.inv_setcov[p];
  }
  // unordered pairs count twice in the ordered sum
  return 1.0 / (4.0 * std::numbers::pi * h * h * dp.lambda) + 2.0 * sum / (dp.lambda * dp.lambda);
}

} // namespace

double diggle_criterion(const PointPattern& pattern, const Window& window, const SetCovariance& setcov, double h)
{
  require(h > 0.0, "bandwidth must be positive");
  const PointPattern obs = pattern.observed_in(window);
  if (obs.size() < 2)
    fail(ErrorKind::insufficient_data, "Diggle's criterion needs at least two observed points");
  return criterion_from_pairs(diggle_pairs(obs, window, setcov, h), h);
}

std::vector<double> diggle_candidates(const PointPattern& pattern, const Window& window, int count)
{
  require(count >= 2, "need at least two candidate bandwidths");
  const PointPattern obs = pattern.observed_in(window);
  if (obs.size() < 2)
    fail(ErrorKind::insufficient_data, "bandwidth selection needs at least two observed points");
  const auto nn = kernels::nearest_neighbour_distances(obs.points());
  double lo = *std::min_element(nn.begin(), nn.end());
  const double hi = 0.25 * window.bounds().diameter();
  // coincident points would give a zero lower end
  lo = std::max(lo, 1e-6 * hi);
  if (lo >= hi)
    lo = 0.01 * hi;
  std::vector<double> out(static_cast<std::size_t>(count));
  for (int c = 0; c < count; ++c)
    out[static_cast<std::size_t>(c)] = lo * std::pow(hi / lo, static_cast<double>(c) / (count - 1));
  return out;
}

double diggle_bandwidth(const PointPattern& pattern, const Window& window, std::span<const double> candidates)
{
  require(!candidates.empty(), "need at least one candidate bandwidth");
  for (double h : candidates)
    require(std::isfinite(h) && h > 0.0, "candidate bandwidths must be positive");
  const PointPattern obs = pattern.observed_in(window);
  if (obs.size() < 2)
    fail(ErrorKind::insufficient_data, "bandwidth selection needs at least two observed points");
  if (candidates.size() == 1)
    return candidates.front();

  std::vector<double> sorted(candidates.begin(), candidates.end());
  std::sort(sorted.begin(), sorted.end());
  const SetCovariance setcov(window);
  const DigglePairs dp = diggle_pairs(obs, window, setcov, sorted.back());
  double best = sorted.front();
  double best_value = std::numeric_limits<double>::infinity();
  for (double h : sorted) {
    const double v = criterion_from_pairs(dp, h);
    if (v < best_value) {
      best_value = v;
      best = h;
    }
  }
  return best;
}

double diggle_bandwidth(const PointPattern& pattern, const Window& window)
{
  return diggle_bandwidth(pattern, window, diggle_candidates(pattern, window));
}

MeshChoice optimal_mesh(double lambda_hat, double area_obs, double grad_integral, const Rect& extent)
{
  require(std::isfinite(lambda_hat) && lambda_hat > 0.0, "intensity must be positive");
  require(std::isfinite(area_obs) && area_obs > 0.0, "observed area must be positive");
  require(std::isfinite(grad_integral) && grad_integral >= 0.0, "gradient integral must be non-negative");
  if (grad_integral == 0.0)
    fail(ErrorKind::flat_intensity,
         "intensity gradient vanishes; use a single cell (the global mean) instead of a mesh");
  MeshChoice out;
  out.nu_opt = std::sqrt(12.0 * lambda_hat * area_obs / grad_integral);
  out.b = std::sqrt(out.nu_opt);
  out.nx = std::max(1, static_cast<int>(std::floor(extent.width() / out.b + 1e-9)));
  out.ny = std::max(1, static_cast<int>(std::floor(extent.height() / out.b + 1e-9)));
  return out;
}

double imse_estimate(double lambda_hat, double area_obs, double grad_integral, double cell_area)
{
  require(lambda_hat > 0.0 && area_obs > 0.0 && cell_area > 0.0, "IMSE arguments must be positive");
  require(grad_integral >= 0.0, "gradient integral must be non-negative");
  return cell_area / 12.0 * grad_integral + lambda_hat * area_obs / cell_area;
}

} // namespace ppk
