#include "ppkrige/kernels.hpp"

#include "ppkrige/error.hpp"
#include "ppkrige/pcf.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>

namespace ppk::kernels {

namespace {

constexpr std::size_t chunk_size = 64;

std::vector<Point> sorted_by_x(std::span<const Point> points)
{
  std::vector<Point> s(points.begin(), points.end());
  std::sort(s.begin(), s.end(), [](Point a, Point b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  return s;
}

void add_pair(std::vector<double>& acc,
              std::span<const double> r,
              double d,
              double h,
              double inv_gamma,
              double multiplicity)
{
  auto lo = std::upper_bound(r.begin(), r.end(), d - h);
  for (auto it = lo; it != r.end() && *it < d + h; ++it) {
    const double rk = *it;
    double k = epanechnikov(rk - d, h);
    if (rk + d < h)
      k += epanechnikov(rk + d, h);
    acc[static_cast<std::size_t>(it - r.begin())] += multiplicity * k * inv_gamma;
  }
  // reflected mass for abscissae below d - h
  if (d < h)
    for (auto it = r.begin(); it != lo && *it + d < h; ++it)
      acc[static_cast<std::size_t>(it - r.begin())] += multiplicity * epanechnikov(*it + d, h) * inv_gamma;
}

} // namespace

std::vector<double> pcf_pair_sums(std::span<const Point> points,
                                  const SetCovariance& setcov,
                                  std::span<const double> abscissae,
                                  double h,
                                  double weight_floor)
{
  const std::vector<Point> pts = sorted_by_x(points);
  const std::size_t n = pts.size();
  const std::size_t n_r = abscissae.size();
  const double cutoff = (abscissae.empty() ? 0.0 : abscissae.back()) + h;
  const double min_gamma = weight_floor * setcov.observed_area();
  const std::size_t n_chunks = (n + chunk_size - 1) / chunk_size;
  std::vector<std::vector<double>> partial(n_chunks, std::vector<double>(n_r, 0.0));

#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(n_chunks); ++c) {
    auto& acc = partial[static_cast<std::size_t>(c)];
    const std::size_t end = std::min(n, (static_cast<std::size_t>(c) + 1) * chunk_size);
    for (std::size_t i = static_cast<std::size_t>(c) * chunk_size; i < end; ++i)
      for (std::size_t j = i + 1; j < n && pts[j].x - pts[i].x < cutoff; ++j) {
        const double dx = pts[j].x - pts[i].x;
        const double dy = pts[j].y - pts[i].y;
        const double d = std::hypot(dx, dy);
        if (d >= cutoff)
          continue;
        const double gamma = setcov(dx, dy);
        if (gamma < min_gamma || gamma <= 0.0)
          continue;
        add_pair(acc, abscissae, d, h, 1.0 / gamma, 2.0);
      }
  }

  std::vector<double> sums(n_r, 0.0);
  for (const auto& acc : partial)
    for (std::size_t k = 0; k < n_r; ++k)
      sums[k] += acc[k];
  return sums;
}

std::vector<double> pcf_pair_sums_reference(std::span<const Point> points,
                                            const SetCovariance& setcov,
                                            std::span<const double> abscissae,
                                            double h,
                                            double weight_floor)
{
  std::vector<double> sums(abscissae.size(), 0.0);
  const double min_gamma = weight_floor * setcov.observed_area();
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t j = 0; j < points.size(); ++j) {
      if (i == j)
        continue;
      const double dx = points[j].x - points[i].x;
      const double dy = points[j].y - points[i].y;
      const double d = std::hypot(dx, dy);
      const double gamma = setcov(dx, dy);
      if (gamma < min_gamma || gamma <= 0.0)
        continue;
      for (std::size_t k = 0; k < abscissae.size(); ++k) {
        const double r = abscissae[k];
        sums[k] += (epanechnikov(r - d, h) + (r + d < h ? epanechnikov(r + d, h) : 0.0)) / gamma;
      }
    }
  return sums;
}

std::vector<double> gaussian_intensity(std::span<const Point> points, const Raster& raster, double h)
{
  require(h > 0.0, "kernel bandwidth must be positive");
  const double cut = 8.0 * h;
  const double norm = 1.0 / (2.0 * std::numbers::pi * h * h);
  const double inv2h2 = 1.0 / (2.0 * h * h);

  std::vector<Point> by_y(points.begin(), points.end());
  std::sort(by_y.begin(), by_y.end(), [](Point a, Point b) { return a.y < b.y || (a.y == b.y && a.x < b.x); });

  std::vector<double> out(raster.size(), 0.0);
#pragma omp parallel for schedule(dynamic)
  for (int j = 0; j < raster.ny; ++j) {
    const double yc = raster.center(0, j).y;
    auto lo = std::lower_bound(by_y.begin(), by_y.end(), yc - cut, [](Point p, double v) { return p.y < v; });
    auto hi = std::upper_bound(by_y.begin(), by_y.end(), yc + cut, [](double v, Point p) { return v < p.y; });
    std::vector<Point> band(lo, hi);
    std::sort(band.begin(), band.end(), [](Point a, Point b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
    std::size_t first = 0;
    for (int i = 0; i < raster.nx; ++i) {
      const Point c = raster.center(i, j);
      while (first < band.size() && band[first].x < c.x - cut)
        ++first;
      double s = 0.0;
      for (std::size_t q = first; q < band.size() && band[q].x <= c.x + cut; ++q) {
        const double dx = band[q].x - c.x;
        const double dy = band[q].y - c.y;
        s += std::exp(-(dx * dx + dy * dy) * inv2h2);
      }
      out[static_cast<std::size_t>(j) * raster.nx + i] = norm * s;
    }
  }
  return out;
}

std::vector<double> gaussian_intensity_reference(std::span<const Point> points,
                                                 const Raster& raster,
                                                 double h)
{
  std::vector<double> out(raster.size(), 0.0);
  for (int j = 0; j < raster.ny; ++j)
    for (int i = 0; i < raster.nx; ++i) {
      const Point c = raster.center(i, j);
      double s = 0.0;
      for (const auto& p : points) {
        const double t = distance(p, c) / h;
        s += std::exp(-0.5 * t * t) / (2.0 * std::numbers::pi);
      }
      out[static_cast<std::size_t>(j) * raster.nx + i] = s / (h * h);
    }
  return out;
}

namespace {

//! Uniform bucket index over the bounding box of a point set.
class BucketIndex
{
public:
  BucketIndex(std::span<const Point> points, int per_bucket)
    : points_(points)
  {
    double xmin = points[0].x, xmax = points[0].x, ymin = points[0].y, ymax = points[0].y;
    for (const auto& p : points) {
      xmin = std::min(xmin, p.x);
      xmax = std::max(xmax, p.x);
      ymin = std::min(ymin, p.y);
      ymax = std::max(ymax, p.y);
    }
    const double w = std::max(xmax - xmin, 1e-12);
    const double hgt = std::max(ymax - ymin, 1e-12);
    const double target = std::max(1.0, static_cast<double>(points.size()) / std::max(1, per_bucket));
    size_ = std::sqrt(w * hgt / target);
    size_ = std::max({size_, w / 4096.0, hgt / 4096.0});
    x0_ = xmin;
    y0_ = ymin;
    nx_ = static_cast<int>(w / size_) + 1;
    ny_ = static_cast<int>(hgt / size_) + 1;
    start_.assign(static_cast<std::size_t>(nx_) * ny_ + 1, 0);
    std::vector<std::size_t> bucket(points.size());
    for (std::size_t q = 0; q < points.size(); ++q) {
      bucket[q] = cell_of(points[q]);
      ++start_[bucket[q] + 1];
    }
    for (std::size_t b = 1; b < start_.size(); ++b)
      start_[b] += start_[b - 1];
    order_.resize(points.size());
    std::vector<std::size_t> fill(start_.begin(), start_.end() - 1);
    for (std::size_t q = 0; q < points.size(); ++q)
      order_[fill[bucket[q]]++] = q;
  }

  //! k-th smallest distance from x to the indexed points, skipping index `skip`.
  double kth_distance(Point x, int k, std::size_t skip = static_cast<std::size_t>(-1)) const
  {
    std::priority_queue<double> best;
    const int ci = std::clamp(static_cast<int>(std::floor((x.x - x0_) / size_)), -1, nx_);
    const int cj = std::clamp(static_cast<int>(std::floor((x.y - y0_) / size_)), -1, ny_);
    // A bucket in Chebyshev ring R is at least (R - 1) * size_ away, also when
    // x lies outside the indexed box (clamping only shrinks the ring index).
    const int max_ring = std::max(nx_, ny_) + 2;
    for (int ring = 0; ring <= max_ring; ++ring) {
      if (ring > 0 && static_cast<int>(best.size()) == k && best.top() <= (ring - 1) * size_)
        break;
      for (int dj = -ring; dj <= ring; ++dj)
        for (int di = -ring; di <= ring; ++di) {
          if (std::max(std::abs(di), std::abs(dj)) != ring)
            continue;
          const int bi = ci + di;
          const int bj = cj + dj;
          if (bi < 0 || bj < 0 || bi >= nx_ || bj >= ny_)
            continue;
          const std::size_t b = static_cast<std::size_t>(bj) * nx_ + bi;
          for (std::size_t s = start_[b]; s < start_[b + 1]; ++s) {
            const std::size_t q = order_[s];
            if (q == skip)
              continue;
            const double d = distance(points_[q], x);
            if (static_cast<int>(best.size()) < k)
              best.push(d);
            else if (d < best.top()) {
              best.pop();
              best.push(d);
            }
          }
        }
    }
    return best.top();
  }

private:
  std::size_t cell_of(Point p) const
  {
    const int i = std::clamp(static_cast<int>((p.x - x0_) / size_), 0, nx_ - 1);
    const int j = std::clamp(static_cast<int>((p.y - y0_) / size_), 0, ny_ - 1);
    return static_cast<std::size_t>(j) * nx_ + i;
  }

  std::span<const Point> points_;
  double x0_ = 0.0;
  double y0_ = 0.0;
  double size_ = 1.0;
  int nx_ = 1;
  int ny_ = 1;
  std::vector<std::size_t> start_;
  std::vector<std::size_t> order_;
};

} // namespace

std::vector<double> knn_intensity(std::span<const Point> points, const Raster& raster, int k)
{
  require(k >= 1 && static_cast<std::size_t>(k) <= points.size(), "k must lie in [1, number of points]");
  const BucketIndex index(points, k);
  std::vector<double> out(raster.size(), 0.0);
#pragma omp parallel for schedule(dynamic)
  for (int j = 0; j < raster.ny; ++j)
    for (int i = 0; i < raster.nx; ++i) {
      const double d = index.kth_distance(raster.center(i, j), k);
      out[static_cast<std::size_t>(j) * raster.nx + i] = 1.0 / (std::numbers::pi * d * d);
    }
  return out;
}

std::vector<double> knn_intensity_reference(std::span<const Point> points, const Raster& raster, int k)
{
  std::vector<double> out(raster.size(), 0.0);
  std::vector<double> d(points.size());
  for (int j = 0; j < raster.ny; ++j)
    for (int i = 0; i < raster.nx; ++i) {
      const Point c = raster.center(i, j);
      for (std::size_t q = 0; q < points.size(); ++q)
        d[q] = distance(points[q], c);
      std::nth_element(d.begin(), d.begin() + (k - 1), d.end());
      out[static_cast<std::size_t>(j) * raster.nx + i] = 1.0 / (std::numbers::pi * d[k - 1] * d[k - 1]);
    }
  return out;
}

std::vector<double> cluster_intensity(std::span<const Point> parents,
                                      std::span<const Point> at,
                                      double mu,
                                      double sigma)
{
  const double norm = mu / (2.0 * std::numbers::pi * sigma * sigma);
  const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
  std::vector<double> out(at.size(), 0.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t q = 0; q < static_cast<std::ptrdiff_t>(at.size()); ++q) {
    const Point x = at[static_cast<std::size_t>(q)];
    double s = 0.0;
    for (const auto& p : parents) {
      const double dx = x.x - p.x;
      const double dy = x.y - p.y;
      s += std::exp(-(dx * dx + dy * dy) * inv2s2);
    }
    out[static_cast<std::size_t>(q)] = norm * s;
  }
  return out;
}

std::vector<double> cluster_intensity_reference(std::span<const Point> parents,
                                                std::span<const Point> at,
                                                double mu,
                                                double sigma)
{
  std::vector<double> out(at.size(), 0.0);
  for (std::size_t q = 0; q < at.size(); ++q)
    for (const auto& p : parents) {
      const double r = distance(at[q], p);
      out[q] += mu / (2.0 * std::numbers::pi * sigma * sigma) * std::exp(-r * r / (2.0 * sigma * sigma));
    }
  return out;
}

Eigen::MatrixXd offset_matrix(std::span<const double> table,
                              int table_nx,
                              std::span<const int> cols,
                              std::span<const int> rows,
                              double diag)
{
  const auto n = static_cast<Eigen::Index>(cols.size());
  Eigen::MatrixXd m(n, n);
#pragma omp parallel for schedule(dynamic, 16)
  for (Eigen::Index b = 0; b < n; ++b) {
    const int cb = cols[static_cast<std::size_t>(b)];
    const int rb = rows[static_cast<std::size_t>(b)];
    double* column = m.data() + b * n;
    for (Eigen::Index a = 0; a < n; ++a) {
      const int di = std::abs(cols[static_cast<std::size_t>(a)] - cb);
      const int dj = std::abs(rows[static_cast<std::size_t>(a)] - rb);
      column[a] = table[static_cast<std::size_t>(dj) * table_nx + di];
    }
    column[b] += diag;
  }
  return m;
}

Eigen::MatrixXd offset_matrix_reference(std::span<const double> table,
                                        int table_nx,
                                        std::span<const int> cols,
                                        std::span<const int> rows,
                                        double diag)
{
  const auto n = static_cast<Eigen::Index>(cols.size());
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b) {
      const int di = std::abs(cols[static_cast<std::size_t>(a)] - cols[static_cast<std::size_t>(b)]);
      const int dj = std::abs(rows[static_cast<std::size_t>(a)] - rows[static_cast<std::size_t>(b)]);
      m(a, b) = table[static_cast<std::size_t>(dj) * table_nx + di] + (a == b ? diag : 0.0);
    }
  return m;
}

PairList close_pairs(std::span<const Point> points,
                     const SetCovariance& setcov,
                     double cutoff,
                     double weight_floor)
{
  const std::vector<Point> pts = sorted_by_x(points);
  const std::size_t n = pts.size();
  const double min_gamma = weight_floor * setcov.observed_area();
  const std::size_t n_chunks = (n + chunk_size - 1) / chunk_size;
  std::vector<PairList> partial(n_chunks);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(n_chunks); ++c) {
    auto& out = partial[static_cast<std::size_t>(c)];
    const std::size_t end = std::min(n, (static_cast<std::size_t>(c) + 1) * chunk_size);
    for (std::size_t i = static_cast<std::size_t>(c) * chunk_size; i < end; ++i)
      for (std::size_t j = i + 1; j < n && pts[j].x - pts[i].x < cutoff; ++j) {
        const double dx = pts[j].x - pts[i].x;
        const double dy = pts[j].y - pts[i].y;
        const double d = std::hypot(dx, dy);
        if (d >= cutoff)
          continue;
        const double gamma = setcov(dx, dy);
        if (gamma < min_gamma || gamma <= 0.0)
          continue;
        out.distance.push_back(d);
        out.inv_setcov.push_back(1.0 / gamma);
      }
  }
  PairList all;
  for (auto& p : partial) {
    all.distance.insert(all.distance.end(), p.distance.begin(), p.distance.end());
    all.inv_setcov.insert(all.inv_setcov.end(), p.inv_setcov.begin(), p.inv_setcov.end());
  }
  return all;
}

std::vector<double> nearest_neighbour_distances(std::span<const Point> points)
{
  require(points.size() >= 2, "nearest-neighbour distances need at least two points");
  const BucketIndex index(points, 4);
  std::vector<double> out(points.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t q = 0; q < static_cast<std::ptrdiff_t>(points.size()); ++q)
    out[static_cast<std::size_t>(q)] =
      index.kth_distance(points[static_cast<std::size_t>(q)], 1, static_cast<std::size_t>(q));
  return out;
}

} // namespace ppk::kernels
