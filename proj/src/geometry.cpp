#include "ppkrige/geometry.hpp"

#include "ppkrige/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace ppk {

namespace {

void check_rect(const Rect& r)
{
  require(std::isfinite(r.xmin) && std::isfinite(r.ymin) && std::isfinite(r.xmax) &&
            std::isfinite(r.ymax),
          "window bounds must be finite");
  require(r.width() > 0.0 && r.height() > 0.0, "window bounds must have positive extent");
}

} // namespace

Window::Window(Rect bounds, int nx, int ny, std::vector<std::uint8_t> mask)
  : bounds_(bounds)
  , nx_(nx)
  , ny_(ny)
  , mask_(std::move(mask))
{
  check_rect(bounds_);
  require(nx_ >= min_resolution && ny_ >= min_resolution,
          "mask resolution must be at least 64x64");
  require(mask_.size() == static_cast<std::size_t>(nx_) * ny_, "mask size does not match resolution");
  for (auto& m : mask_)
    m = m ? 1 : 0;
  observed_pixels_ = static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), 1));
  observed_area_ = static_cast<double>(observed_pixels_) * pixel_area();
  require(observed_pixels_ > 0, "window has no observed area");
}

Window Window::full(Rect bounds, int nx, int ny)
{
  require(nx > 0 && ny > 0, "mask resolution must be positive");
  return Window(bounds, nx, ny, std::vector<std::uint8_t>(static_cast<std::size_t>(nx) * ny, 1));
}

Window Window::from_mask(Rect bounds, int nx, int ny, std::vector<std::uint8_t> mask)
{
  return Window(bounds, nx, ny, std::move(mask));
}

bool Window::observed(Point p) const
{
  if (!bounds_.contains_closed(p))
    return false;
  int i = static_cast<int>((p.x - bounds_.xmin) / pixel_width());
  int j = static_cast<int>((p.y - bounds_.ymin) / pixel_height());
  i = std::clamp(i, 0, nx_ - 1);
  j = std::clamp(j, 0, ny_ - 1);
  return pixel(i, j);
}

double Window::observed_fraction(const Rect& cell) const
{
  const double pw = pixel_width();
  const double ph = pixel_height();
  // pixel i has centre xmin + (i + 0.5) pw; collect centres in [cell.xmin, cell.xmax)
  auto first = [](double lo, double origin, double step) {
    return static_cast<int>(std::ceil((lo - origin) / step - 0.5));
  };
  const int i0 = std::max(0, first(cell.xmin, bounds_.xmin, pw));
  const int i1 = std::min(nx_, first(cell.xmax, bounds_.xmin, pw));
  const int j0 = std::max(0, first(cell.ymin, bounds_.ymin, ph));
  const int j1 = std::min(ny_, first(cell.ymax, bounds_.ymin, ph));
  if (i1 <= i0 || j1 <= j0)
    return observed({0.5 * (cell.xmin + cell.xmax), 0.5 * (cell.ymin + cell.ymax)}) ? 1.0 : 0.0;
  std::size_t hit = 0;
  for (int j = j0; j < j1; ++j)
    for (int i = i0; i < i1; ++i)
      hit += mask_[static_cast<std::size_t>(j) * nx_ + i];
  return static_cast<double>(hit) / (static_cast<double>(i1 - i0) * (j1 - j0));
}

Window Window::restricted(const Rect& sub) const
{
  const double pw = pixel_width();
  const double ph = pixel_height();
  const int i0 = std::clamp(static_cast<int>(std::lround((sub.xmin - bounds_.xmin) / pw)), 0, nx_);
  const int i1 = std::clamp(static_cast<int>(std::lround((sub.xmax - bounds_.xmin) / pw)), 0, nx_);
  const int j0 = std::clamp(static_cast<int>(std::lround((sub.ymin - bounds_.ymin) / ph)), 0, ny_);
  const int j1 = std::clamp(static_cast<int>(std::lround((sub.ymax - bounds_.ymin) / ph)), 0, ny_);
  require(i1 > i0 && j1 > j0, "restriction rectangle does not overlap the window");
  std::vector<std::uint8_t> m(static_cast<std::size_t>(i1 - i0) * (j1 - j0));
  for (int j = j0; j < j1; ++j)
    for (int i = i0; i < i1; ++i)
      m[static_cast<std::size_t>(j - j0) * (i1 - i0) + (i - i0)] = pixel(i, j);
  const Rect r{bounds_.xmin + i0 * pw, bounds_.ymin + j0 * ph, bounds_.xmin + i1 * pw,
               bounds_.ymin + j1 * ph};
  Window w(r, i1 - i0, j1 - j0, std::move(m));
  if (bands_ && r.xmin == bounds_.xmin)
    w.bands_ = bands_;
  return w;
}

BandLayout band_layout(double rate, double band_width)
{
  require(std::isfinite(rate) && rate > 0.0 && rate <= 1.0, "observation rate must lie in (0, 1]");
  BandLayout layout;
  layout.rate = rate;
  layout.band_width = band_width;
  if (rate == 1.0)
    return layout;
  require(std::isfinite(band_width) && band_width > 0.0, "band width must be positive");
  const double unobserved = 1.0 - rate;
  const long k = std::lround(unobserved / band_width);
  require(k >= 1, "band width " + std::to_string(band_width) + " is wider than the unobserved fraction " +
                    std::to_string(unobserved));
  const double actual = unobserved / static_cast<double>(k);
  require(std::abs(actual - band_width) <= 0.1 * band_width,
          "band width " + std::to_string(band_width) + " does not tile an unobserved fraction of " +
            std::to_string(unobserved));
  layout.n_bands = static_cast<int>(k);
  layout.actual_width = actual;
  layout.period = 1.0 / static_cast<double>(k);
  return layout;
}

namespace {

//! Column mask for band `b` (counting from 0, possibly beyond n_bands when
//! extending to the right) on a raster with `nx_unit` columns per unit width.
//! Band widths are distributed so that the first n_bands bands cover exactly
//! round((1 - rate) nx_unit) columns.
void mark_band(std::vector<std::uint8_t>& columns, const BandLayout& layout, long b, int nx_unit)
{
  const long k = layout.n_bands;
  const long total = std::lround((1.0 - layout.rate) * nx_unit);
  const long cycle = b / k;
  const long r = b % k;
  const long len = (r + 1) * total / k - r * total / k;
  const long start = cycle * nx_unit + std::lround(static_cast<double>(r) * nx_unit / k);
  for (long c = start; c < start + len && c < static_cast<long>(columns.size()); ++c)
    columns[static_cast<std::size_t>(c)] = 0;
}

Window window_from_columns(Rect bounds, const std::vector<std::uint8_t>& columns, int ny)
{
  const int nx = static_cast<int>(columns.size());
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(nx) * ny);
  for (int j = 0; j < ny; ++j)
    std::copy(columns.begin(), columns.end(), mask.begin() + static_cast<std::ptrdiff_t>(j) * nx);
  return Window::from_mask(bounds, nx, ny, std::move(mask));
}

} // namespace

Window band_window(double rate, double band_width, Rect bounds, int nx, int ny)
{
  const BandLayout layout = band_layout(rate, band_width);
  if (layout.n_bands == 0) {
    Window w = Window::full(bounds, nx, ny);
    w.set_bands(layout);
    return w;
  }
  require(nx >= Window::min_resolution && ny >= Window::min_resolution,
          "mask resolution must be at least 64x64");
  std::vector<std::uint8_t> columns(static_cast<std::size_t>(nx), 1);
  for (long b = 0; b < layout.n_bands; ++b)
    mark_band(columns, layout, b, nx);
  Window w = window_from_columns(bounds, columns, ny);
  w.set_bands(layout);
  return w;
}

Window extended_band_window(double rate, double band_width, int nx_unit, int ny)
{
  const BandLayout layout = band_layout(rate, band_width);
  if (layout.n_bands == 0) {
    Window w = Window::full(Rect{}, nx_unit, ny);
    w.set_bands(layout);
    return w;
  }
  require(nx_unit >= Window::min_resolution && ny >= Window::min_resolution,
          "mask resolution must be at least 64x64");
  // Generous upper bound on the width, trimmed once nx_unit observed columns exist.
  const std::size_t cap = static_cast<std::size_t>(std::ceil(1.0 / rate + 2.0)) * nx_unit;
  std::vector<std::uint8_t> columns(cap, 1);
  const long bands_needed = static_cast<long>(cap / nx_unit + 1) * layout.n_bands;
  for (long b = 0; b < bands_needed; ++b)
    mark_band(columns, layout, b, nx_unit);
  std::size_t seen = 0;
  std::size_t width = 0;
  while (width < columns.size() && seen < static_cast<std::size_t>(nx_unit))
    seen += columns[width++];
  require(seen == static_cast<std::size_t>(nx_unit), "could not extend band window");
  columns.resize(width);
  const Rect bounds{0.0, 0.0, static_cast<double>(width) / nx_unit, 1.0};
  Window w = window_from_columns(bounds, columns, ny);
  w.set_bands(layout);
  return w;
}

PointPattern::PointPattern(Rect bounds, std::vector<Point> points)
  : bounds_(bounds)
  , points_(std::move(points))
{
  check_rect(bounds_);
  for (const auto& p : points_) {
    require(std::isfinite(p.x) && std::isfinite(p.y), "point coordinates must be finite");
    require(bounds_.contains_closed(p), "point lies outside the pattern bounds");
  }
}

PointPattern PointPattern::observed_in(const Window& window) const
{
  std::vector<Point> kept;
  kept.reserve(points_.size());
  for (const auto& p : points_)
    if (window.observed(p))
      kept.push_back(p);
  return PointPattern(window.bounds(), std::move(kept));
}

PointPattern PointPattern::restricted(const Rect& sub) const
{
  std::vector<Point> kept;
  for (const auto& p : points_)
    if (sub.contains(p))
      kept.push_back(p);
  return PointPattern(sub, std::move(kept));
}

ObservationGrid::ObservationGrid(Rect window_bounds,
                                 Point origin,
                                 double cell_side,
                                 int nx,
                                 int ny,
                                 std::vector<std::uint8_t> observed)
  : window_bounds_(window_bounds)
  , origin_(origin)
  , b_(cell_side)
  , nx_(nx)
  , ny_(ny)
  , observed_(std::move(observed))
{
  require(b_ > 0.0 && nx_ > 0 && ny_ > 0, "grid must have positive cell side and dimensions");
  require(observed_.size() == size(), "observed flags do not match grid size");
  for (std::size_t c = 0; c < observed_.size(); ++c)
    if (observed_[c])
      observed_cells_.push_back(c);
  require(!observed_cells_.empty(), "grid has no observed cell");
}

std::vector<std::size_t> ObservationGrid::unobserved_cells() const
{
  std::vector<std::size_t> out;
  out.reserve(size() - n_observed());
  for (std::size_t c = 0; c < size(); ++c)
    if (!observed_[c])
      out.push_back(c);
  return out;
}

Rect ObservationGrid::cell_rect(std::size_t cell) const
{
  const double x0 = origin_.x + col(cell) * b_;
  const double y0 = origin_.y + row(cell) * b_;
  return {x0, y0, x0 + b_, y0 + b_};
}

std::optional<std::size_t> ObservationGrid::locate(Point p) const
{
  const double fx = std::floor((p.x - origin_.x) / b_);
  const double fy = std::floor((p.y - origin_.y) / b_);
  if (fx < 0.0 || fy < 0.0 || fx >= nx_ || fy >= ny_)
    return std::nullopt;
  return index(static_cast<int>(fx), static_cast<int>(fy));
}

ObservationGrid build_grid(const Window& window, double cell_side)
{
  const Rect& r = window.bounds();
  require(std::isfinite(cell_side) && cell_side > 0.0, "cell side must be positive");
  require(cell_side <= std::min(r.width(), r.height()) * (1.0 + 1e-12),
          "cell side exceeds the window dimensions");
  // 1e-9 absorbs representation error in b = extent / n
  const int nx = std::max(1, static_cast<int>(std::floor(r.width() / cell_side + 1e-9)));
  const int ny = std::max(1, static_cast<int>(std::floor(r.height() / cell_side + 1e-9)));
  std::vector<std::uint8_t> observed(static_cast<std::size_t>(nx) * ny);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const Point c{r.xmin + (i + 0.5) * cell_side, r.ymin + (j + 0.5) * cell_side};
      observed[static_cast<std::size_t>(j) * nx + i] = window.observed(c) ? 1 : 0;
    }
  if (std::none_of(observed.begin(), observed.end(), [](auto v) { return v != 0; }))
    fail(ErrorKind::insufficient_data, "no grid cell centre falls in the observed region");
  return ObservationGrid(r, {r.xmin, r.ymin}, cell_side, nx, ny, std::move(observed));
}

ObservationGrid build_grid_n(const Window& window, int n)
{
  require(n > 0, "grid size must be positive");
  return build_grid(window, window.bounds().width() / n);
}

std::vector<int> count_on_grid(const PointPattern& pattern, const ObservationGrid& grid)
{
  require(pattern.bounds() == grid.window_bounds(), "pattern and grid windows differ");
  std::vector<int> counts(grid.size(), 0);
  for (const auto& p : pattern.points())
    if (auto c = grid.locate(p))
      ++counts[*c];
  return counts;
}

} // namespace ppk
