#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace ppk {

struct Point
{
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

inline double distance(Point a, Point b)
{
  return std::hypot(a.x - b.x, a.y - b.y);
}

struct Rect
{
  double xmin = 0.0;
  double ymin = 0.0;
  double xmax = 1.0;
  double ymax = 1.0;

  double width() const { return xmax - xmin; }
  double height() const { return ymax - ymin; }
  double area() const { return width() * height(); }
  double diameter() const { return std::hypot(width(), height()); }

  //! Half-open membership [xmin, xmax) x [ymin, ymax).
  bool contains(Point p) const
  {
    return p.x >= xmin && p.x < xmax && p.y >= ymin && p.y < ymax;
  }
  bool contains_closed(Point p) const
  {
    return p.x >= xmin && p.x <= xmax && p.y >= ymin && p.y <= ymax;
  }
  Rect dilated(double margin) const
  {
    return {xmin - margin, ymin - margin, xmax + margin, ymax + margin};
  }

  friend bool operator==(const Rect&, const Rect&) = default;
};

//! Parameters of a vertical band layout. `rate` is the observed fraction of
//! the reference width; `actual_width` is the band width after snapping the
//! band count to an integer.
struct BandLayout
{
  double rate = 1.0;
  double band_width = 0.0;
  double actual_width = 0.0;
  int n_bands = 0;
  double period = 1.0;
};

//! Bounding rectangle plus a raster of observed pixels (S_obs). Pixel (i, j)
//! covers column i along x and row j along y; storage is row-major.
class Window
{
public:
  static constexpr int default_resolution = 512;
  static constexpr int min_resolution = 64;

  Window() : Window(full(Rect{})) {}

  static Window full(Rect bounds = {},
                     int nx = default_resolution,
                     int ny = default_resolution);
  static Window from_mask(Rect bounds, int nx, int ny, std::vector<std::uint8_t> mask);

  const Rect& bounds() const { return bounds_; }
  int mask_nx() const { return nx_; }
  int mask_ny() const { return ny_; }
  double pixel_width() const { return bounds_.width() / nx_; }
  double pixel_height() const { return bounds_.height() / ny_; }
  double pixel_area() const { return pixel_width() * pixel_height(); }
  std::span<const std::uint8_t> mask() const { return mask_; }
  bool pixel(int i, int j) const { return mask_[static_cast<std::size_t>(j) * nx_ + i] != 0; }

  //! True iff p lies in the bounding rectangle and in an observed pixel.
  bool observed(Point p) const;

  double total_area() const { return bounds_.area(); }
  double observed_area() const { return observed_area_; }
  double unobserved_area() const { return total_area() - observed_area_; }
  bool is_full() const { return observed_pixels_ == mask_.size(); }

  //! Fraction of the pixels whose centres fall in `cell` that are observed.
  //! Falls back to the pixel under the cell centre when no pixel centre is
  //! inside the cell.
  double observed_fraction(const Rect& cell) const;

  //! Sub-window on a pixel-aligned rectangle (snapped to the nearest pixel
  //! edges).
  Window restricted(const Rect& sub) const;

  const std::optional<BandLayout>& bands() const { return bands_; }
  void set_bands(BandLayout layout) { bands_ = layout; }

private:
  Window(Rect bounds, int nx, int ny, std::vector<std::uint8_t> mask);

  Rect bounds_;
  int nx_ = 0;
  int ny_ = 0;
  std::vector<std::uint8_t> mask_;
  std::size_t observed_pixels_ = 0;
  double observed_area_ = 0.0;
  std::optional<BandLayout> bands_;
};

//! Resolves (rate, band_width) into an integer band count. The band count is
//! round((1 - rate) / band_width); the requested width must be within 10% of
//! the width that makes the unobserved area exactly 1 - rate.
BandLayout band_layout(double rate, double band_width);

//! Unit-square style window with evenly spaced vertical unobserved bands
//! starting at the left edge of `bounds`.
Window band_window(double rate,
                   double band_width,
                   Rect bounds = {},
                   int nx = Window::default_resolution,
                   int ny = Window::default_resolution);

//! The band layout of band_window() on the unit square, continued to the
//! right until the observed area reaches one. Pixel size stays 1/nx_unit.
Window extended_band_window(double rate,
                            double band_width,
                            int nx_unit = Window::default_resolution,
                            int ny = Window::default_resolution);

class PointPattern
{
public:
  PointPattern() = default;
  PointPattern(Rect bounds, std::vector<Point> points);

  const Rect& bounds() const { return bounds_; }
  std::span<const Point> points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const Point& operator[](std::size_t i) const { return points_[i]; }

  //! Points lying in S_obs of `window`; bounds become the window bounds.
  PointPattern observed_in(const Window& window) const;
  //! Points inside `sub` (half-open); bounds become `sub`.
  PointPattern restricted(const Rect& sub) const;

  friend bool operator==(const PointPattern&, const PointPattern&) = default;

private:
  Rect bounds_;
  std::vector<Point> points_;
};

//! Regular square-mesh grid. Cells are indexed row-major with rows running
//! along increasing y.
class ObservationGrid
{
public:
  ObservationGrid() = default;
  ObservationGrid(Rect window_bounds,
                  Point origin,
                  double cell_side,
                  int nx,
                  int ny,
                  std::vector<std::uint8_t> observed);

  const Rect& window_bounds() const { return window_bounds_; }
  Point origin() const { return origin_; }
  double cell_side() const { return b_; }
  double cell_area() const { return b_ * b_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  std::size_t size() const { return static_cast<std::size_t>(nx_) * ny_; }
  std::size_t n_observed() const { return observed_cells_.size(); }
  double observed_cell_area() const { return cell_area() * n_observed(); }

  bool observed(std::size_t cell) const { return observed_[cell] != 0; }
  std::span<const std::size_t> observed_cells() const { return observed_cells_; }
  std::vector<std::size_t> unobserved_cells() const;

  int col(std::size_t cell) const { return static_cast<int>(cell % nx_); }
  int row(std::size_t cell) const { return static_cast<int>(cell / nx_); }
  std::size_t index(int col, int row) const
  {
    return static_cast<std::size_t>(row) * nx_ + col;
  }
  Point center(std::size_t cell) const
  {
    return {origin_.x + (col(cell) + 0.5) * b_, origin_.y + (row(cell) + 0.5) * b_};
  }
  Rect cell_rect(std::size_t cell) const;
  Rect extent() const { return {origin_.x, origin_.y, origin_.x + nx_ * b_, origin_.y + ny_ * b_}; }

  //! Cell containing p under half-open intervals, if any.
  std::optional<std::size_t> locate(Point p) const;

private:
  Rect window_bounds_;
  Point origin_;
  double b_ = 0.0;
  int nx_ = 0;
  int ny_ = 0;
  std::vector<std::uint8_t> observed_;
  std::vector<std::size_t> observed_cells_;
};

ObservationGrid build_grid(const Window& window, double cell_side);

//! Grid with exactly n cells per side of the (square) window: cell side is
//! width / n. Convenience for the 24/48/96 prediction grids.
ObservationGrid build_grid_n(const Window& window, int n);

std::vector<int> count_on_grid(const PointPattern& pattern, const ObservationGrid& grid);

} // namespace ppk
