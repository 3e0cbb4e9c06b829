#include "ppkrige/set_covariance.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <mutex>

namespace ppk {

namespace {

// FFTW planning is not thread safe.
std::mutex& planner_mutex()
{
  static std::mutex m;
  return m;
}

struct FftwFree
{
  void operator()(void* p) const { fftw_free(p); }
};

template<typename T>
using FftwBuffer = std::unique_ptr<T[], FftwFree>;

template<typename T>
FftwBuffer<T> fftw_buffer(std::size_t n)
{
  auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * n));
  if (!p)
    throw std::bad_alloc();
  return FftwBuffer<T>(p);
}

} // namespace

SetCovariance::SetCovariance(const Window& window)
  : nx_(window.mask_nx())
  , ny_(window.mask_ny())
  , pw_(window.pixel_width())
  , ph_(window.pixel_height())
  , observed_area_(window.observed_area())
{
  const int px = 2 * nx_;
  const int py = 2 * ny_;
  const int pxc = px / 2 + 1;
  const std::size_t real_size = static_cast<std::size_t>(px) * py;
  const std::size_t complex_size = static_cast<std::size_t>(py) * pxc;

  auto real = fftw_buffer<double>(real_size);
  auto spec = fftw_buffer<fftw_complex>(complex_size);

  fftw_plan forward;
  fftw_plan backward;
  {
    std::lock_guard lock(planner_mutex());
    // row-major: slow index y, fast index x
    forward = fftw_plan_dft_r2c_2d(py, px, real.get(), spec.get(), FFTW_ESTIMATE);
    backward = fftw_plan_dft_c2r_2d(py, px, spec.get(), real.get(), FFTW_ESTIMATE);
  }

  std::fill(real.get(), real.get() + real_size, 0.0);
  const auto mask = window.mask();
  for (int j = 0; j < ny_; ++j)
    for (int i = 0; i < nx_; ++i)
      real[static_cast<std::size_t>(j) * px + i] = mask[static_cast<std::size_t>(j) * nx_ + i];

  fftw_execute(forward);
  for (std::size_t k = 0; k < complex_size; ++k) {
    const double re = spec[k][0];
    const double im = spec[k][1];
    spec[k][0] = re * re + im * im;
    spec[k][1] = 0.0;
  }
  fftw_execute(backward);

  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(forward);
    fftw_destroy_plan(backward);
  }

  // Autocorrelation c(di, dj) = sum m(p) m(p + d) sits at index d mod (px, py).
  const double scale = 1.0 / static_cast<double>(real_size);
  const int tw = 2 * nx_ - 1;
  const int th = 2 * ny_ - 1;
  table_.assign(static_cast<std::size_t>(tw) * th, 0.0);
  for (int dj = -(ny_ - 1); dj <= ny_ - 1; ++dj) {
    const int sj = (dj + py) % py;
    for (int di = -(nx_ - 1); di <= nx_ - 1; ++di) {
      const int si = (di + px) % px;
      // counts are integers; rounding removes FFT noise
      const double v = std::round(real[static_cast<std::size_t>(sj) * px + si] * scale);
      table_[static_cast<std::size_t>(dj + ny_ - 1) * tw + (di + nx_ - 1)] = v;
    }
  }
}

double SetCovariance::pixel_overlap(int di, int dj) const
{
  if (di <= -nx_ || di >= nx_ || dj <= -ny_ || dj >= ny_)
    return 0.0;
  return table_[static_cast<std::size_t>(dj + ny_ - 1) * (2 * nx_ - 1) + (di + nx_ - 1)];
}

double SetCovariance::operator()(double dx, double dy) const
{
  const double fx = dx / pw_;
  const double fy = dy / ph_;
  const double x0 = std::floor(fx);
  const double y0 = std::floor(fy);
  if (x0 <= -nx_ - 1 || x0 >= nx_ || y0 <= -ny_ - 1 || y0 >= ny_)
    return 0.0;
  const double tx = fx - x0;
  const double ty = fy - y0;
  const int i = static_cast<int>(x0);
  const int j = static_cast<int>(y0);
  const double v = (1 - tx) * (1 - ty) * pixel_overlap(i, j) + tx * (1 - ty) * pixel_overlap(i + 1, j) +
                   (1 - tx) * ty * pixel_overlap(i, j + 1) + tx * ty * pixel_overlap(i + 1, j + 1);
  return v * pw_ * ph_;
}

} // namespace ppk
