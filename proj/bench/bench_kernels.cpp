// Parallel kernels against their serial reference twins. Run with
// OMP_NUM_THREADS set to compare thread counts.

#include "ppkrige/kernels.hpp"
#include "ppkrige/kriging.hpp"
#include "ppkrige/set_covariance.hpp"
#include "ppkrige/simulate.hpp"

#include <benchmark/benchmark.h>

using namespace ppk;
namespace k = ppk::kernels;

namespace {

std::vector<Point> clustered(int parents_per_unit)
{
  const auto r = simulate_thomas(ThomasParams{static_cast<double>(parents_per_unit), 50.0, 0.05, 1}, Rect{});
  return {r.offspring.points().begin(), r.offspring.points().end()};
}

std::vector<double> abscissae()
{
  std::vector<double> r(128);
  for (int i = 0; i < 128; ++i)
    r[static_cast<std::size_t>(i)] = 0.25 * (i + 1) / 128.0;
  return r;
}

template <auto Fn>
void pcf_sums(benchmark::State& state)
{
  const auto pts = clustered(static_cast<int>(state.range(0)));
  const SetCovariance sc(Window::full());
  const auto r = abscissae();
  for (auto _ : state)
    benchmark::DoNotOptimize(Fn(pts, sc, r, 0.007, 1e-3));
  state.counters["points"] = static_cast<double>(pts.size());
}

template <auto Fn>
void gaussian(benchmark::State& state)
{
  const auto pts = clustered(10);
  const k::Raster raster{Rect{}, static_cast<int>(state.range(0)), static_cast<int>(state.range(0))};
  for (auto _ : state)
    benchmark::DoNotOptimize(Fn(pts, raster, 0.02));
}

template <auto Fn>
void knn(benchmark::State& state)
{
  const auto pts = clustered(10);
  const k::Raster raster{Rect{}, static_cast<int>(state.range(0)), static_cast<int>(state.range(0))};
  for (auto _ : state)
    benchmark::DoNotOptimize(Fn(pts, raster, 23));
}

template <auto Fn>
void cluster(benchmark::State& state)
{
  const auto r = simulate_thomas(ThomasParams{10.0, 50.0, 0.05, 2}, Rect{});
  const ObservationGrid grid = build_grid_n(Window::full(), static_cast<int>(state.range(0)));
  std::vector<Point> at(grid.size());
  for (std::size_t c = 0; c < at.size(); ++c)
    at[c] = grid.center(c);
  for (auto _ : state)
    benchmark::DoNotOptimize(Fn(r.parents.points(), at, 50.0, 0.05));
}

template <auto Fn>
void offsets(benchmark::State& state)
{
  const int n = static_cast<int>(state.range(0));
  std::vector<double> table(static_cast<std::size_t>(n) * n);
  for (std::size_t i = 0; i < table.size(); ++i)
    table[i] = 1.0 / (1.0 + static_cast<double>(i));
  std::vector<int> cols, rows;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; i += 2) {
      cols.push_back(i);
      rows.push_back(j);
    }
  for (auto _ : state)
    benchmark::DoNotOptimize(Fn(table, n, cols, rows, 1.0));
}

void krige_grid(benchmark::State& state)
{
  const auto r = simulate_thomas(ThomasParams{10.0, 50.0, 0.05, 3}, Rect{});
  const Window w = band_window(0.5, 0.25);
  const ObservationGrid grid = build_grid_n(w, static_cast<int>(state.range(0)));
  CountFieldModel m;
  m.lambda = 500.0;
  m.g = thomas_pcf(r.params);
  m.cell_side = grid.cell_side();
  const auto counts = count_on_grid(r.offspring.observed_in(w), grid);
  for (auto _ : state)
    benchmark::DoNotOptimize(krige_intensity(m, grid, counts, {.compute_variance = false}));
}

} // namespace

BENCHMARK(pcf_sums<k::pcf_pair_sums>)->Arg(10)->Arg(40)->Unit(benchmark::kMillisecond);
BENCHMARK(pcf_sums<k::pcf_pair_sums_reference>)->Arg(10)->Arg(40)->Unit(benchmark::kMillisecond);
BENCHMARK(gaussian<k::gaussian_intensity>)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(gaussian<k::gaussian_intensity_reference>)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(knn<k::knn_intensity>)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(knn<k::knn_intensity_reference>)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(cluster<k::cluster_intensity>)->Arg(96)->Arg(192)->Unit(benchmark::kMillisecond);
BENCHMARK(cluster<k::cluster_intensity_reference>)->Arg(96)->Arg(192)->Unit(benchmark::kMillisecond);
BENCHMARK(offsets<k::offset_matrix>)->Arg(48)->Arg(96)->Unit(benchmark::kMillisecond);
BENCHMARK(offsets<k::offset_matrix_reference>)->Arg(48)->Arg(96)->Unit(benchmark::kMillisecond);
BENCHMARK(krige_grid)->Arg(24)->Arg(48)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
