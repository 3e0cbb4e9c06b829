#include "support.hpp"

#include "ppkrige/geometry.hpp"
#include "ppkrige/rng.hpp"
#include "ppkrige/simulate.hpp"

#include <cmath>
#include <numeric>

using namespace ppk;

TEST_CASE("build_grid tiles the unit square")
{
  const Window w = Window::full();
  const ObservationGrid g = build_grid(w, 0.25);
  CHECK(g.nx() == 4);
  CHECK(g.ny() == 4);
  CHECK(g.size() == 16);
  CHECK(g.n_observed() == 16);

  const ObservationGrid fine = build_grid(w, 1.0 / 96.0);
  CHECK(fine.nx() == 96);
  CHECK(fine.ny() == 96);
}

TEST_CASE("build_grid tags cells by their centre")
{
  std::vector<std::uint8_t> mask(64 * 64);
  for (int j = 0; j < 64; ++j)
    for (int i = 32; i < 64; ++i)
      mask[static_cast<std::size_t>(j) * 64 + i] = 1;
  const Window w = Window::from_mask(Rect{}, 64, 64, mask);
  const ObservationGrid g = build_grid(w, 0.5);
  CHECK(g.size() == 4);
  CHECK(g.n_observed() == 2);
  CHECK_FALSE(g.observed(g.index(0, 0)));
  CHECK(g.observed(g.index(1, 1)));
}

TEST_CASE("build_grid drops trailing partial cells and rejects bad sides")
{
  const Window w = Window::full();
  const ObservationGrid g = build_grid(w, 0.3);
  CHECK(g.nx() == 3);
  CHECK(g.extent().xmax == doctest::Approx(0.9));
  CHECK_ERROR_KIND(build_grid(w, 0.0), ErrorKind::invalid_argument);
  CHECK_ERROR_KIND(build_grid(w, -0.1), ErrorKind::invalid_argument);
  CHECK_ERROR_KIND(build_grid(w, 1.5), ErrorKind::invalid_argument);
}

TEST_CASE("count_on_grid examples")
{
  const Window w = Window::full();
  const ObservationGrid g = build_grid(w, 0.5);
  const PointPattern one(Rect{}, {{0.1, 0.1}});
  CHECK(count_on_grid(one, g) == std::vector<int>{1, 0, 0, 0});
  CHECK(count_on_grid(PointPattern(Rect{}, {}), g) == std::vector<int>{0, 0, 0, 0});

  // shared edges belong to the cell whose half-open interval contains them
  const PointPattern edge(Rect{}, {{0.5, 0.5}, {0.5, 0.0}, {0.0, 0.5}});
  CHECK(count_on_grid(edge, g) == std::vector<int>{0, 1, 1, 1});

  const PointPattern other(Rect{0, 0, 2, 2}, {});
  CHECK_ERROR_KIND(count_on_grid(other, g), ErrorKind::invalid_argument);
}

TEST_CASE("count_on_grid matches direct enumeration")
{
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const PointPattern p = simulate_poisson(1000.0, Rect{}, seed);
    for (double b : {0.1, 0.3, 1.0 / 7.0}) {
      const ObservationGrid g = build_grid(Window::full(), b);
      const std::vector<int> counts = count_on_grid(p, g);
      std::vector<int> oracle(g.size(), 0);
      std::size_t in_extent = 0;
      for (const Point& q : p.points()) {
        int hits = 0;
        for (std::size_t c = 0; c < g.size(); ++c)
          if (g.cell_rect(c).contains(q)) {
            ++oracle[c];
            ++hits;
          }
        // partition: at most one cell, exactly one inside the extent
        CHECK(hits == (g.extent().contains(q) ? 1 : 0));
        in_extent += g.extent().contains(q) ? 1 : 0;
      }
      CHECK(counts == oracle);
      CHECK(static_cast<std::size_t>(std::accumulate(counts.begin(), counts.end(), 0)) == in_extent);
      if (b == 0.1)
        CHECK(in_extent == p.size());
    }
  }
}

TEST_CASE("uniform counts average to the expected cell mean")
{
  const ObservationGrid g = build_grid(Window::full(), 0.1);
  std::vector<double> means;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    auto rng = make_rng(77, seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Point> pts(1000);
    for (auto& q : pts)
      q = {u(rng), u(rng)};
    const std::vector<int> c = count_on_grid(PointPattern(Rect{}, pts), g);
    CHECK(std::accumulate(c.begin(), c.end(), 0) == 1000);
    means.push_back(static_cast<double>(c[37]));
  }
  const auto ms = testing::mean_se(means);
  CHECK(std::abs(ms.mean - 10.0) < 3.0 * ms.se);
}

TEST_CASE("band_window examples")
{
  const Window w = band_window(0.5, 0.25);
  CHECK(w.observed_area() == doctest::Approx(0.5).epsilon(1.0 / 512));
  REQUIRE(w.bands().has_value());
  CHECK(w.bands()->n_bands == 2);
  CHECK_FALSE(w.observed({0.1, 0.5}));
  CHECK(w.observed({0.3, 0.5}));
  CHECK_FALSE(w.observed({0.6, 0.5}));
  CHECK(w.observed({0.8, 0.5}));

  CHECK(band_window(1.0, 0.25).is_full());

  const Window widest = band_window(0.17, 0.83);
  CHECK(widest.bands()->n_bands == 1);
  CHECK(widest.unobserved_area() == doctest::Approx(0.83).epsilon(2.0 / 512));

  CHECK_ERROR_KIND(band_window(0.5, 0.3), ErrorKind::invalid_argument);
}

TEST_CASE("band windows have the requested unobserved area")
{
  for (double rate : {0.83, 0.66, 0.5, 0.33, 0.17})
    for (double width : {0.17, 0.085}) {
      const BandLayout layout = band_layout(rate, width);
      const Window w = band_window(rate, width);
      // one pixel column per band edge
      CHECK(std::abs(w.unobserved_area() - (1.0 - rate)) <= 2.0 * layout.n_bands / 512.0 + 1e-12);
    }
}

TEST_CASE("area bookkeeping converges as cells shrink")
{
  const Window w = band_window(0.66, 0.085);
  const ObservationGrid g = build_grid(w, 1.0 / 512.0);
  const double area = g.observed_cell_area();
  CHECK(std::abs(area - w.observed_area()) / w.observed_area() < 2.0 / 512.0);
}

TEST_CASE("extended band window continues the unit layout")
{
  const Window unit = band_window(0.5, 0.25);
  const Window ext = extended_band_window(0.5, 0.25);
  CHECK(ext.observed_area() == doctest::Approx(1.0).epsilon(2.0 / 512));
  CHECK(ext.bounds().xmax > 1.5);
  for (double x : {0.05, 0.3, 0.55, 0.8, 0.99})
    CHECK(ext.observed({x, 0.4}) == unit.observed({x, 0.4}));
}

TEST_CASE("window areas are consistent")
{
  const Window w = band_window(0.33, 0.17);
  CHECK(w.observed_area() + w.unobserved_area() == doctest::Approx(w.total_area()));
  const Window sub = w.restricted(Rect{0.0, 0.0, 0.5, 1.0});
  CHECK(sub.bounds().xmax == doctest::Approx(0.5));
  CHECK(sub.observed_area() <= w.observed_area());
}

TEST_CASE("point patterns reject invalid points")
{
  CHECK_ERROR_KIND(PointPattern(Rect{}, {{std::nan(""), 0.5}}), ErrorKind::invalid_argument);
  CHECK_ERROR_KIND(PointPattern(Rect{}, {{1.5, 0.5}}), ErrorKind::invalid_argument);
  const PointPattern p(Rect{}, {{0.1, 0.1}, {0.4, 0.9}, {0.6, 0.2}});
  CHECK(p.observed_in(band_window(0.5, 0.25)).size() == 1);
  CHECK(p.restricted(Rect{0.0, 0.0, 0.5, 1.0}).size() == 2);
}
