#include "support.hpp"

#include "ppkrige/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

using namespace ppk;

namespace {

double normal_cdf(double x)
{
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

// upper 1% point of chi-square via the Wilson-Hilferty approximation
double chi_square_99(double df)
{
  const double z = 2.326347874;
  const double a = 2.0 / (9.0 * df);
  return df * std::pow(1.0 - a + z * std::sqrt(a), 3.0);
}

double poisson_pmf(int k, double mean)
{
  return std::exp(k * std::log(mean) - mean - std::lgamma(k + 1.0));
}

} // namespace

TEST_CASE("Thomas mean offspring count")
{
  ThomasParams p{10.0, 50.0, 0.05, 0};
  std::vector<double> n;
  for (std::uint64_t s = 0; s < 1000; ++s) {
    p.seed = s;
    n.push_back(static_cast<double>(simulate_thomas(p, Rect{}).offspring.size()));
  }
  const auto ms = testing::mean_se(n);
  CHECK(std::abs(ms.mean - 500.0) < 3.0 * ms.se);
}

TEST_CASE("tiny offspring mean gives empty patterns")
{
  const ThomasParams p{10.0, 1e-9, 0.05, 3};
  CHECK(simulate_thomas(p, Rect{}).offspring.empty());
}

TEST_CASE("simulation is deterministic per seed")
{
  const ThomasParams p{10.0, 50.0, 0.05, 42};
  const auto a = simulate_thomas(p, Rect{});
  const auto b = simulate_thomas(p, Rect{});
  CHECK(a.offspring == b.offspring);
  CHECK(a.parents == b.parents);
  ThomasParams q = p;
  q.seed = 43;
  CHECK_FALSE(simulate_thomas(q, Rect{}).offspring == a.offspring);
  CHECK(simulate_poisson(100.0, Rect{}, 5) == simulate_poisson(100.0, Rect{}, 5));
}

TEST_CASE("invalid Thomas parameters are rejected")
{
  CHECK_ERROR_KIND(simulate_thomas(ThomasParams{0.0, 50.0, 0.05, 0}, Rect{}), ErrorKind::invalid_argument);
  CHECK_ERROR_KIND(simulate_thomas(ThomasParams{10.0, -1.0, 0.05, 0}, Rect{}), ErrorKind::invalid_argument);
  CHECK_ERROR_KIND(simulate_thomas(ThomasParams{10.0, 50.0, 0.0, 0}, Rect{}), ErrorKind::invalid_argument);
}

TEST_CASE("every offspring has a parent and parents cover the buffer")
{
  const ThomasParams p{10.0, 50.0, 0.05, 9};
  const auto r = simulate_thomas(p, Rect{});
  REQUIRE(r.parent_of.size() == r.offspring.size());
  for (auto idx : r.parent_of)
    CHECK(idx < r.parents.size());
  CHECK(r.parents.bounds() == Rect{}.dilated(thomas_buffer_sigmas * p.sigma));
  CHECK(r.offspring_drawn.size() == r.parents.size());
}

TEST_CASE("local intensity of a single parent")
{
  SimulatedRealization r;
  r.params = ThomasParams{10.0, 50.0, 0.05, 0};
  r.parents = PointPattern(Rect{}.dilated(0.2), {{0.5, 0.5}});
  CHECK(thomas_local_intensity(r, Point{0.5, 0.5}) == doctest::Approx(50.0 / (2.0 * std::numbers::pi * 0.0025)));
  CHECK(thomas_local_intensity(r, Point{0.5, 0.5}) == doctest::Approx(3183.1).epsilon(1e-4));
  CHECK(thomas_local_intensity(r, Point{0.5, 1e6}) == 0.0);

  // analytic gradient against central differences
  for (Point x : {Point{0.52, 0.47}, Point{0.4, 0.61}}) {
    const double e = 1e-6;
    const Point g = thomas_intensity_gradient(r, x);
    const double gx = (thomas_local_intensity(r, Point{x.x + e, x.y}) - thomas_local_intensity(r, Point{x.x - e, x.y})) / (2 * e);
    const double gy = (thomas_local_intensity(r, Point{x.x, x.y + e}) - thomas_local_intensity(r, Point{x.x, x.y - e})) / (2 * e);
    CHECK(g.x == doctest::Approx(gx).epsilon(1e-5));
    CHECK(g.y == doctest::Approx(gy).epsilon(1e-5));
  }
}

TEST_CASE("local intensity integrates to mu times the parent count")
{
  const ThomasParams p{10.0, 50.0, 0.05, 11};
  const auto r = simulate_thomas(p, Rect{});
  // quadrature over the parent region dilated by a further 6 sigma
  const Rect region = r.parents.bounds().dilated(6.0 * p.sigma);
  const int n = 600;
  const double dx = region.width() / n, dy = region.height() / n;
  std::vector<Point> at;
  at.reserve(static_cast<std::size_t>(n) * n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      at.push_back({region.xmin + (i + 0.5) * dx, region.ymin + (j + 0.5) * dy});
  const std::vector<double> lam = thomas_local_intensity(r, at);
  double integral = 0.0;
  for (double v : lam)
    integral += v * dx * dy;
  CHECK(integral == doctest::Approx(p.mu * static_cast<double>(r.parents.size())).epsilon(0.01));
}

TEST_CASE("grid evaluation uses cell centres")
{
  const ThomasParams p{10.0, 50.0, 0.05, 12};
  const auto r = simulate_thomas(p, Rect{});
  const ObservationGrid g = build_grid_n(Window::full(), 24);
  const std::vector<double> v = thomas_local_intensity(r, g);
  for (std::size_t c : {std::size_t{0}, std::size_t{100}, std::size_t{575}})
    CHECK(v[c] == doctest::Approx(thomas_local_intensity(r, g.center(c))));
}

TEST_CASE("Thomas pcf closed form")
{
  const PcfFunction g = thomas_pcf(ThomasParams{10.0, 50.0, 0.05, 0});
  CHECK(g(0.0) == doctest::Approx(1.0 + 1.0 / (4.0 * std::numbers::pi * 10.0 * 0.0025)));
  CHECK(g(0.0) == doctest::Approx(4.1831).epsilon(1e-4));
  CHECK(g(0.5) == doctest::Approx(1.0).epsilon(1e-10));
  double prev = g(0.0);
  for (double r = 0.001; r < 0.4; r += 0.001) {
    CHECK(g(r) < prev);
    prev = g(r);
  }
}

TEST_CASE("Poisson simulation mean count")
{
  std::vector<double> n;
  for (std::uint64_t s = 0; s < 1000; ++s)
    n.push_back(static_cast<double>(simulate_poisson(100.0, Rect{}, s).size()));
  const auto ms = testing::mean_se(n);
  CHECK(std::abs(ms.mean - 100.0) < 3.0 * ms.se);
  CHECK(simulate_poisson(1e-9, Rect{}, 1).empty());
}

TEST_CASE("offspring counts per parent are Poisson")
{
  const double mu = 50.0;
  std::vector<std::uint32_t> drawn;
  for (std::uint64_t s = 0; drawn.size() < 10000; ++s) {
    const auto r = simulate_thomas(ThomasParams{1000.0, mu, 0.01, s}, Rect{});
    drawn.insert(drawn.end(), r.offspring_drawn.begin(), r.offspring_drawn.end());
  }
  const double n = static_cast<double>(drawn.size());
  // bins: [0, 35], single values 36..64, [65, inf)
  std::map<int, double> observed;
  for (auto d : drawn)
    observed[std::clamp(static_cast<int>(d), 35, 65)] += 1.0;
  double chi2 = 0.0;
  int bins = 0;
  double cdf_low = 0.0;
  for (int k = 0; k <= 35; ++k)
    cdf_low += poisson_pmf(k, mu);
  double total = 0.0;
  for (int k = 35; k <= 65; ++k) {
    double p = 0.0;
    if (k == 35)
      p = cdf_low;
    else if (k == 65)
      p = 1.0 - total;
    else
      p = poisson_pmf(k, mu);
    total += p;
    const double e = n * p;
    chi2 += (observed[k] - e) * (observed[k] - e) / e;
    ++bins;
  }
  CHECK(chi2 < chi_square_99(bins - 1));
}

TEST_CASE("buffered simulation keeps edge bias small")
{
  // expected retained offspring / (kappa mu) for parents on the buffered
  // square: product of one-dimensional integrals of P(parent + eps in [0, 1])
  const double sigma = 0.05;
  const double lo = -thomas_buffer_sigmas * sigma, hi = 1.0 + thomas_buffer_sigmas * sigma;
  const int n = 20000;
  double one_d = 0.0;
  for (int i = 0; i < n; ++i) {
    const double p = lo + (i + 0.5) * (hi - lo) / n;
    one_d += (normal_cdf((1.0 - p) / sigma) - normal_cdf(-p / sigma)) * (hi - lo) / n;
  }
  const double retained = one_d * one_d;
  CHECK(retained > 0.995);
  CHECK(retained <= 1.0 + 1e-12);

  std::vector<double> counts;
  for (std::uint64_t s = 0; s < 400; ++s)
    counts.push_back(static_cast<double>(simulate_thomas(ThomasParams{10.0, 50.0, sigma, 1000 + s}, Rect{}).offspring.size()));
  const auto ms = testing::mean_se(counts);
  CHECK(std::abs(ms.mean - 500.0 * retained) < 3.0 * ms.se);
}

TEST_CASE("gradient integral of a flat realization is zero")
{
  SimulatedRealization r;
  r.params = ThomasParams{10.0, 50.0, 0.05, 0};
  r.parents = PointPattern(Rect{}.dilated(0.2), {});
  CHECK(thomas_gradient_integral(r, Window::full(), 100) == 0.0);
}
