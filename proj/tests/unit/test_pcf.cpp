#include "support.hpp"

#include "ppkrige/pcf.hpp"
#include "ppkrige/rng.hpp"
#include "ppkrige/set_covariance.hpp"
#include "ppkrige/simulate.hpp"

#include <cmath>
#include <numbers>

using namespace ppk;

TEST_CASE("Poisson pcf estimate is close to one")
{
  const Window w = Window::full();
  const SetCovariance sc(w);
  PcfOptions opts;
  opts.r_max = 0.25;
  std::vector<double> averages;
  std::vector<double> sums(128, 0.0);
  double h = 0.0;
  const int n_sim = 200;
  for (int s = 0; s < n_sim; ++s) {
    const PointPattern p = simulate_poisson(500.0, Rect{}, derive_seed(3, s));
    const PcfFunction g = estimate_pcf(p, w, sc, opts);
    h = std::max(h, g.bandwidth());
    double avg = 0.0;
    int cnt = 0;
    for (std::size_t k = 0; k < g.abscissae().size(); ++k) {
      sums[k] += g.values()[k];
      if (g.abscissae()[k] >= 0.05 && g.abscissae()[k] <= 0.2) {
        avg += g.values()[k];
        ++cnt;
      }
    }
    averages.push_back(avg / cnt);
  }
  const auto ms = testing::mean_se(averages);
  CHECK(std::abs(ms.mean - 1.0) <= 0.05);

  // unbiasedness for r in [2h, r_max]
  const double dr = 0.25 / 128.0;
  for (std::size_t k = 0; k < sums.size(); ++k) {
    const double r = (static_cast<double>(k) + 1.0) * dr;
    if (r >= 2.0 * h) {
      CHECK(sums[k] / n_sim >= 0.9);
      CHECK(sums[k] / n_sim <= 1.1);
    }
  }
}

TEST_CASE("Thomas pcf estimate near the origin")
{
  const ThomasParams params{10.0, 50.0, 0.05, 0};
  const Window w = Window::full();
  const SetCovariance sc(w);
  PcfOptions opts;
  opts.r_max = 0.25;
  double sum = 0.0;
  const int n_sim = 100;
  for (int s = 0; s < n_sim; ++s) {
    ThomasParams p = params;
    p.seed = derive_seed(4, s);
    const PcfFunction g = estimate_pcf(simulate_thomas(p, Rect{}).offspring, w, sc, opts);
    sum += g(0.02);
  }
  const double expected = 1.0 + 3.1831 * std::exp(-0.04);
  CHECK(expected == doctest::Approx(thomas_pcf(params)(0.02)).epsilon(1e-4));
  CHECK(std::abs(sum / n_sim - expected) < 0.1 * expected);
}

TEST_CASE("pcf estimation errors")
{
  const Window w = Window::full();
  CHECK_ERROR_KIND(estimate_pcf(PointPattern(Rect{}, {{0.5, 0.5}}), w), ErrorKind::insufficient_data);
  const PointPattern p = simulate_poisson(100.0, Rect{}, 1);
  PcfOptions opts;
  opts.r_max = 0.9;
  CHECK_ERROR_KIND(estimate_pcf(p, w, opts), ErrorKind::invalid_argument);
}

TEST_CASE("estimated pcf layout and clamping")
{
  const PointPattern p = simulate_poisson(200.0, Rect{}, 8);
  PcfOptions opts;
  opts.r_max = 0.2;
  opts.n_r = 40;
  const PcfFunction g = estimate_pcf(p, Window::full(), opts);
  REQUIRE(g.abscissae().size() == 40);
  CHECK(g.abscissae().front() == doctest::Approx(0.2 / 40));
  CHECK(g.abscissae().back() == doctest::Approx(0.2));
  for (double v : g.values())
    CHECK(v >= 0.0);
  CHECK(g.bandwidth() == doctest::Approx(stoyan_bandwidth(p, Window::full())));
}

TEST_CASE("Stoyan bandwidth examples")
{
  const Window w = Window::full();
  std::vector<Point> pts(500);
  auto rng = make_rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& q : pts)
    q = {u(rng), u(rng)};
  const PointPattern p500(Rect{}, pts);
  CHECK(stoyan_bandwidth(p500, w) == doctest::Approx(0.15 / std::sqrt(500.0)));
  CHECK(stoyan_bandwidth(p500, w) == doctest::Approx(0.006708).epsilon(1e-4));
  const PointPattern p100(Rect{}, std::vector<Point>(pts.begin(), pts.begin() + 100));
  CHECK(stoyan_bandwidth(p100, w) == doctest::Approx(0.015));
  const PointPattern p400(Rect{}, std::vector<Point>(pts.begin(), pts.begin() + 400));
  CHECK(stoyan_bandwidth(p400, w) == stoyan_bandwidth(p100, w) / 2.0);
  CHECK_ERROR_KIND(stoyan_bandwidth(PointPattern(Rect{}, {}), w), ErrorKind::insufficient_data);
}

TEST_CASE("auto bandwidth halves when the pattern has four times the points")
{
  const PointPattern small = simulate_poisson(100.0, Rect{}, 21);
  std::vector<Point> pts;
  for (int rep = 0; rep < 4; ++rep)
    for (const Point& q : small.points())
      pts.push_back({q.x, std::fmod(q.y + 0.1 * rep + 1e-3, 1.0)});
  const PointPattern big(Rect{}, pts);
  PcfOptions opts;
  opts.r_max = 0.2;
  const Window w = Window::full();
  CHECK(estimate_pcf(big, w, opts).bandwidth() == estimate_pcf(small, w, opts).bandwidth() / 2.0);
}

TEST_CASE("translation weight examples")
{
  const Window full = Window::full();
  CHECK(translation_weight({0.0, 0.0}, full) == doctest::Approx(1.0));
  CHECK(translation_weight({0.5, 0.0}, full) == doctest::Approx(0.5));
  CHECK(translation_weight({0.25, 0.4}, full) == doctest::Approx(0.75 * 0.6));

  // band window shifted by its period, against a direct overlap count of the mask
  const Window bands = band_window(0.5, 0.25);
  const double period = bands.bands()->period;
  const int shift = static_cast<int>(std::lround(period * bands.mask_nx()));
  double overlap = 0.0, total = 0.0;
  for (int j = 0; j < bands.mask_ny(); ++j)
    for (int i = 0; i < bands.mask_nx(); ++i) {
      total += bands.pixel(i, j);
      if (i + shift < bands.mask_nx())
        overlap += bands.pixel(i, j) && bands.pixel(i + shift, j);
    }
  CHECK(translation_weight({period, 0.0}, bands) == doctest::Approx(overlap / total).epsilon(1e-9));
}

TEST_CASE("translation weight is symmetric")
{
  const Window w = band_window(0.66, 0.085);
  const SetCovariance sc(w);
  auto rng = make_rng(6);
  std::uniform_real_distribution<double> u(-0.6, 0.6);
  for (int i = 0; i < 200; ++i) {
    const double dx = u(rng), dy = u(rng);
    CHECK(sc.weight(dx, dy) == doctest::Approx(sc.weight(-dx, -dy)).epsilon(1e-12));
  }
}

TEST_CASE("set covariance of the full square interpolates exactly")
{
  const SetCovariance sc(Window::full());
  auto rng = make_rng(7);
  std::uniform_real_distribution<double> u(-0.9, 0.9);
  for (int i = 0; i < 100; ++i) {
    const double dx = u(rng), dy = u(rng);
    CHECK(sc(dx, dy) == doctest::Approx((1.0 - std::abs(dx)) * (1.0 - std::abs(dy))).epsilon(1e-9));
  }
}

TEST_CASE("evaluate_pcf contract")
{
  const PcfFunction t = PcfFunction::thomas(10.0, 0.05);
  CHECK(evaluate_pcf(t, 0.0) == doctest::Approx(1.0 + 1.0 / (4.0 * std::numbers::pi * 10.0 * 0.0025)));
  CHECK(evaluate_pcf(PcfFunction::poisson(), 0.3) == 1.0);

  const PcfFunction e = PcfFunction::empirical({0.1, 0.2, 0.3}, {3.0, 2.0, 1.5}, 0.01);
  CHECK(evaluate_pcf(e, 0.31) == 1.0);
  CHECK(evaluate_pcf(e, 5.0) == 1.0);
  CHECK(evaluate_pcf(e, 0.15) == doctest::Approx(2.5));
  CHECK(evaluate_pcf(e, 0.25) == doctest::Approx(1.75));
  CHECK(evaluate_pcf(e, 0.05) == 3.0);
  CHECK(evaluate_pcf(e, 0.0) == 3.0);
  CHECK(e.range() == 0.3);
  CHECK_ERROR_KIND(evaluate_pcf(e, -0.1), ErrorKind::invalid_argument);
  CHECK_ERROR_KIND(evaluate_pcf(e, std::nan("")), ErrorKind::invalid_argument);

  CHECK_ERROR_KIND(PcfFunction::empirical({0.1, 0.2}, {1.0, std::nan("")}, 0.01), ErrorKind::invalid_pcf);
  CHECK_ERROR_KIND(PcfFunction::empirical({0.2, 0.1}, {1.0, 1.0}, 0.01), ErrorKind::invalid_argument);
}
