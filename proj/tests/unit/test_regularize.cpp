#include "support.hpp"

#include "ppkrige/regularize.hpp"
#include "ppkrige/rng.hpp"
#include "ppkrige/simulate.hpp"

#include <cmath>

using namespace ppk;

namespace {

CountFieldModel thomas_model(double lambda, double b, Approximation level, int m = 4)
{
  CountFieldModel model;
  model.lambda = lambda;
  model.g = PcfFunction::thomas(10.0, 0.05);
  model.cell_side = b;
  model.level = level;
  model.quadrature_points = m;
  return model;
}

// Straight four-fold midpoint sum over two squares of side b.
double brute_pair_integral(const PcfFunction& g, Point ci, Point cj, double b, int m)
{
  const double h = b / m;
  double sum = 0.0;
  for (int a = 0; a < m; ++a)
    for (int c = 0; c < m; ++c) {
      const Point x{ci.x - b / 2 + (a + 0.5) * h, ci.y - b / 2 + (c + 0.5) * h};
      for (int d = 0; d < m; ++d)
        for (int e = 0; e < m; ++e) {
          const Point y{cj.x - b / 2 + (d + 0.5) * h, cj.y - b / 2 + (e + 0.5) * h};
          sum += g(distance(x, y)) - 1.0;
        }
    }
  return sum * h * h * h * h;
}

} // namespace

TEST_CASE("count field mean")
{
  CountFieldModel m;
  m.lambda = 500.0;
  m.cell_side = 1.0 / 96.0;
  CHECK(count_field_mean(m) == doctest::Approx(500.0 / 9216.0));
  CHECK(count_field_mean(m) == doctest::Approx(0.05425).epsilon(1e-3));
  m.lambda = 1.0;
  m.cell_side = 1.0;
  CHECK(count_field_mean(m) == 1.0);
  m.cell_side = 1e-6;
  CHECK(count_field_mean(m) < 1e-11);
  m.lambda = -1.0;
  CHECK_ERROR_KIND(count_field_mean(m), ErrorKind::invalid_argument);
}

TEST_CASE("Poisson count covariance at every level")
{
  for (auto level : {Approximation::fine_integral, Approximation::midpoint, Approximation::diagonal}) {
    CountFieldModel m;
    m.lambda = 300.0;
    m.g = PcfFunction::poisson();
    m.cell_side = 0.1;
    m.level = level;
    CHECK(count_covariance(m, {0.05, 0.05}, {0.15, 0.05}) == 0.0);
    CHECK(count_covariance(m, {0.05, 0.05}, {0.05, 0.05}) == doctest::Approx(3.0));
  }
}

TEST_CASE("midpoint and fine levels agree for small cells")
{
  const double b = 0.02;
  const auto mid = thomas_model(500.0, b, Approximation::midpoint);
  const auto fine = thomas_model(500.0, b, Approximation::fine_integral, 16);
  const double a = count_covariance(mid, {0.01, 0.01}, {0.03, 0.01});
  const double f = count_covariance(fine, {0.01, 0.01}, {0.03, 0.01});
  CHECK(std::abs(a - f) / std::abs(f) < 0.05);
  CHECK(count_covariance(thomas_model(500.0, b, Approximation::diagonal), {0.01, 0.01}, {0.03, 0.01}) == 0.0);
}

TEST_CASE("fine level matches a brute-force quadrature")
{
  const auto model = thomas_model(500.0, 0.05, Approximation::fine_integral, 5);
  for (Point cj : {Point{0.075, 0.025}, Point{0.125, 0.175}, Point{0.025, 0.025}}) {
    const Point ci{0.025, 0.025};
    const double oracle = 500.0 * 500.0 * brute_pair_integral(model.g, ci, cj, 0.05, 5) +
                          (ci == cj ? model.nugget() : 0.0);
    CHECK(count_covariance(model, ci, cj) == doctest::Approx(oracle).epsilon(1e-10));
    const Rect a{0.0, 0.0, 0.05, 0.05};
    const Rect b{cj.x - 0.025, cj.y - 0.025, cj.x + 0.025, cj.y + 0.025};
    CHECK(pair_integral_minus_one(model.g, a, b, 5, 0.05) ==
          doctest::Approx(brute_pair_integral(model.g, ci, cj, 0.05, 5)).epsilon(1e-10));
  }
}

TEST_CASE("fine level approaches midpoint as cells shrink")
{
  double prev = 0.0;
  for (double b : {0.04, 0.02, 0.01}) {
    const double mid = count_covariance(thomas_model(500.0, b, Approximation::midpoint), {0, 0}, {b, 0});
    const double fine = count_covariance(thomas_model(500.0, b, Approximation::fine_integral, 16), {0, 0}, {b, 0});
    const double rel = std::abs(mid - fine) / std::abs(fine);
    if (prev > 0.0)
      CHECK(rel <= prev / 2.0);
    prev = rel;
  }
}

TEST_CASE("assembled covariance matches per-pair oracle")
{
  const Window w = Window::full();
  for (auto level : {Approximation::midpoint, Approximation::fine_integral}) {
    const ObservationGrid grid = build_grid_n(w, 4);
    const auto model = thomas_model(500.0, 0.25, level);
    const CovarianceMatrix cov = assemble_covariance(model, grid);
    REQUIRE(cov.size() == 16);
    const Eigen::MatrixXd d = cov.dense();
    for (std::size_t a = 0; a < 16; ++a)
      for (std::size_t b = 0; b < 16; ++b) {
        const double oracle = count_covariance(model, grid.center(cov.cells()[a]), grid.center(cov.cells()[b]));
        CHECK(d(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) ==
              doctest::Approx(oracle).epsilon(1e-12));
      }
    CHECK((d - d.transpose()).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("Poisson covariance is a scaled identity")
{
  const ObservationGrid grid = build_grid_n(band_window(0.5, 0.25), 12);
  CountFieldModel m;
  m.lambda = 200.0;
  m.cell_side = grid.cell_side();
  const Eigen::MatrixXd d = assemble_covariance(m, grid).dense();
  const Eigen::Index n = d.rows();
  CHECK((d - m.nugget() * Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("empirical pcf beyond its range gives zero covariance")
{
  // observed cells at opposite corners of a 4 x 4 grid
  std::vector<std::uint8_t> mask(64 * 64, 0);
  for (int j = 0; j < 16; ++j)
    for (int i = 0; i < 16; ++i) {
      mask[static_cast<std::size_t>(j) * 64 + i] = 1;
      mask[static_cast<std::size_t>(63 - j) * 64 + (63 - i)] = 1;
    }
  const ObservationGrid grid = build_grid_n(Window::from_mask(Rect{}, 64, 64, mask), 4);
  REQUIRE(grid.n_observed() == 2);
  CountFieldModel m;
  m.lambda = 100.0;
  m.g = PcfFunction::empirical({0.05, 0.1, 0.2}, {3.0, 2.0, 1.2}, 0.01);
  m.cell_side = 0.25;
  const Eigen::MatrixXd d = assemble_covariance(m, grid).dense();
  CHECK(d(0, 1) == 0.0);
  CHECK(d(1, 0) == 0.0);
}

TEST_CASE("assembly errors")
{
  std::vector<std::uint8_t> mask(64 * 64, 0);
  for (int j = 0; j < 16; ++j)
    for (int i = 0; i < 16; ++i)
      mask[static_cast<std::size_t>(j) * 64 + i] = 1;
  const ObservationGrid one = build_grid_n(Window::from_mask(Rect{}, 64, 64, mask), 4);
  REQUIRE(one.n_observed() == 1);
  CountFieldModel m;
  m.lambda = 100.0;
  m.cell_side = 0.25;
  CHECK_ERROR_KIND(assemble_covariance(m, one), ErrorKind::insufficient_data);
  m.cell_side = 0.2;
  CHECK_ERROR_KIND(assemble_covariance(m, build_grid_n(Window::full(), 4)), ErrorKind::invalid_argument);
}

TEST_CASE("covariance factor jitter path")
{
  const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(3, 3);
  const CovarianceFactor f(ones);
  CHECK(f.attempts() == 2);
  CHECK(f.jitter() == doctest::Approx(1e-8));
  // the retry must use the intact matrix: (J + eps I) x = 1 has x_i = 1 / (3 + eps)
  const Eigen::VectorXd x = f.solve(Eigen::VectorXd(Eigen::VectorXd::Ones(3)));
  for (Eigen::Index i = 0; i < 3; ++i)
    CHECK(x[i] == doctest::Approx(1.0 / (3.0 + 1e-8)).epsilon(1e-6));

  CHECK_ERROR_KIND(CovarianceFactor(Eigen::MatrixXd(-Eigen::MatrixXd::Identity(3, 3))), ErrorKind::singular_covariance);
  Eigen::MatrixXd bad = Eigen::MatrixXd::Identity(2, 2);
  bad(0, 1) = std::nan("");
  CHECK_ERROR_KIND(CovarianceFactor(bad), ErrorKind::invalid_pcf);

  const CovarianceFactor plain(Eigen::MatrixXd(2.0 * Eigen::MatrixXd::Identity(4, 4)));
  CHECK(plain.jitter() == 0.0);
  CHECK(plain.attempts() == 1);
}

TEST_CASE("covariance factor solves")
{
  auto rng = make_rng(13);
  std::normal_distribution<double> z;
  Eigen::MatrixXd a(20, 20);
  for (Eigen::Index i = 0; i < a.size(); ++i)
    a.data()[i] = z(rng);
  const Eigen::MatrixXd spd = a * a.transpose() + 20.0 * Eigen::MatrixXd::Identity(20, 20);
  const CovarianceFactor f(spd);
  Eigen::VectorXd rhs(20);
  for (Eigen::Index i = 0; i < 20; ++i)
    rhs[i] = z(rng);
  const Eigen::VectorXd x = f.solve(rhs);
  CHECK((spd * x - rhs).cwiseAbs().maxCoeff() < 1e-10);
  Eigen::MatrixXd m = rhs;
  f.solve_lower_in_place(m);
  CHECK(m.squaredNorm() == doctest::Approx(rhs.dot(x)).epsilon(1e-10));
}

TEST_CASE("theoretical variogram for Poisson counts")
{
  CountFieldModel m;
  m.lambda = 400.0;
  m.cell_side = 0.1;
  CHECK(theoretical_variogram(m, {0.1, 0.0}) == doctest::Approx(4.0));
  CHECK(theoretical_variogram(m, {0.3, 0.2}) == doctest::Approx(4.0));
  // half overlap: nu(B \ D) = b^2 / 2
  CHECK(theoretical_variogram(m, {0.05, 0.0}) == doctest::Approx(400.0 * 0.005));
  CHECK(theoretical_variogram(m, {0.0, 0.0}) == 0.0);
}

TEST_CASE("theoretical variogram agrees with variance minus covariance for disjoint cells")
{
  const double b = 0.1;
  const auto model = thomas_model(500.0, b, Approximation::fine_integral, 8);
  for (Point lag : {Point{b, 0.0}, Point{2 * b, 0.0}, Point{b, b}}) {
    const double var = count_covariance(model, {0, 0}, {0, 0});
    const double cov = count_covariance(model, {0, 0}, lag);
    CHECK(theoretical_variogram(model, lag) == doctest::Approx(var - cov).epsilon(1e-9));
  }
}

TEST_CASE("Poisson count moments")
{
  const ObservationGrid grid = build_grid(Window::full(), 0.1);
  std::vector<PointPattern> patterns;
  for (std::uint64_t s = 0; s < 200; ++s)
    patterns.push_back(simulate_poisson(500.0, Rect{}, derive_seed(17, s)));
  const std::vector<CellOffset> lags{{5, 0}, {3, 4}};
  const CountMoments mom = empirical_count_moments(patterns, grid, lags);
  CHECK(mom.n_patterns == 200);
  CHECK(std::abs(mom.mean.value - 5.0) < 3.0 * mom.mean.se);
  CHECK(std::abs(mom.variance.value - 5.0) < 3.0 * mom.variance.se);
  for (const auto& l : mom.lags) {
    CHECK(std::abs(l.covariance.value) < 3.0 * l.covariance.se);
    CHECK(std::abs(l.variogram.value - 5.0) < 3.0 * l.variogram.se);
  }
  CHECK_ERROR_KIND(empirical_count_moments(std::span(patterns).first(1), grid), ErrorKind::invalid_argument);
}

TEST_CASE("Thomas counts are overdispersed")
{
  const ObservationGrid grid = build_grid(Window::full(), 0.1);
  int over = 0;
  const int batches = 40;
  for (int batch = 0; batch < batches; ++batch) {
    std::vector<PointPattern> patterns;
    for (int s = 0; s < 10; ++s)
      patterns.push_back(simulate_thomas(ThomasParams{10.0, 50.0, 0.05, derive_seed(batch, s)}, Rect{}).offspring);
    const CountMoments mom = empirical_count_moments(patterns, grid);
    over += mom.variance.value > mom.mean.value ? 1 : 0;
  }
  CHECK(over >= 0.95 * batches);
}
