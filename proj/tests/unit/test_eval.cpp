#include "support.hpp"

#include "ppkrige/eval.hpp"

#include <omp.h>

#include <cmath>
#include <limits>

using namespace ppk;

namespace {

ExperimentConfig small_config()
{
  ExperimentConfig c;
  c.thomas = ThomasParams{10.0, 50.0, 0.05, 0};
  c.n_sim = 6;
  c.windows = {{0.5, 0.25}, {0.66, 0.17}};
  c.grid_sizes = {12, 24};
  c.mask_resolution = 128;
  c.seed = 7;
  c.max_skip_fraction = 1.0;
  return c;
}

bool same_report(const EvalReport& a, const EvalReport& b)
{
  if (a.results.size() != b.results.size() || a.sim_seeds != b.sim_seeds)
    return false;
  for (std::size_t i = 0; i < a.results.size(); ++i) {
    const auto& x = a.results[i];
    const auto& y = b.results[i];
    if (x.mb != y.mb || x.msep != y.msep || x.mb_se != y.mb_se || x.r2.size() != y.r2.size())
      return false;
    for (std::size_t k = 0; k < x.r2.size(); ++k)
      if (!(x.r2[k] == y.r2[k] || (std::isnan(x.r2[k]) && std::isnan(y.r2[k]))))
        return false;
  }
  return true;
}

} // namespace

TEST_CASE("r_squared examples")
{
  const std::vector<double> truth{1.0, 2.0, 3.0, 4.0};
  CHECK(r_squared(truth, truth) == doctest::Approx(1.0));
  const std::vector<double> flat{2.0, 2.0, 2.0, 2.0};
  CHECK(r_squared(flat, truth) == 0.0);

  // longhand: x = (1, 2, 3), y = (1.1, 1.9, 3.2); Sxx = 2, Sxy = 2.1, Syy = 2.2467
  const std::vector<double> x{1.0, 2.0, 3.0};
  const std::vector<double> y{1.1, 1.9, 3.2};
  const double my = (1.1 + 1.9 + 3.2) / 3.0;
  const double sxy = (-1.0) * (1.1 - my) + 0.0 + 1.0 * (3.2 - my);
  const double syy = (1.1 - my) * (1.1 - my) + (1.9 - my) * (1.9 - my) + (3.2 - my) * (3.2 - my);
  CHECK(r_squared(y, x) == doctest::Approx(sxy * sxy / (2.0 * syy)).epsilon(1e-14));
  CHECK(r_squared(y, x) == doctest::Approx(0.98145).epsilon(1e-4));

  CHECK_ERROR_KIND(r_squared(y, std::vector<double>{5.0, 5.0, 5.0}), ErrorKind::undefined_r2);
  CHECK_ERROR_KIND(r_squared(std::vector<double>{1.0, 2.0}, std::vector<double>{1.0, 3.0}), ErrorKind::undefined_r2);
  CHECK_ERROR_KIND(r_squared(y, truth), ErrorKind::invalid_argument);
}

TEST_CASE("experiment configuration validation")
{
  ExperimentConfig c = small_config();
  c.n_sim = 1;
  CHECK_ERROR_KIND(run_experiment(c), ErrorKind::invalid_argument);
  c = small_config();
  c.grid_sizes = {4};
  CHECK_ERROR_KIND(run_experiment(c), ErrorKind::invalid_argument);
  c = small_config();
  c.windows = {{0.5, 0.3}};
  CHECK_ERROR_KIND(run_experiment(c), ErrorKind::invalid_argument);
  CHECK(parse_pcf_mode("estimated") == PcfMode::estimated);
  CHECK_ERROR_KIND(parse_pcf_mode("fitted"), ErrorKind::invalid_argument);
}

TEST_CASE("experiment report structure and invariants")
{
  const EvalReport r = run_experiment(small_config());
  REQUIRE(r.results.size() == 2 * 2 * 2);
  CHECK(r.sim_seeds.size() == 6);
  for (const auto& res : r.results) {
    CHECK(res.n_used + res.n_skipped == 6);
    CHECK(res.r2.size() == res.n_used);
    CHECK(res.msep >= 0.0);
    CHECK(res.msep >= res.mb * res.mb);
    for (double v : res.r2)
      if (!std::isnan(v))
        CHECK(v <= 1.0 + 1e-12);
    CHECK(res.n_unobserved_cells > 0);
  }
  const auto& known = r.find({0.5, 0.25}, 24, PcfMode::known);
  CHECK(known.grid_size == 24);
  CHECK(known.n_unobserved_cells == 24 * 12);
  CHECK_ERROR_KIND(r.find({0.5, 0.25}, 96, PcfMode::known), ErrorKind::invalid_argument);
}

TEST_CASE("skipped simulations are counted and can fail the run")
{
  // seed 7 has one simulation whose estimated pcf gives an indefinite covariance
  ExperimentConfig c = small_config();
  const EvalReport r = run_experiment(c);
  std::size_t skipped = 0;
  for (const auto& res : r.results) {
    skipped += res.n_skipped;
    if (res.mode == PcfMode::known)
      CHECK(res.n_skipped == 0);
  }
  CHECK(skipped > 0);
  c.max_skip_fraction = 0.05;
  CHECK_ERROR_KIND(run_experiment(c), ErrorKind::singular_covariance);
}

TEST_CASE("experiments are deterministic and thread-count independent")
{
  ExperimentConfig c = small_config();
  c.windows = {{0.5, 0.25}};
  c.grid_sizes = {16};
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const EvalReport a = run_experiment(c);
  const EvalReport b = run_experiment(c);
  omp_set_num_threads(3);
  const EvalReport d = run_experiment(c);
  omp_set_num_threads(saved);
  CHECK(same_report(a, b));
  CHECK(same_report(a, d));
  c.seed = 8;
  CHECK_FALSE(same_report(a, run_experiment(c)));
}
