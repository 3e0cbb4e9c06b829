#include "ppkrige/eval.hpp"

#include "ppkrige/error.hpp"
#include "ppkrige/kriging.hpp"
#include "ppkrige/log.hpp"
#include "ppkrige/pcf.hpp"
#include "ppkrige/rng.hpp"
#include "ppkrige/set_covariance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <memory>
#include <optional>
#include <string>

namespace ppk {

std::string_view to_string(PcfMode mode)
{
  return mode == PcfMode::known ? "known" : "estimated";
}

PcfMode parse_pcf_mode(std::string_view name)
{
  if (name == "known")
    return PcfMode::known;
  if (name == "estimated")
    return PcfMode::estimated;
  fail(ErrorKind::invalid_argument, "unknown pcf mode '" + std::string(name) + "'");
}

void ExperimentConfig::validate() const
{
  thomas.validate();
  require(n_sim >= 2, "n_sim must be at least 2");
  require(!windows.empty(), "at least one window configuration is needed");
  require(!grid_sizes.empty(), "at least one grid size is needed");
  for (int g : grid_sizes)
    require(g >= 8, "grid sizes must be at least 8");
  require(!modes.empty(), "at least one pcf mode is needed");
  require(mask_resolution >= Window::min_resolution, "mask resolution must be at least 64");
  require(r_max > 0.0 && n_r >= 2, "pcf range and resolution must be positive");
  require(max_skip_fraction >= 0.0 && max_skip_fraction <= 1.0, "skip fraction must lie in [0, 1]");
  for (const auto& w : windows)
    band_layout(w.rate, w.band_width);
}

const ConfigResult& EvalReport::find(BandConfig window, int grid_size, PcfMode mode) const
{
  for (const auto& r : results)
    if (r.window.rate == window.rate && r.window.band_width == window.band_width && r.grid_size == grid_size &&
        r.mode == mode)
      return r;
  fail(ErrorKind::invalid_argument, "no such configuration in the report");
}

double r_squared(std::span<const double> predicted, std::span<const double> truth)
{
  require(predicted.size() == truth.size(), "R^2 needs paired values");
  if (truth.size() < 3)
    fail(ErrorKind::undefined_r2, "R^2 needs at least three pairs");
  const double n = static_cast<double>(truth.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    mx += truth[i];
    my += predicted[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double dx = truth[i] - mx;
    const double dy = predicted[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (!(sxx > 0.0))
    fail(ErrorKind::undefined_r2, "truth values are all equal");
  if (syy == 0.0)
    return 0.0;
  return sxy * sxy / (sxx * syy);
}

namespace {

double quantile(std::vector<double> v, double p)
{
  if (v.empty())
    return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double pos = p * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double r2_or_nan(std::span<const double> predicted, std::span<const double> truth)
{
  try {
    return r_squared(predicted, truth);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::undefined_r2)
      throw;
    return std::numeric_limits<double>::quiet_NaN();
  }
}

struct Outcome
{
  bool skipped = false;
  double mean_error = 0.0;
  double mean_sq_error = 0.0;
  double r2 = 0.0;
  double r2_all = 0.0;
  double seconds = 0.0;
};

struct Slot
{
  std::size_t window = 0;
  int grid_size = 0;
  PcfMode mode = PcfMode::known;
};

struct WindowSetup
{
  BandLayout layout;
  Window unit;
  Window extended;
  std::unique_ptr<SetCovariance> setcov; // extended window, estimated mode only
  std::vector<ObservationGrid> grids;   // one per grid size
};

} // namespace

EvalReport run_experiment(const ExperimentConfig& config)
{
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const bool need_estimate =
    std::find(config.modes.begin(), config.modes.end(), PcfMode::estimated) != config.modes.end();

  std::vector<WindowSetup> setups;
  double widest = 1.0;
  for (const auto& w : config.windows) {
    WindowSetup s;
    s.layout = band_layout(w.rate, w.band_width);
    s.unit = band_window(w.rate, w.band_width, Rect{}, config.mask_resolution, config.mask_resolution);
    s.extended = extended_band_window(w.rate, w.band_width, config.mask_resolution, config.mask_resolution);
    widest = std::max(widest, s.extended.bounds().xmax);
    if (need_estimate)
      s.setcov = std::make_unique<SetCovariance>(s.extended);
    for (int g : config.grid_sizes)
      s.grids.push_back(build_grid_n(s.unit, g));
    setups.push_back(std::move(s));
  }
  const Rect sim_region{0.0, 0.0, widest, 1.0};

  std::vector<Slot> slots;
  for (std::size_t w = 0; w < setups.size(); ++w)
    for (int g : config.grid_sizes)
      for (PcfMode m : config.modes)
        slots.push_back({w, g, m});

  const auto n_sim = static_cast<std::size_t>(config.n_sim);
  std::vector<std::uint64_t> seeds(n_sim);
  for (std::size_t k = 0; k < n_sim; ++k)
    seeds[k] = derive_seed(config.seed, k);

  std::vector<Outcome> outcomes(n_sim * slots.size());
  std::vector<std::exception_ptr> errors(n_sim);
  const PcfFunction known_g = thomas_pcf(config.thomas);

#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t kk = 0; kk < static_cast<std::ptrdiff_t>(n_sim); ++kk) {
    const auto k = static_cast<std::size_t>(kk);
    try {
      ThomasParams params = config.thomas;
      params.seed = seeds[k];
      const SimulatedRealization real = simulate_thomas(params, sim_region);
      const PointPattern unit_pattern = real.offspring.restricted(Rect{});

      std::size_t slot = 0;
      for (const auto& setup : setups) {
        const PointPattern observed = unit_pattern.observed_in(setup.unit);
        const double lambda_hat = static_cast<double>(observed.size()) / setup.unit.observed_area();
        std::optional<PcfFunction> estimated_g;
        if (need_estimate) {
          const PointPattern ext = real.offspring.restricted(setup.extended.bounds());
          PcfOptions opts;
          opts.r_max = config.r_max;
          opts.n_r = config.n_r;
          estimated_g = estimate_pcf(ext, setup.extended, *setup.setcov, opts);
        }
        for (const auto& grid : setup.grids) {
          const std::vector<int> counts = count_on_grid(observed, grid);
          const std::vector<double> truth = thomas_local_intensity(real, grid);
          const std::vector<std::size_t> unobserved = grid.unobserved_cells();
          std::vector<double> truth_u(unobserved.size());
          for (std::size_t i = 0; i < unobserved.size(); ++i)
            truth_u[i] = truth[unobserved[i]];

          for (PcfMode mode : config.modes) {
            const auto ts = std::chrono::steady_clock::now();
            Outcome& out = outcomes[k * slots.size() + slot++];
            CountFieldModel model;
            model.lambda = lambda_hat;
            model.g = mode == PcfMode::known ? known_g : *estimated_g;
            model.cell_side = grid.cell_side();
            model.level = config.level;
            try {
              const IntensitySurface surface = krige_intensity(model, grid, counts, {.compute_variance = false});
              std::vector<double> pred_u(unobserved.size());
              double se = 0.0, sse = 0.0;
              for (std::size_t i = 0; i < unobserved.size(); ++i) {
                pred_u[i] = surface.intensity[unobserved[i]];
                const double e = pred_u[i] - truth_u[i];
                se += e;
                sse += e * e;
              }
              const double nu = static_cast<double>(std::max<std::size_t>(1, unobserved.size()));
              out.mean_error = se / nu;
              out.mean_sq_error = sse / nu;
              out.r2 = r2_or_nan(pred_u, truth_u);
              out.r2_all = r2_or_nan(surface.intensity, truth);
            } catch (const Error& e) {
              if (e.kind() != ErrorKind::singular_covariance)
                throw;
              out.skipped = true;
            }
            out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - ts).count();
          }
        }
      }
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e)
      std::rethrow_exception(e);

  EvalReport report;
  report.config = config;
  report.sim_seeds = seeds;
  for (std::size_t s = 0; s < slots.size(); ++s) {
    const WindowSetup& setup = setups[slots[s].window];
    ConfigResult r;
    r.window = config.windows[slots[s].window];
    r.layout = setup.layout;
    r.grid_size = slots[s].grid_size;
    r.mode = slots[s].mode;
    for (const auto& g : setup.grids)
      if (g.nx() == r.grid_size)
        r.n_unobserved_cells = g.size() - g.n_observed();

    std::vector<double> mean_errors, r2_defined, r2_all;
    double msep = 0.0;
    for (std::size_t k = 0; k < n_sim; ++k) {
      const Outcome& o = outcomes[k * slots.size() + s];
      r.runtime_seconds += o.seconds;
      if (o.skipped) {
        ++r.n_skipped;
        continue;
      }
      mean_errors.push_back(o.mean_error);
      msep += o.mean_sq_error;
      r.r2.push_back(o.r2);
      if (std::isnan(o.r2))
        ++r.n_undefined_r2;
      else
        r2_defined.push_back(o.r2);
      if (!std::isnan(o.r2_all))
        r2_all.push_back(o.r2_all);
    }
    r.n_used = mean_errors.size();
    if (r.n_skipped > config.max_skip_fraction * static_cast<double>(n_sim))
      fail(ErrorKind::singular_covariance,
           "too many simulations skipped for a singular covariance (" + std::to_string(r.n_skipped) + " of " +
             std::to_string(n_sim) + ")");
    if (r.n_skipped > 0)
      log_warn("skipped " + std::to_string(r.n_skipped) + " simulations with a singular covariance");
    const double n_used = static_cast<double>(r.n_used);
    if (r.n_used > 0) {
      double sum = 0.0;
      for (double e : mean_errors)
        sum += e;
      r.mb = sum / n_used;
      double ss = 0.0;
      for (double e : mean_errors)
        ss += (e - r.mb) * (e - r.mb);
      r.mb_se = r.n_used > 1 ? std::sqrt(ss / (n_used - 1.0) / n_used) : 0.0;
      r.msep = msep / n_used;
    }
    r.r2_median = quantile(r2_defined, 0.5);
    r.r2_q1 = quantile(r2_defined, 0.25);
    r.r2_q3 = quantile(r2_defined, 0.75);
    r.r2_all_median = quantile(r2_all, 0.5);
    report.results.push_back(std::move(r));
  }
  report.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

} // namespace ppk
