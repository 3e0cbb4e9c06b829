#pragma once

#include "ppkrige/geometry.hpp"
#include "ppkrige/regularize.hpp"
#include "ppkrige/simulate.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ppk {

enum class PcfMode
{
  known,    //!< closed-form Thomas pcf
  estimated //!< kernel estimate from the right-extended window
};

std::string_view to_string(PcfMode mode);
PcfMode parse_pcf_mode(std::string_view name);

struct BandConfig
{
  double rate = 0.5;
  double band_width = 0.25;
};

struct ExperimentConfig
{
  ThomasParams thomas;
  int n_sim = 100;
  std::vector<BandConfig> windows{{0.5, 0.25}};
  std::vector<int> grid_sizes{96};
  std::vector<PcfMode> modes{PcfMode::known, PcfMode::estimated};
  std::uint64_t seed = 1;
  Approximation level = Approximation::midpoint;
  int mask_resolution = Window::default_resolution; //!< pixels per unit length
  double r_max = 0.25;                               //!< pcf estimation range
  int n_r = 128;
  double max_skip_fraction = 0.05;

  void validate() const;
};

struct ConfigResult
{
  BandConfig window;
  BandLayout layout;
  int grid_size = 0;
  PcfMode mode = PcfMode::known;
  std::size_t n_unobserved_cells = 0;
  std::size_t n_used = 0;
  std::size_t n_skipped = 0;       //!< singular covariance
  std::size_t n_undefined_r2 = 0;  //!< excluded from the R^2 summary
  double mb = 0.0;
  double mb_se = 0.0;
  double msep = 0.0;
  std::vector<double> r2; //!< per used simulation, NaN when undefined
  double r2_median = 0.0;
  double r2_q1 = 0.0;
  double r2_q3 = 0.0;
  //! R^2 over all cells (estimates in S_obs, predictions in S_unobs); diagnostic
  double r2_all_median = 0.0;
  double runtime_seconds = 0.0;
};

struct EvalReport
{
  ExperimentConfig config;
  std::vector<ConfigResult> results;
  std::vector<std::uint64_t> sim_seeds;
  double runtime_seconds = 0.0;
  std::string version;

  const ConfigResult& find(BandConfig window, int grid_size, PcfMode mode) const;
};

//! OLS coefficient of determination of `predicted` regressed on `truth`.
//! Needs at least three pairs and non-constant truth (else undefined-r2).
double r_squared(std::span<const double> predicted, std::span<const double> truth);

//! Simulation study over band windows, grid sizes and pcf modes. Simulation k
//! uses seed derive_seed(config.seed, k) and one Thomas realization on the
//! widest extended window, shared by all configurations. Results do not depend
//! on the number of threads. Fails with singular-covariance when more than
//! max_skip_fraction of the simulations of any configuration were skipped.
EvalReport run_experiment(const ExperimentConfig& config);

} // namespace ppk
