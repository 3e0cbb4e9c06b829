#pragma once

#include "ppkrige/geometry.hpp"
#include "ppkrige/kernels.hpp"
#include "ppkrige/set_covariance.hpp"

#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace ppk {

enum class GradientMethod
{
  kernel,
  counting,
  knn
};

std::string_view to_string(GradientMethod method);
GradientMethod parse_gradient_method(std::string_view name);

struct GradientOptions
{
  GradientMethod method = GradientMethod::kernel;
  int n = 200; //!< evaluation raster is n x n over the window bounds
  std::optional<double> bandwidth; //!< kernel method; default Diggle's criterion
  std::optional<int> k;            //!< knn method; default ceil(sqrt(n_points))
};

struct GradientEstimate
{
  kernels::Raster raster;
  std::vector<double> intensity; //!< per raster cell
  std::vector<double> grad_sq;   //!< |grad|^2 per raster cell
  double integral = 0.0;         //!< I_grad over S_obs
  GradientMethod method = GradientMethod::kernel;
  double bandwidth = 0.0; //!< kernel method only
  int k = 0;              //!< knn method only
};

//! Squared gradient norms of a raster surface by one-cell forward differences
//! (backward on the last row and column), and their integral over S_obs with
//! each cell weighted by its observed fraction. Differences never reach into
//! fully unobserved cells: the opposite one-sided difference is used, or zero
//! when neither neighbour is observed.
GradientEstimate gradient_from_surface(const kernels::Raster& raster,
                                       std::vector<double> intensity,
                                       const Window& window);

//! Intensity estimated on the raster by the chosen method from the points in
//! S_obs, then differentiated by gradient_from_surface().
GradientEstimate estimate_gradient_integral(const PointPattern& pattern,
                                            const Window& window,
                                            const GradientOptions& options = {});

//! Diggle's mean-square-error criterion for a Gaussian kernel of standard
//! deviation h, up to terms that do not depend on h:
//!   M(h) = 1 / (4 pi h^2 lambda) + lambda^-2 sum_{i != j} [k_{sqrt2 h}(d_ij) - 2 k_h(d_ij)] / gamma(xi_i - xi_j),
//! k_s the bivariate normal density with scale s and gamma the set covariance.
double diggle_criterion(const PointPattern& pattern, const Window& window, const SetCovariance& setcov, double h);

//! 128 log-spaced bandwidths between the smallest nearest-neighbour distance
//! and a quarter of the window diameter.
std::vector<double> diggle_candidates(const PointPattern& pattern, const Window& window, int count = 128);

//! Candidate minimising diggle_criterion(); ties go to the smaller bandwidth.
double diggle_bandwidth(const PointPattern& pattern, const Window& window, std::span<const double> candidates);
double diggle_bandwidth(const PointPattern& pattern, const Window& window);

struct MeshChoice
{
  double nu_opt = 0.0; //!< optimal cell area
  double b = 0.0;      //!< cell side sqrt(nu_opt)
  int nx = 0;
  int ny = 0;
};

//! nu_opt = sqrt(12 lambda nu(S_obs) / I_grad); grid dimensions are
//! floor(extent / b) per axis, at least one.
MeshChoice optimal_mesh(double lambda_hat, double area_obs, double grad_integral, const Rect& extent);

//! IMSE as a function of the cell area: nu / 12 * I_grad + lambda nu(S_obs) / nu.
double imse_estimate(double lambda_hat, double area_obs, double grad_integral, double cell_area);

} // namespace ppk
