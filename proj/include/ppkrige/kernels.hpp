#pragma once

// Data-parallel inner loops. Every OpenMP kernel has a serial `_reference`
// twin computing the same quantity by the most direct route; tests compare
// the two and the benchmark target times them against each other.
//
// Reductions are accumulated per fixed-size chunk and combined in chunk
// order, so results do not depend on the number of threads.

#include "ppkrige/geometry.hpp"
#include "ppkrige/set_covariance.hpp"

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace ppk::kernels {

//! nx x ny evaluation raster over `bounds`; values stored row-major.
struct Raster
{
  Rect bounds;
  int nx = 0;
  int ny = 0;

  double cell_width() const { return bounds.width() / nx; }
  double cell_height() const { return bounds.height() / ny; }
  double cell_area() const { return cell_width() * cell_height(); }
  std::size_t size() const { return static_cast<std::size_t>(nx) * ny; }
  Point center(int i, int j) const
  {
    return {bounds.xmin + (i + 0.5) * cell_width(), bounds.ymin + (j + 0.5) * cell_height()};
  }
};

//! S_k = sum over ordered pairs i != j of
//!   [k_h(r_k - d_ij) + k_h(r_k + d_ij)] / gamma(xi_i - xi_j),
//! with k_h Epanechnikov of half-width h and gamma the set covariance. Pairs
//! with gamma / nu(S_obs) below `weight_floor` are skipped.
std::vector<double> pcf_pair_sums(std::span<const Point> points,
                                  const SetCovariance& setcov,
                                  std::span<const double> abscissae,
                                  double h,
                                  double weight_floor);
std::vector<double> pcf_pair_sums_reference(std::span<const Point> points,
                                            const SetCovariance& setcov,
                                            std::span<const double> abscissae,
                                            double h,
                                            double weight_floor);

//! Isotropic Gaussian kernel intensity sum_xi h^-2 w(|x - xi| / h) at raster
//! cell centres, w the standard bivariate normal density. The parallel path
//! truncates the kernel at 8h (relative error below 1e-13).
std::vector<double> gaussian_intensity(std::span<const Point> points, const Raster& raster, double h);
std::vector<double> gaussian_intensity_reference(std::span<const Point> points,
                                                 const Raster& raster,
                                                 double h);

//! 1 / (pi d_k(x)^2) at raster cell centres.
std::vector<double> knn_intensity(std::span<const Point> points, const Raster& raster, int k);
std::vector<double> knn_intensity_reference(std::span<const Point> points, const Raster& raster, int k);

//! Thomas conditional intensity sum_parents mu / (2 pi sigma^2) exp(-|x - p|^2 / (2 sigma^2)).
std::vector<double> cluster_intensity(std::span<const Point> parents,
                                      std::span<const Point> at,
                                      double mu,
                                      double sigma);
std::vector<double> cluster_intensity_reference(std::span<const Point> parents,
                                                std::span<const Point> at,
                                                double mu,
                                                double sigma);

//! Symmetric matrix M(a, b) = table(|col_a - col_b|, |row_a - row_b|) + diag [a == b],
//! where `table` is row-major with `table_nx` columns.
Eigen::MatrixXd offset_matrix(std::span<const double> table,
                              int table_nx,
                              std::span<const int> cols,
                              std::span<const int> rows,
                              double diag);
Eigen::MatrixXd offset_matrix_reference(std::span<const double> table,
                                        int table_nx,
                                        std::span<const int> cols,
                                        std::span<const int> rows,
                                        double diag);

//! Ordered-pair distances and inverse set covariances of all pairs closer than
//! `cutoff` (each unordered pair listed once).
struct PairList
{
  std::vector<double> distance;
  std::vector<double> inv_setcov;
};
PairList close_pairs(std::span<const Point> points,
                     const SetCovariance& setcov,
                     double cutoff,
                     double weight_floor);

//! Distance from each point to its nearest other point.
std::vector<double> nearest_neighbour_distances(std::span<const Point> points);

} // namespace ppk::kernels
