#pragma once

#include "ppkrige/regularize.hpp"

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace ppk {

//! Ordinary kriging of the count field over the observed cells of a grid.
//! The covariance is factorised once; targets only need solves against the
//! shared factor.
class KrigingSystem
{
public:
  explicit KrigingSystem(CovarianceMatrix cov);

  const CovarianceMatrix& covariance() const { return cov_; }
  const CovarianceFactor& factor() const { return factor_; }
  const CountFieldModel& model() const { return cov_.model(); }
  std::size_t n_observed() const { return cov_.size(); }

  //! C^{-1} 1 and 1^T C^{-1} 1.
  const Eigen::VectorXd& ones_solution() const { return z_; }
  double ones_quadratic() const { return s_; }

  //! True for observed target cells (estimation), false for prediction.
  bool is_estimation(std::size_t cell) const { return cov_.row_of(cell).has_value(); }

  //! mu = C^{-1} C_o + (1 - 1^T C^{-1} C_o) / (1^T C^{-1} 1) C^{-1} 1.
  Eigen::VectorXd weights(std::size_t cell) const;

private:
  CovarianceMatrix cov_;
  CovarianceFactor factor_;
  Eigen::VectorXd z_;
  double s_ = 0.0;
};

//! Ordinary kriging weights for covariance C and target vector C_o using two
//! solves against a Cholesky factor of C.
Eigen::VectorXd solve_weights(const CovarianceMatrix& cov, const Eigen::VectorXd& target);
Eigen::VectorXd solve_weights(const CovarianceFactor& factor, const Eigen::VectorXd& target);

struct KrigingOptions
{
  bool compute_variance = true;
};

//! Kriged local intensity on every cell of a grid. Values are raw (possibly
//! negative); use clamped() for display.
struct IntensitySurface
{
  ObservationGrid grid;
  std::vector<double> intensity;
  std::vector<double> variance;          //!< empty when not requested
  std::vector<std::uint8_t> estimation;  //!< 1 for observed cells
  std::size_t floored_variances = 0;     //!< negative round-off variances set to 0
  double jitter = 0.0;                   //!< diagonal jitter used by the factorisation

  IntensitySurface clamped() const;
};

//! lambda_hat(x_o | U) = mu^T Z / nu(B) for every cell of `grid`, where Z holds
//! the counts of the observed cells. `counts` has one entry per grid cell.
IntensitySurface krige_intensity(const CountFieldModel& model,
                                 const ObservationGrid& grid,
                                 std::span<const int> counts,
                                 const KrigingOptions& options = {});

//! Variance of the kriging predictor for each target cell:
//! (1 / nu(B)^2) [C_o^T C^{-1} C_o + (1 - u^2) / (1^T C^{-1} 1)], u = 1^T C^{-1} C_o,
//! which equals mu^T C mu / nu(B)^2. Not floored.
std::vector<double> kriging_variance(const KrigingSystem& system, std::span<const std::size_t> cells);

//! Largest |eigenvalue| of M = (C - lambda nu(B) I) / (lambda nu(B)) by power
//! iteration.
double neumann_spectral_radius(const CovarianceMatrix& cov);

//! C^{-1} ~ (1 / lambda nu(B)) sum_{k=0..order} (-M)^k. Fails with
//! series-divergent when the spectral radius of M is not below one.
Eigen::MatrixXd neumann_inverse(const CountFieldModel& model, const CovarianceMatrix& cov, int order);

//! Variance of the predictor at `cell` with C^{-1} replaced by its truncated
//! series of the given order. Diagnostic counterpart of kriging_variance().
double expanded_variance(const CovarianceMatrix& cov, std::size_t cell, int order = 3);

} // namespace ppk
