#pragma once

#include "ppkrige/geometry.hpp"
#include "ppkrige/pcf.hpp"

#include <Eigen/Dense>

#include <cstdlib>
#include <optional>
#include <span>
#include <vector>

namespace ppk {

//! How the cell-pair integral of (g - 1) entering count covariances is evaluated.
enum class Approximation
{
  fine_integral, //!< m x m midpoint quadrature inside each cell
  midpoint,      //!< nu(B)^2 (g(r) - 1) at the centre distance r
  diagonal       //!< independent counts: off-diagonal covariances are zero
};

//! Second-order model of the count field Z(x) = Phi(B + x) on square cells.
struct CountFieldModel
{
  double lambda = 0.0;
  PcfFunction g;
  double cell_side = 0.0;
  Approximation level = Approximation::midpoint;
  int quadrature_points = 4; //!< per cell side, fine_integral only

  double cell_area() const { return cell_side * cell_side; }
  double nugget() const { return lambda * cell_area(); }
  void validate() const;
};

//! E[Z] = lambda nu(B).
double count_field_mean(const CountFieldModel& model);

//! Cov(Phi(B_i), Phi(B_j)) for square cells of side model.cell_side centred
//! at ci and cj. The nugget lambda nu(B) is added when ci == cj.
double count_covariance(const CountFieldModel& model, Point ci, Point cj);

//! Integral of (g(x - y) - 1) over a x b by the product midpoint rule with
//! `per_side` nodes per length `unit` (at least one node per side).
double pair_integral_minus_one(const PcfFunction& g, const Rect& a, const Rect& b, int per_side, double unit);

//! Covariance matrix of the counts on the observed cells of a grid. Entries
//! depend only on the cell offset, so the matrix is stored as an offset table
//! and materialised on demand.
class CovarianceMatrix
{
public:
  CovarianceMatrix(const CountFieldModel& model, const ObservationGrid& grid);

  const CountFieldModel& model() const { return model_; }
  std::size_t size() const { return cols_.size(); }
  double nugget() const { return model_.nugget(); }

  //! Structured (non-nugget) covariance between cells at offset (di, dj).
  double offset_value(int di, int dj) const
  {
    return table_[static_cast<std::size_t>(std::abs(dj)) * table_nx_ + std::abs(di)];
  }

  double operator()(std::size_t a, std::size_t b) const
  {
    return offset_value(cols_[a] - cols_[b], rows_[a] - rows_[b]) + (a == b ? nugget() : 0.0);
  }

  Eigen::MatrixXd dense() const;

  //! C_o for grid cell `cell`; carries the nugget at the matching observed
  //! row when `cell` is observed (estimation target).
  Eigen::VectorXd target_vector(std::size_t cell) const;

  //! Grid cell index of each row.
  std::span<const std::size_t> cells() const { return cells_; }
  const ObservationGrid& grid() const { return grid_; }

  //! Row of `cell` if it is an observed cell.
  std::optional<std::size_t> row_of(std::size_t cell) const;

private:
  CountFieldModel model_;
  ObservationGrid grid_;
  int table_nx_ = 0;
  std::vector<double> table_;
  std::vector<int> cols_;
  std::vector<int> rows_;
  std::vector<std::size_t> cells_;
  std::vector<std::ptrdiff_t> row_of_cell_;
};

//! Fails with insufficient-data for fewer than two observed cells and with
//! invalid-pcf when g produces non-finite values.
CovarianceMatrix assemble_covariance(const CountFieldModel& model, const ObservationGrid& grid);

//! Cholesky factor of a covariance matrix. When the plain factorisation
//! fails, 1e-8 trace / n is added to the diagonal and the attempt repeated
//! up to three times with tenfold escalation; after that singular-covariance.
class CovarianceFactor
{
public:
  explicit CovarianceFactor(const CovarianceMatrix& cov);
  explicit CovarianceFactor(Eigen::MatrixXd matrix);

  Eigen::Index size() const { return lower_.rows(); }
  double jitter() const { return jitter_; }
  int attempts() const { return attempts_; }

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
  Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const;
  //! X <- L^{-1} X
  void solve_lower_in_place(Eigen::MatrixXd& x) const;

private:
  void factorize(Eigen::MatrixXd matrix);

  Eigen::MatrixXd lower_;
  double jitter_ = 0.0;
  int attempts_ = 0;
};

//! 2 gamma(r) = lambda (nu(B_D) + nu(D_B)) + lambda^2 (I(B_D, B_D) + I(D_B, D_B) - 2 I(B_D, D_B)),
//! with B = D + lag, B_D = B \ D, D_B = D \ B and I the double integral of g.
//! Returns gamma(r); exactly zero for a zero lag. Integrals use the model's
//! quadrature_points regardless of its approximation level.
double theoretical_variogram(const CountFieldModel& model, Point lag);

struct CellOffset
{
  int di = 0;
  int dj = 0;
};

struct Estimate
{
  double value = 0.0;
  double se = 0.0;
};

struct LagMoments
{
  CellOffset lag;
  Estimate cross_moment; //!< E[Z(x) Z(x + lag)]
  Estimate covariance;
  Estimate variogram; //!< half mean squared increment
};

struct CountMoments
{
  std::size_t n_patterns = 0;
  Estimate mean;
  Estimate second_moment;
  Estimate variance;
  std::vector<LagMoments> lags;
};

//! Monte-Carlo moments of the count field across independent realizations.
//! Each statistic is averaged over observed cells (or observed cell pairs at
//! the given lag) within a pattern; the value and standard error are taken
//! across patterns. Variances and covariances are centred at the pooled mean.
CountMoments empirical_count_moments(std::span<const PointPattern> patterns,
                                     const ObservationGrid& grid,
                                     std::span<const CellOffset> lags = {});

} // namespace ppk
