#include "ppkrige/kriging.hpp"

#include "ppkrige/error.hpp"
#include "ppkrige/log.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ppk {

KrigingSystem::KrigingSystem(CovarianceMatrix cov)
  : cov_(std::move(cov))
  , factor_(cov_)
{
  z_ = factor_.solve(Eigen::VectorXd(Eigen::VectorXd::Ones(static_cast<Eigen::Index>(cov_.size()))));
  s_ = z_.sum();
  if (!(s_ > 0.0) || !std::isfinite(s_))
    fail(ErrorKind::singular_covariance, "kriging system has a non-positive 1^T C^-1 1");
}

Eigen::VectorXd KrigingSystem::weights(std::size_t cell) const
{
  const Eigen::VectorXd y = factor_.solve(cov_.target_vector(cell));
  return y + ((1.0 - y.sum()) / s_) * z_;
}

Eigen::VectorXd solve_weights(const CovarianceFactor& factor, const Eigen::VectorXd& target)
{
  require(target.size() == factor.size(), "target vector length does not match the covariance");
  const Eigen::VectorXd y = factor.solve(target);
  const Eigen::VectorXd z = factor.solve(Eigen::VectorXd(Eigen::VectorXd::Ones(factor.size())));
  return y + ((1.0 - y.sum()) / z.sum()) * z;
}

Eigen::VectorXd solve_weights(const CovarianceMatrix& cov, const Eigen::VectorXd& target)
{
  return solve_weights(CovarianceFactor(cov), target);
}

IntensitySurface IntensitySurface::clamped() const
{
  IntensitySurface out = *this;
  for (auto& v : out.intensity)
    v = std::max(v, 0.0);
  return out;
}

namespace {

constexpr Eigen::Index target_block = 256;

Eigen::MatrixXd target_block_matrix(const CovarianceMatrix& cov, std::span<const std::size_t> cells)
{
  Eigen::MatrixXd m(static_cast<Eigen::Index>(cov.size()), static_cast<Eigen::Index>(cells.size()));
  for (std::size_t t = 0; t < cells.size(); ++t)
    m.col(static_cast<Eigen::Index>(t)) = cov.target_vector(cells[t]);
  return m;
}

} // namespace

std::vector<double> kriging_variance(const KrigingSystem& system, std::span<const std::size_t> cells)
{
  const double nu = system.model().cell_area();
  const Eigen::VectorXd& z = system.ones_solution();
  const double s = system.ones_quadratic();
  std::vector<double> out(cells.size());
  for (std::size_t start = 0; start < cells.size(); start += target_block) {
    const std::size_t len = std::min<std::size_t>(target_block, cells.size() - start);
    Eigen::MatrixXd block = target_block_matrix(system.covariance(), cells.subspan(start, len));
    const Eigen::VectorXd u = block.transpose() * z;
    system.factor().solve_lower_in_place(block); // ||L^{-1} c||^2 = c^T C^{-1} c
    const Eigen::VectorXd quad = block.colwise().squaredNorm().transpose();
    for (std::size_t t = 0; t < len; ++t) {
      const auto e = static_cast<Eigen::Index>(t);
      out[start + t] = (quad[e] + (1.0 - u[e] * u[e]) / s) / (nu * nu);
    }
  }
  return out;
}

IntensitySurface krige_intensity(const CountFieldModel& model,
                                 const ObservationGrid& grid,
                                 std::span<const int> counts,
                                 const KrigingOptions& options)
{
  require(counts.size() == grid.size(), "counts must have one entry per grid cell");
  KrigingSystem system(assemble_covariance(model, grid));
  const CovarianceMatrix& cov = system.covariance();
  const auto n = static_cast<Eigen::Index>(cov.size());

  Eigen::VectorXd y(n);
  for (Eigen::Index a = 0; a < n; ++a) {
    const int c = counts[cov.cells()[static_cast<std::size_t>(a)]];
    require(c >= 0, "counts must be non-negative");
    y[a] = c;
  }
  const Eigen::VectorXd a_vec = system.factor().solve(y);
  const Eigen::VectorXd& z = system.ones_solution();
  const double s = system.ones_quadratic();
  const double zy = z.dot(y);
  const double nu = model.cell_area();

  IntensitySurface out;
  out.grid = grid;
  out.intensity.resize(grid.size());
  out.estimation.resize(grid.size());
  out.jitter = system.factor().jitter();

  // mu^T y = c^T C^{-1} y + (1 - z^T c) / s * z^T y
  const auto n_cells = static_cast<std::ptrdiff_t>(grid.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < n_cells; ++c) {
    const auto cell = static_cast<std::size_t>(c);
    const Eigen::VectorXd target = cov.target_vector(cell);
    const double alpha = (1.0 - z.dot(target)) / s;
    out.intensity[cell] = (target.dot(a_vec) + alpha * zy) / nu;
    out.estimation[cell] = grid.observed(cell) ? 1 : 0;
  }

  if (options.compute_variance) {
    std::vector<std::size_t> all(grid.size());
    for (std::size_t c = 0; c < all.size(); ++c)
      all[c] = c;
    out.variance = kriging_variance(system, all);
    const double scale = model.lambda / nu;
    double worst = 0.0;
    for (auto& v : out.variance)
      if (v < 0.0) {
        worst = std::min(worst, v);
        v = 0.0;
        ++out.floored_variances;
      }
    if (worst < -1e-8 * scale)
      log_warn("kriging variance floored at zero for " + std::to_string(out.floored_variances) +
               " cells (most negative " + std::to_string(worst) + ")");
  }
  return out;
}

namespace {

Eigen::MatrixXd series_matrix(const CovarianceMatrix& cov)
{
  const double m = cov.nugget();
  Eigen::MatrixXd s = cov.dense();
  s.diagonal().array() -= m;
  return s / m;
}

double power_iteration(const Eigen::MatrixXd& m)
{
  const Eigen::Index n = m.rows();
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i)
    v[i] = 1.0 + 0.01 * static_cast<double>(i % 7);
  v.normalize();
  double radius = 0.0;
  for (int it = 0; it < 1000; ++it) {
    Eigen::VectorXd w = m * v;
    const double norm = w.norm();
    if (norm == 0.0)
      return 0.0;
    // two steps per iteration so +/- eigenvalue pairs do not oscillate
    Eigen::VectorXd w2 = m * (w / norm);
    const double next = std::sqrt(w2.norm() * norm);
    v = w2.normalized();
    if (std::abs(next - radius) <= 1e-12 * std::max(1.0, next)) {
      radius = next;
      break;
    }
    radius = next;
  }
  return radius;
}

} // namespace

double neumann_spectral_radius(const CovarianceMatrix& cov)
{
  return power_iteration(series_matrix(cov));
}

Eigen::MatrixXd neumann_inverse(const CountFieldModel& model, const CovarianceMatrix& cov, int order)
{
  require(order >= 1, "Neumann order must be at least 1");
  require(std::abs(model.nugget() - cov.nugget()) <= 1e-12 * cov.nugget(),
          "model does not match the covariance matrix");
  const Eigen::MatrixXd m = series_matrix(cov);
  const double radius = power_iteration(m);
  if (!(radius < 1.0))
    fail(ErrorKind::series_divergent,
         "Neumann series diverges (spectral radius " + std::to_string(radius) + ")");
  // Horner: S_k = I - M S_{k-1}
  const Eigen::Index n = m.rows();
  Eigen::MatrixXd s = Eigen::MatrixXd::Identity(n, n);
  for (int k = 1; k <= order; ++k) {
    Eigen::MatrixXd next = -m * s;
    next.diagonal().array() += 1.0;
    s = std::move(next);
  }
  return s / model.nugget();
}

double expanded_variance(const CovarianceMatrix& cov, std::size_t cell, int order)
{
  const Eigen::MatrixXd inv = neumann_inverse(cov.model(), cov, order);
  const Eigen::VectorXd c = cov.target_vector(cell);
  const Eigen::VectorXd z = inv.rowwise().sum();
  const double s = z.sum();
  const double u = z.dot(c);
  const double nu = cov.model().cell_area();
  return (c.dot(inv * c) + (1.0 - u * u) / s) / (nu * nu);
}

} // namespace ppk
