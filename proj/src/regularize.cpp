#include "ppkrige/regularize.hpp"

#include "ppkrige/error.hpp"
#include "ppkrige/kernels.hpp"

#include <cmath>
#include <numeric>

namespace ppk {

void CountFieldModel::validate() const
{
  require(std::isfinite(lambda) && lambda > 0.0, "intensity must be positive");
  require(std::isfinite(cell_side) && cell_side > 0.0, "cell side must be positive");
  require(quadrature_points >= 1, "quadrature needs at least one point per side");
}

double count_field_mean(const CountFieldModel& model)
{
  model.validate();
  return model.lambda * model.cell_area();
}

namespace {

// Integral of (g - 1) over B x (B + d) for squares of side b, by the product
// midpoint rule with m nodes per side. Node differences are d + (s, t) b / m
// with multiplicity (m - |s|)(m - |t|).
double square_pair_integral(const PcfFunction& g, double b, int m, double dx, double dy)
{
  const double h = b / m;
  double sum = 0.0;
  for (int t = -(m - 1); t < m; ++t) {
    const double wt = m - std::abs(t);
    const double ey = dy + t * h;
    double row = 0.0;
    for (int s = -(m - 1); s < m; ++s)
      row += (m - std::abs(s)) * (g.value(std::hypot(dx + s * h, ey)) - 1.0);
    sum += wt * row;
  }
  const double area = b * b;
  return sum * area * area / (static_cast<double>(m) * m * m * m);
}

// lambda^2 times the (g - 1) integral at the model's approximation level.
double structured_covariance(const CountFieldModel& model, double dx, double dy)
{
  const double l2 = model.lambda * model.lambda;
  switch (model.level) {
    case Approximation::diagonal:
      return 0.0;
    case Approximation::midpoint: {
      const double a = model.cell_area();
      return l2 * a * a * (model.g.value(std::hypot(dx, dy)) - 1.0);
    }
    case Approximation::fine_integral:
      return l2 * square_pair_integral(model.g, model.cell_side, model.quadrature_points, dx, dy);
  }
  return 0.0;
}

int nodes_along(double length, double unit, int per_side)
{
  return std::max(1, static_cast<int>(std::ceil(length / unit * per_side - 1e-9)));
}

} // namespace

double count_covariance(const CountFieldModel& model, Point ci, Point cj)
{
  model.validate();
  const double s = structured_covariance(model, cj.x - ci.x, cj.y - ci.y);
  return ci == cj ? s + model.nugget() : s;
}

double pair_integral_minus_one(const PcfFunction& g, const Rect& a, const Rect& b, int per_side, double unit)
{
  require(per_side >= 1 && unit > 0.0, "quadrature needs positive resolution");
  if (a.area() <= 0.0 || b.area() <= 0.0)
    return 0.0;
  const int anx = nodes_along(a.width(), unit, per_side);
  const int any = nodes_along(a.height(), unit, per_side);
  const int bnx = nodes_along(b.width(), unit, per_side);
  const int bny = nodes_along(b.height(), unit, per_side);
  const double ahx = a.width() / anx, ahy = a.height() / any;
  const double bhx = b.width() / bnx, bhy = b.height() / bny;

  double sum = 0.0;
  for (int aj = 0; aj < any; ++aj) {
    const double ay = a.ymin + (aj + 0.5) * ahy;
    for (int ai = 0; ai < anx; ++ai) {
      const double ax = a.xmin + (ai + 0.5) * ahx;
      for (int bj = 0; bj < bny; ++bj) {
        const double dy = b.ymin + (bj + 0.5) * bhy - ay;
        for (int bi = 0; bi < bnx; ++bi)
          sum += g.value(std::hypot(b.xmin + (bi + 0.5) * bhx - ax, dy)) - 1.0;
      }
    }
  }
  return sum * (ahx * ahy) * (bhx * bhy);
}

CovarianceMatrix::CovarianceMatrix(const CountFieldModel& model, const ObservationGrid& grid)
  : model_(model)
  , grid_(grid)
{
  model_.validate();
  require(std::abs(model_.cell_side - grid_.cell_side()) <= 1e-9 * grid_.cell_side(),
          "model cell side does not match the grid");

  table_nx_ = grid_.nx();
  const int table_ny = grid_.ny();
  table_.assign(static_cast<std::size_t>(table_nx_) * table_ny, 0.0);
  const double b = grid_.cell_side();
  const int n_entries = table_nx_ * table_ny;
#pragma omp parallel for schedule(dynamic, 16)
  for (int e = 0; e < n_entries; ++e) {
    const int di = e % table_nx_;
    const int dj = e / table_nx_;
    table_[static_cast<std::size_t>(e)] = structured_covariance(model_, di * b, dj * b);
  }
  for (double v : table_)
    if (!std::isfinite(v))
      fail(ErrorKind::invalid_pcf, "pair correlation function produced non-finite covariances");

  row_of_cell_.assign(grid_.size(), -1);
  for (std::size_t c : grid_.observed_cells()) {
    row_of_cell_[c] = static_cast<std::ptrdiff_t>(cells_.size());
    cells_.push_back(c);
    cols_.push_back(grid_.col(c));
    rows_.push_back(grid_.row(c));
  }
}

Eigen::MatrixXd CovarianceMatrix::dense() const
{
  return kernels::offset_matrix(table_, table_nx_, cols_, rows_, nugget());
}

Eigen::VectorXd CovarianceMatrix::target_vector(std::size_t cell) const
{
  require(cell < grid_.size(), "target cell outside the grid");
  const int ci = grid_.col(cell);
  const int cj = grid_.row(cell);
  Eigen::VectorXd v(static_cast<Eigen::Index>(size()));
  for (std::size_t a = 0; a < size(); ++a)
    v[static_cast<Eigen::Index>(a)] = offset_value(ci - cols_[a], cj - rows_[a]);
  if (auto r = row_of(cell))
    v[static_cast<Eigen::Index>(*r)] += nugget();
  return v;
}

std::optional<std::size_t> CovarianceMatrix::row_of(std::size_t cell) const
{
  if (cell >= row_of_cell_.size() || row_of_cell_[cell] < 0)
    return std::nullopt;
  return static_cast<std::size_t>(row_of_cell_[cell]);
}

CovarianceMatrix assemble_covariance(const CountFieldModel& model, const ObservationGrid& grid)
{
  if (grid.n_observed() < 2)
    fail(ErrorKind::insufficient_data, "kriging needs at least two observed cells");
  return CovarianceMatrix(model, grid);
}

CovarianceFactor::CovarianceFactor(const CovarianceMatrix& cov)
{
  factorize(cov.dense());
}

CovarianceFactor::CovarianceFactor(Eigen::MatrixXd matrix)
{
  factorize(std::move(matrix));
}

void CovarianceFactor::factorize(Eigen::MatrixXd matrix)
{
  require(matrix.rows() == matrix.cols() && matrix.rows() > 0, "covariance matrix must be square");
  if (!matrix.allFinite())
    fail(ErrorKind::invalid_pcf, "covariance matrix has non-finite entries");
  const Eigen::Index n = matrix.rows();
  const Eigen::VectorXd diag = matrix.diagonal();
  const double scale = diag.sum() / static_cast<double>(n);

  constexpr int max_jitter_steps = 3;
  double jitter = 0.0;
  for (int attempt = 0; attempt <= max_jitter_steps; ++attempt) {
    if (attempt > 0) {
      jitter = 1e-8 * scale * std::pow(10.0, attempt - 1);
      // the failed attempt overwrote the lower triangle; rebuild it from the
      // untouched upper triangle
      matrix.triangularView<Eigen::StrictlyLower>() = matrix.transpose().triangularView<Eigen::StrictlyLower>();
      matrix.diagonal() = diag.array() + jitter;
    }
    attempts_ = attempt + 1;
    // in-place blocked Cholesky on the lower triangle; returns -1 on success
    if (Eigen::internal::llt_inplace<double, Eigen::Lower>::blocked(matrix) == -1) {
      jitter_ = jitter;
      lower_ = std::move(matrix);
      return;
    }
  }
  fail(ErrorKind::singular_covariance, "covariance matrix is not positive definite after jitter");
}

Eigen::VectorXd CovarianceFactor::solve(const Eigen::VectorXd& rhs) const
{
  Eigen::VectorXd x = rhs;
  const auto l = lower_.triangularView<Eigen::Lower>();
  l.solveInPlace(x);
  l.transpose().solveInPlace(x);
  return x;
}

Eigen::MatrixXd CovarianceFactor::solve(const Eigen::MatrixXd& rhs) const
{
  Eigen::MatrixXd x = rhs;
  const auto l = lower_.triangularView<Eigen::Lower>();
  l.solveInPlace(x);
  l.transpose().solveInPlace(x);
  return x;
}

void CovarianceFactor::solve_lower_in_place(Eigen::MatrixXd& x) const
{
  lower_.triangularView<Eigen::Lower>().solveInPlace(x);
}

namespace {

// Pieces of `from` that lie outside `other` for two congruent axis-aligned
// squares; at most two rectangles.
std::vector<Rect> square_difference(const Rect& from, const Rect& other)
{
  const double ox0 = std::max(from.xmin, other.xmin), ox1 = std::min(from.xmax, other.xmax);
  const double oy0 = std::max(from.ymin, other.ymin), oy1 = std::min(from.ymax, other.ymax);
  if (ox1 <= ox0 || oy1 <= oy0)
    return {from};
  std::vector<Rect> out;
  // columns of `from` outside the overlap's x-range, full height
  if (from.xmin < ox0)
    out.push_back({from.xmin, from.ymin, ox0, from.ymax});
  if (ox1 < from.xmax)
    out.push_back({ox1, from.ymin, from.xmax, from.ymax});
  // the remaining strip above or below the overlap
  if (from.ymin < oy0)
    out.push_back({ox0, from.ymin, ox1, oy0});
  if (oy1 < from.ymax)
    out.push_back({ox0, oy1, ox1, from.ymax});
  return out;
}

double area_of(const std::vector<Rect>& pieces)
{
  double a = 0.0;
  for (const auto& r : pieces)
    a += r.area();
  return a;
}

double cross_integral(const PcfFunction& g,
                      const std::vector<Rect>& a,
                      const std::vector<Rect>& b,
                      int per_side,
                      double unit)
{
  double s = 0.0;
  for (const auto& ra : a)
    for (const auto& rb : b)
      s += pair_integral_minus_one(g, ra, rb, per_side, unit);
  return s;
}

} // namespace

double theoretical_variogram(const CountFieldModel& model, Point lag)
{
  model.validate();
  require(std::isfinite(lag.x) && std::isfinite(lag.y), "lag must be finite");
  if (lag.x == 0.0 && lag.y == 0.0)
    return 0.0;
  const double b = model.cell_side;
  const Rect d{0.0, 0.0, b, b};
  const Rect bb{lag.x, lag.y, lag.x + b, lag.y + b};
  const std::vector<Rect> b_minus_d = square_difference(bb, d);
  const std::vector<Rect> d_minus_b = square_difference(d, bb);
  const int m = model.quadrature_points;

  // The integrals of 1 cancel because nu(B \ D) = nu(D \ B), so the (g - 1)
  // form is used for accuracy.
  const double l = model.lambda;
  const double two_gamma =
    l * (area_of(b_minus_d) + area_of(d_minus_b)) +
    l * l *
      (cross_integral(model.g, b_minus_d, b_minus_d, m, b) + cross_integral(model.g, d_minus_b, d_minus_b, m, b) -
       2.0 * cross_integral(model.g, b_minus_d, d_minus_b, m, b));
  return 0.5 * two_gamma;
}

namespace {

Estimate summarize(const std::vector<double>& per_pattern)
{
  const double n = static_cast<double>(per_pattern.size());
  const double mean = std::accumulate(per_pattern.begin(), per_pattern.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : per_pattern)
    ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

} // namespace

CountMoments empirical_count_moments(std::span<const PointPattern> patterns,
                                     const ObservationGrid& grid,
                                     std::span<const CellOffset> lags)
{
  require(patterns.size() >= 2, "count moments need at least two patterns");
  require(grid.n_observed() > 0, "grid has no observed cells");
  const std::size_t k_total = patterns.size();
  const auto observed = grid.observed_cells();

  std::vector<std::vector<int>> counts(k_total);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t k = 0; k < k_total; ++k)
    counts[k] = count_on_grid(patterns[k], grid);

  // observed cell pairs (c, c + lag) for every lag
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> pairs(lags.size());
  for (std::size_t l = 0; l < lags.size(); ++l) {
    for (std::size_t c : observed) {
      const int i = grid.col(c) + lags[l].di;
      const int j = grid.row(c) + lags[l].dj;
      if (i < 0 || j < 0 || i >= grid.nx() || j >= grid.ny())
        continue;
      const std::size_t d = grid.index(i, j);
      if (grid.observed(d))
        pairs[l].emplace_back(c, d);
    }
    require(!pairs[l].empty(), "lag has no observed cell pairs");
  }

  const double n_obs = static_cast<double>(observed.size());
  std::vector<double> mean(k_total), second(k_total);
  for (std::size_t k = 0; k < k_total; ++k) {
    double s = 0.0, s2 = 0.0;
    for (std::size_t c : observed) {
      const double z = counts[k][c];
      s += z;
      s2 += z * z;
    }
    mean[k] = s / n_obs;
    second[k] = s2 / n_obs;
  }

  CountMoments out;
  out.n_patterns = k_total;
  out.mean = summarize(mean);
  out.second_moment = summarize(second);
  const double m = out.mean.value;

  std::vector<double> var(k_total);
  for (std::size_t k = 0; k < k_total; ++k) {
    double s = 0.0;
    for (std::size_t c : observed)
      s += (counts[k][c] - m) * (counts[k][c] - m);
    var[k] = s / n_obs;
  }
  out.variance = summarize(var);

  for (std::size_t l = 0; l < lags.size(); ++l) {
    const double np = static_cast<double>(pairs[l].size());
    std::vector<double> cross(k_total), cov(k_total), vario(k_total);
    for (std::size_t k = 0; k < k_total; ++k) {
      double sc = 0.0, sv = 0.0, sg = 0.0;
      for (const auto& [c, d] : pairs[l]) {
        const double zc = counts[k][c];
        const double zd = counts[k][d];
        sc += zc * zd;
        sv += (zc - m) * (zd - m);
        sg += 0.5 * (zc - zd) * (zc - zd);
      }
      cross[k] = sc / np;
      cov[k] = sv / np;
      vario[k] = sg / np;
    }
    out.lags.push_back({lags[l], summarize(cross), summarize(cov), summarize(vario)});
  }
  return out;
}

} // namespace ppk
