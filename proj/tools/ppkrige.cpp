#include "ppkrige/error.hpp"
#include "ppkrige/eval.hpp"
#include "ppkrige/io.hpp"
#include "ppkrige/kriging.hpp"
#include "ppkrige/log.hpp"
#include "ppkrige/mesh.hpp"
#include "ppkrige/pcf.hpp"
#include "ppkrige/regularize.hpp"
#include "ppkrige/simulate.hpp"

#include <CLI11.hpp>
#include <omp.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace ppk;

namespace {

struct Globals
{
  std::uint64_t seed = 1;
  int threads = 0;
  int verbose = 0;
  std::string out_dir;
};

// "-" is stdout; relative paths land under --out-dir when given.
class Output
{
public:
  Output(const std::string& path, const Globals& g)
  {
    if (path == "-") {
      stream_ = &std::cout;
      return;
    }
    fs::path p(path);
    if (!g.out_dir.empty() && p.is_relative())
      p = fs::path(g.out_dir) / p;
    if (p.has_parent_path()) {
      std::error_code ec;
      fs::create_directories(p.parent_path(), ec);
    }
    file_ = std::make_unique<std::ofstream>(p);
    if (!*file_)
      fail(ErrorKind::io, "cannot open '" + p.string() + "' for writing");
    stream_ = file_.get();
    path_ = p.string();
  }

  std::ostream& operator*() { return *stream_; }

  void close()
  {
    stream_->flush();
    if (!*stream_)
      fail(ErrorKind::io, "failed writing '" + (path_.empty() ? std::string("stdout") : path_) + "'");
  }

private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_ = nullptr;
  std::string path_;
};

Window load_window(const std::string& path)
{
  return path.empty() ? Window::full() : read_window_json(path);
}

Approximation parse_approximation(const std::string& s)
{
  if (s == "fine-integral")
    return Approximation::fine_integral;
  if (s == "diagonal")
    return Approximation::diagonal;
  if (s == "midpoint")
    return Approximation::midpoint;
  fail(ErrorKind::invalid_argument, "unknown approximation '" + s + "'");
}

std::optional<double> parse_bandwidth(const std::string& s)
{
  if (s == "auto")
    return std::nullopt;
  try {
    std::size_t used = 0;
    const double h = std::stod(s, &used);
    if (used == s.size() && h > 0.0)
      return h;
  } catch (const std::exception&) {
  }
  fail(ErrorKind::invalid_argument, "bandwidth must be 'auto' or a positive number");
}

int exit_code(ErrorKind kind)
{
  return kind == ErrorKind::invalid_argument ? 1 : 2;
}

// simulate ------------------------------------------------------------------

struct SimulateArgs
{
  std::string model = "thomas";
  double kappa = 10.0, mu = 50.0, sigma = 0.05, lambda = 100.0;
  std::string window, out, parents_out, truth_out;
  int truth_n = 96;
};

void run_simulate(const SimulateArgs& a, const Globals& g)
{
  const Window window = load_window(a.window);
  if (a.model == "poisson") {
    const PointPattern p = simulate_poisson(a.lambda, window, g.seed);
    Output out(a.out, g);
    write_pattern_csv(*out, p);
    out.close();
    require(a.parents_out.empty() && a.truth_out.empty(), "parents and true intensity exist only for thomas");
    return;
  }
  ThomasParams params{a.kappa, a.mu, a.sigma, g.seed};
  const SimulatedRealization real = simulate_thomas(params, window);
  Output out(a.out, g);
  write_pattern_csv(*out, real.offspring);
  out.close();
  if (!a.parents_out.empty()) {
    Output po(a.parents_out, g);
    write_pattern_csv(*po, real.parents);
    po.close();
  }
  if (!a.truth_out.empty()) {
    const ObservationGrid grid = build_grid_n(window, a.truth_n);
    Output to(a.truth_out, g);
    write_grid_csv(*to, grid, thomas_local_intensity(real, grid));
    to.close();
  }
}

// estimate-pcf ----------------------------------------------------------------

struct PcfArgs
{
  std::string pattern, window, out = "-", bandwidth = "auto";
  std::optional<double> r_max;
  int n_r = 128;
};

void run_estimate_pcf(const PcfArgs& a, const Globals& g)
{
  const Window window = load_window(a.window);
  const PointPattern pattern = read_pattern_csv(a.pattern, window.bounds());
  PcfOptions opts;
  opts.r_max = a.r_max;
  opts.n_r = a.n_r;
  opts.bandwidth = parse_bandwidth(a.bandwidth);
  const PcfFunction pcf = estimate_pcf(pattern, window, opts);
  Output out(a.out, g);
  write_pcf_csv(*out, pcf);
  out.close();
}

// optimal-mesh ------------------------------------------------------------------

struct MeshArgs
{
  std::string pattern, window, method = "kernel", out = "-";
  int n = 200;
};

nlohmann::json mesh_json(const PointPattern& pattern, const Window& window, GradientMethod method, int n)
{
  GradientOptions opts;
  opts.method = method;
  opts.n = n;
  const GradientEstimate ge = estimate_gradient_integral(pattern, window, opts);
  const double lambda_hat = static_cast<double>(pattern.observed_in(window).size()) / window.observed_area();
  const MeshChoice m = optimal_mesh(lambda_hat, window.observed_area(), ge.integral, window.bounds());
  nlohmann::json j{{"nu_opt", m.nu_opt},
                   {"b", m.b},
                   {"grid_nx", m.nx},
                   {"grid_ny", m.ny},
                   {"I_grad", ge.integral},
                   {"lambda_hat", lambda_hat},
                   {"method", std::string(to_string(method))},
                   {"N", n}};
  if (method == GradientMethod::kernel)
    j["bandwidth"] = ge.bandwidth;
  if (method == GradientMethod::knn)
    j["k"] = ge.k;
  return j;
}

void run_optimal_mesh(const MeshArgs& a, const Globals& g)
{
  const Window window = load_window(a.window);
  const PointPattern pattern = read_pattern_csv(a.pattern, window.bounds());
  const nlohmann::json j = mesh_json(pattern, window, parse_gradient_method(a.method), a.n);
  Output out(a.out, g);
  *out << j.dump(2) << '\n';
  out.close();
}

// krige ---------------------------------------------------------------------------

struct KrigeArgs
{
  std::string pattern, window, cell_side = "auto", pcf = "empirical", out = "-", variance_out, dump_cov;
  std::string bandwidth = "auto", approximation = "midpoint", mesh_method = "kernel";
  double kappa = 0.0, sigma = 0.0;
  std::optional<double> r_max, lambda;
  int n_r = 128, quadrature = 4, mesh_n = 200;
  bool no_clamp = false;
};

void run_krige(const KrigeArgs& a, const Globals& g)
{
  const Window window = load_window(a.window);
  const PointPattern pattern = read_pattern_csv(a.pattern, window.bounds());
  const PointPattern observed = pattern.observed_in(window);
  if (observed.size() < 2)
    fail(ErrorKind::insufficient_data, "kriging needs at least two observed points");

  double b = 0.0;
  if (a.cell_side == "auto") {
    require(window.is_full(), "--cell-side auto is for estimation on a fully observed window; give a cell side");
    const auto j = mesh_json(pattern, window, parse_gradient_method(a.mesh_method), a.mesh_n);
    b = j["b"].get<double>();
    log_info("optimal cell side " + format_double(b));
  } else {
    try {
      std::size_t used = 0;
      b = std::stod(a.cell_side, &used);
      require(used == a.cell_side.size(), "");
    } catch (const std::exception&) {
      fail(ErrorKind::invalid_argument, "--cell-side must be 'auto' or a positive length");
    }
  }
  require(b > 0.0, "--cell-side must be positive");
  const ObservationGrid grid = build_grid(window, b);

  CountFieldModel model;
  model.lambda = a.lambda.value_or(static_cast<double>(observed.size()) / window.observed_area());
  model.cell_side = grid.cell_side();
  model.level = parse_approximation(a.approximation);
  model.quadrature_points = a.quadrature;
  if (a.pcf == "thomas") {
    require(a.kappa > 0.0 && a.sigma > 0.0, "--pcf thomas needs --kappa and --sigma");
    model.g = PcfFunction::thomas(a.kappa, a.sigma);
  } else if (a.pcf == "empirical") {
    PcfOptions opts;
    opts.r_max = a.r_max;
    opts.n_r = a.n_r;
    opts.bandwidth = parse_bandwidth(a.bandwidth);
    model.g = estimate_pcf(pattern, window, opts);
  } else if (a.pcf == "poisson") {
    model.g = PcfFunction::poisson();
  } else {
    fail(ErrorKind::invalid_argument, "--pcf must be empirical, thomas or poisson");
  }

  const std::vector<int> counts = count_on_grid(observed, grid);
  if (!a.dump_cov.empty()) {
    Output dc(a.dump_cov, g);
    write_matrix_csv(*dc, assemble_covariance(model, grid).dense());
    dc.close();
  }
  KrigingOptions kopts;
  kopts.compute_variance = !a.variance_out.empty();
  IntensitySurface surface = krige_intensity(model, grid, counts, kopts);
  if (surface.jitter > 0.0)
    log_warn("covariance needed diagonal jitter " + format_double(surface.jitter));
  if (!a.no_clamp)
    surface = surface.clamped();

  Output out(a.out, g);
  write_grid_csv(*out, grid, surface.intensity);
  out.close();
  if (!a.variance_out.empty()) {
    Output vo(a.variance_out, g);
    write_grid_csv(*vo, grid, surface.variance);
    vo.close();
  }
}

// experiment -------------------------------------------------------------------------

struct ExperimentArgs
{
  std::string config, out = "report.json", csv_out;
  std::optional<int> n_sim;
};

void run_experiment_cmd(const ExperimentArgs& a, const Globals& g, bool seed_given)
{
  ExperimentConfig config = a.config.empty() ? ExperimentConfig{} : experiment_config_from_json(read_json_file(a.config));
  if (seed_given)
    config.seed = g.seed;
  if (a.n_sim)
    config.n_sim = *a.n_sim;
  EvalReport report = run_experiment(config);
  report.version = version_string();
  Output out(a.out, g);
  *out << report_to_json(report).dump(2) << '\n';
  out.close();
  if (!a.csv_out.empty()) {
    Output summary((fs::path(a.csv_out) / "summary.csv").string(), g);
    write_report_csv(*summary, report);
    summary.close();
    Output r2((fs::path(a.csv_out) / "r2.csv").string(), g);
    write_r2_csv(*r2, report);
    r2.close();
  }
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Kriging of the local intensity of spatial point processes"};
  app.require_subcommand(1);
  // global flags may also follow the subcommand
  app.fallthrough();
  app.set_version_flag("--version", version_string());

  Globals g;
  app.add_option("--seed", g.seed, "Base random seed")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads (0 = OpenMP default)")->check(CLI::NonNegativeNumber);
  app.add_flag("-v,--verbose", g.verbose, "More log output on stderr (repeat for debug)");
  app.add_option("--out-dir", g.out_dir, "Directory for relative output paths");

  SimulateArgs sa;
  auto* sim = app.add_subcommand("simulate", "Simulate a Thomas or Poisson pattern");
  sim->add_option("--model", sa.model)->check(CLI::IsMember({"thomas", "poisson"}))->capture_default_str();
  sim->add_option("--kappa", sa.kappa, "Parent intensity")->capture_default_str();
  sim->add_option("--mu", sa.mu, "Mean offspring per parent")->capture_default_str();
  sim->add_option("--sigma", sa.sigma, "Offspring displacement sd")->capture_default_str();
  sim->add_option("--lambda", sa.lambda, "Poisson intensity")->capture_default_str();
  sim->add_option("--window", sa.window, "Window JSON (default: full unit square)");
  sim->add_option("--out", sa.out, "Pattern CSV, '-' for stdout")->required();
  sim->add_option("--parents-out", sa.parents_out, "Parent CSV (thomas)");
  sim->add_option("--true-intensity-out", sa.truth_out, "Conditional intensity grid CSV (thomas)");
  sim->add_option("--grid-n", sa.truth_n, "Cells per side of the true-intensity grid")->capture_default_str();

  PcfArgs pa;
  auto* pcf = app.add_subcommand("estimate-pcf", "Kernel estimate of the pair correlation function");
  pcf->add_option("--pattern", pa.pattern, "Pattern CSV")->required();
  pcf->add_option("--window", pa.window, "Window JSON (default: full unit square)");
  pcf->add_option("--rmax", pa.r_max, "Largest distance (default: quarter diameter)");
  pcf->add_option("--nr", pa.n_r, "Number of abscissae")->capture_default_str();
  pcf->add_option("--bandwidth", pa.bandwidth, "'auto' or a half-width")->capture_default_str();
  pcf->add_option("--out", pa.out, "CSV with r,g")->capture_default_str();

  MeshArgs ma;
  auto* mesh = app.add_subcommand("optimal-mesh", "IMSE-optimal cell size for estimation grids");
  mesh->add_option("--pattern", ma.pattern, "Pattern CSV")->required();
  mesh->add_option("--window", ma.window, "Window JSON (default: full unit square)");
  mesh->add_option("--method", ma.method)->check(CLI::IsMember({"kernel", "counting", "knn"}))->capture_default_str();
  mesh->add_option("--N", ma.n, "Gradient raster size")->capture_default_str();
  mesh->add_option("--out", ma.out, "JSON output")->capture_default_str();

  KrigeArgs ka;
  auto* krige = app.add_subcommand("krige", "Kriged local intensity on a grid");
  krige->add_option("--pattern", ka.pattern, "Pattern CSV")->required();
  krige->add_option("--window", ka.window, "Window JSON (default: full unit square)");
  krige->add_option("--cell-side", ka.cell_side, "Cell side or 'auto'")->capture_default_str();
  krige->add_option("--pcf", ka.pcf)->check(CLI::IsMember({"empirical", "thomas", "poisson"}))->capture_default_str();
  krige->add_option("--kappa", ka.kappa, "Thomas parent intensity");
  krige->add_option("--sigma", ka.sigma, "Thomas offspring sd");
  krige->add_option("--rmax", ka.r_max, "Empirical pcf range");
  krige->add_option("--nr", ka.n_r, "Empirical pcf abscissae")->capture_default_str();
  krige->add_option("--bandwidth", ka.bandwidth, "Empirical pcf bandwidth, 'auto' or a half-width")
    ->capture_default_str();
  krige->add_option("--lambda", ka.lambda, "Override the intensity estimate");
  krige->add_option("--approximation", ka.approximation)
    ->check(CLI::IsMember({"midpoint", "fine-integral", "diagonal"}))
    ->capture_default_str();
  krige->add_option("--quadrature", ka.quadrature, "Points per cell side (fine-integral)")->capture_default_str();
  krige->add_option("--mesh-method", ka.mesh_method, "Gradient method for --cell-side auto")
    ->check(CLI::IsMember({"kernel", "counting", "knn"}))
    ->capture_default_str();
  krige->add_option("--mesh-N", ka.mesh_n, "Gradient raster for --cell-side auto")->capture_default_str();
  krige->add_option("--out", ka.out, "Intensity grid CSV")->capture_default_str();
  krige->add_option("--variance-out", ka.variance_out, "Kriging variance grid CSV");
  krige->add_option("--dump-cov", ka.dump_cov, "Write the covariance matrix as CSV");
  bool clamp_flag = true;
  krige->add_flag("--clamp-nonnegative", clamp_flag, "Clamp negative intensities to zero (default)");
  krige->add_flag("--no-clamp", ka.no_clamp, "Write raw, possibly negative, intensities");

  ExperimentArgs ea;
  auto* exp = app.add_subcommand("experiment", "Band-window simulation study");
  exp->add_option("--config", ea.config, "Experiment JSON (default: built-in)");
  exp->add_option("--out", ea.out, "Report JSON")->capture_default_str();
  exp->add_option("--csv-out", ea.csv_out, "Directory for summary and R^2 tables");
  exp->add_option("--n-sim", ea.n_sim, "Override the number of simulations");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  set_log_level(g.verbose >= 2 ? LogLevel::debug : g.verbose == 1 ? LogLevel::info : LogLevel::warn);
  if (g.threads > 0)
    omp_set_num_threads(g.threads);

  try {
    if (*sim)
      run_simulate(sa, g);
    else if (*pcf)
      run_estimate_pcf(pa, g);
    else if (*mesh)
      run_optimal_mesh(ma, g);
    else if (*krige)
      run_krige(ka, g);
    else if (*exp)
      run_experiment_cmd(ea, g, app.count("--seed") > 0);
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.kind()) << ": " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
