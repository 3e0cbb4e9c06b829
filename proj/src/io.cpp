#include "ppkrige/io.hpp"

#include "ppkrige/error.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#ifndef PPK_VERSION
#define PPK_VERSION "0.0.0"
#endif
#ifndef PPK_GIT_DESCRIBE
#define PPK_GIT_DESCRIBE "unknown"
#endif

namespace ppk {

using nlohmann::json;

std::string version_string()
{
  return std::string(PPK_VERSION) + " (" + PPK_GIT_DESCRIBE + ")";
}

std::string format_double(double v)
{
  std::array<char, 32> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc{})
    fail(ErrorKind::io, "could not format a floating-point value");
  return std::string(buf.data(), end);
}

namespace {

constexpr std::string_view b64_alphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int b64_value(char c)
{
  if (c >= 'A' && c <= 'Z')
    return c - 'A';
  if (c >= 'a' && c <= 'z')
    return c - 'a' + 26;
  if (c >= '0' && c <= '9')
    return c - '0' + 52;
  if (c == '+')
    return 62;
  if (c == '/')
    return 63;
  return -1;
}

std::string_view trim(std::string_view s)
{
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
    s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

double parse_double(std::string_view s, std::size_t line)
{
  s = trim(s);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    fail(ErrorKind::io, "line " + std::to_string(line) + ": '" + std::string(s) + "' is not a number");
  return v;
}

std::ifstream open_in(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    fail(ErrorKind::io, "cannot open '" + path + "' for reading");
  return in;
}

} // namespace

std::string base64_encode(std::span<const std::uint8_t> bytes)
{
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out += b64_alphabet[(v >> 18) & 63];
    out += b64_alphabet[(v >> 12) & 63];
    out += b64_alphabet[(v >> 6) & 63];
    out += b64_alphabet[v & 63];
  }
  const std::size_t rest = bytes.size() - i;
  if (rest == 1) {
    const std::uint32_t v = bytes[i] << 16;
    out += b64_alphabet[(v >> 18) & 63];
    out += b64_alphabet[(v >> 12) & 63];
    out += "==";
  } else if (rest == 2) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8);
    out += b64_alphabet[(v >> 18) & 63];
    out += b64_alphabet[(v >> 12) & 63];
    out += b64_alphabet[(v >> 6) & 63];
    out += '=';
  }
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text)
{
  std::vector<std::uint8_t> out;
  std::uint32_t acc = 0;
  int bits = 0;
  for (char c : text) {
    if (c == '=' || c == '\n' || c == '\r' || c == ' ')
      continue;
    const int v = b64_value(c);
    if (v < 0)
      fail(ErrorKind::io, "invalid base64 character in mask data");
    acc = (acc << 6) | static_cast<std::uint32_t>(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<std::uint8_t>((acc >> bits) & 0xff));
    }
  }
  return out;
}

PointPattern read_pattern_csv(std::istream& in, const Rect& bounds)
{
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  std::vector<Point> points;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view s = trim(line);
    if (s.empty())
      continue;
    if (!header) {
      std::string h;
      for (char c : s)
        if (c != ' ')
          h += c;
      if (h != "x,y")
        fail(ErrorKind::io, "pattern CSV must start with the header 'x,y'");
      header = true;
      continue;
    }
    const auto comma = s.find(',');
    if (comma == std::string_view::npos || s.find(',', comma + 1) != std::string_view::npos)
      fail(ErrorKind::io, "line " + std::to_string(line_no) + ": expected two columns");
    points.push_back({parse_double(s.substr(0, comma), line_no), parse_double(s.substr(comma + 1), line_no)});
  }
  if (!header)
    fail(ErrorKind::io, "pattern CSV is empty");
  return PointPattern(bounds, std::move(points));
}

PointPattern read_pattern_csv(const std::string& path, const Rect& bounds)
{
  std::ifstream in = open_in(path);
  return read_pattern_csv(in, bounds);
}

void write_pattern_csv(std::ostream& out, const PointPattern& pattern)
{
  out << "x,y\n";
  for (const auto& p : pattern.points())
    out << format_double(p.x) << ',' << format_double(p.y) << '\n';
}

namespace {

[[noreturn]] void schema_error(const std::string& path, const std::string& what)
{
  fail(ErrorKind::invalid_argument, path + ": " + what);
}

const json& member(const json& j, const char* key, const std::string& path)
{
  if (!j.is_object())
    schema_error(path, "expected an object");
  auto it = j.find(key);
  if (it == j.end())
    schema_error(path + "." + key, "missing");
  return *it;
}

double number_at(const json& j, const std::string& path)
{
  if (!j.is_number())
    schema_error(path, "expected a number");
  return j.get<double>();
}

int int_at(const json& j, const std::string& path)
{
  if (!j.is_number_integer())
    schema_error(path, "expected an integer");
  return j.get<int>();
}

void check_keys(const json& j, std::initializer_list<std::string_view> allowed, const std::string& path)
{
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (auto a : allowed)
      ok = ok || it.key() == a;
    if (!ok)
      schema_error(path + "." + it.key(), "unknown key");
  }
}

} // namespace

Window window_from_json(const json& j)
{
  const std::string root = "window";
  if (!j.is_object())
    schema_error(root, "expected an object");
  check_keys(j, {"bounds", "observed", "resolution"}, root);

  const json& jb = member(j, "bounds", root);
  if (!jb.is_array() || jb.size() != 4)
    schema_error(root + ".bounds", "expected [xmin, ymin, xmax, ymax]");
  Rect bounds;
  bounds.xmin = number_at(jb[0], root + ".bounds[0]");
  bounds.ymin = number_at(jb[1], root + ".bounds[1]");
  bounds.xmax = number_at(jb[2], root + ".bounds[2]");
  bounds.ymax = number_at(jb[3], root + ".bounds[3]");

  int nx = Window::default_resolution;
  int ny = Window::default_resolution;
  if (auto it = j.find("resolution"); it != j.end()) {
    if (!it->is_array() || it->size() != 2)
      schema_error(root + ".resolution", "expected [nx, ny]");
    nx = int_at((*it)[0], root + ".resolution[0]");
    ny = int_at((*it)[1], root + ".resolution[1]");
  }

  auto it = j.find("observed");
  if (it == j.end() || (it->is_string() && it->get<std::string>() == "full"))
    return Window::full(bounds, nx, ny);
  const json& obs = *it;
  const std::string opath = root + ".observed";
  if (!obs.is_object())
    schema_error(opath, "expected \"full\", a band spec or a mask");
  if (obs.contains("mask")) {
    check_keys(obs, {"mask"}, opath);
    const json& m = obs["mask"];
    check_keys(m, {"nx", "ny", "data"}, opath + ".mask");
    const int mnx = int_at(member(m, "nx", opath + ".mask"), opath + ".mask.nx");
    const int mny = int_at(member(m, "ny", opath + ".mask"), opath + ".mask.ny");
    const json& data = member(m, "data", opath + ".mask");
    if (!data.is_string())
      schema_error(opath + ".mask.data", "expected a base64 string");
    require(mnx > 0 && mny > 0, opath + ".mask: dimensions must be positive");
    const std::vector<std::uint8_t> packed = base64_decode(data.get<std::string>());
    const std::size_t n = static_cast<std::size_t>(mnx) * mny;
    if (packed.size() != (n + 7) / 8)
      schema_error(opath + ".mask.data", "expected " + std::to_string((n + 7) / 8) + " bytes of packed bits");
    std::vector<std::uint8_t> mask(n);
    for (std::size_t p = 0; p < n; ++p)
      mask[p] = (packed[p / 8] >> (p % 8)) & 1u;
    return Window::from_mask(bounds, mnx, mny, std::move(mask));
  }
  check_keys(obs, {"rate", "band_width"}, opath);
  const double rate = number_at(member(obs, "rate", opath), opath + ".rate");
  double width = 0.0;
  if (rate < 1.0)
    width = number_at(member(obs, "band_width", opath), opath + ".band_width");
  return band_window(rate, width, bounds, nx, ny);
}

json window_to_json(const Window& window)
{
  const Rect& b = window.bounds();
  json j;
  j["bounds"] = {b.xmin, b.ymin, b.xmax, b.ymax};
  j["resolution"] = {window.mask_nx(), window.mask_ny()};
  if (window.is_full()) {
    j["observed"] = "full";
    return j;
  }
  if (const auto& layout = window.bands()) {
    const Window rebuilt = band_window(layout->rate, layout->band_width, b, window.mask_nx(), window.mask_ny());
    if (std::equal(rebuilt.mask().begin(), rebuilt.mask().end(), window.mask().begin(), window.mask().end())) {
      j["observed"] = {{"rate", layout->rate}, {"band_width", layout->band_width}};
      return j;
    }
  }
  const auto mask = window.mask();
  std::vector<std::uint8_t> packed((mask.size() + 7) / 8, 0);
  for (std::size_t p = 0; p < mask.size(); ++p)
    if (mask[p])
      packed[p / 8] |= static_cast<std::uint8_t>(1u << (p % 8));
  j["observed"] = {{"mask", {{"nx", window.mask_nx()}, {"ny", window.mask_ny()}, {"data", base64_encode(packed)}}}};
  return j;
}

json read_json_file(const std::string& path)
{
  std::ifstream in = open_in(path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::io, "'" + path + "' is not valid JSON: " + e.what());
  }
}

Window read_window_json(const std::string& path)
{
  return window_from_json(read_json_file(path));
}

void write_grid_csv(std::ostream& out, const ObservationGrid& grid, std::span<const double> values)
{
  require(values.size() == grid.size(), "one value per grid cell is required");
  out << "x,y,value\n";
  for (std::size_t c = 0; c < grid.size(); ++c) {
    const Point p = grid.center(c);
    out << format_double(p.x) << ',' << format_double(p.y) << ',' << format_double(values[c]) << '\n';
  }
}

void write_grid_csv(std::ostream& out,
                    const ObservationGrid& grid,
                    std::span<const double> values,
                    std::span<const std::size_t> cells)
{
  require(values.size() == grid.size(), "one value per grid cell is required");
  out << "x,y,value\n";
  for (std::size_t c : cells) {
    require(c < grid.size(), "cell index outside the grid");
    const Point p = grid.center(c);
    out << format_double(p.x) << ',' << format_double(p.y) << ',' << format_double(values[c]) << '\n';
  }
}

json grid_to_json(const ObservationGrid& grid)
{
  std::vector<int> observed(grid.size());
  for (std::size_t c = 0; c < grid.size(); ++c)
    observed[c] = grid.observed(c) ? 1 : 0;
  return {{"origin", {grid.origin().x, grid.origin().y}},
          {"cell_side", grid.cell_side()},
          {"nx", grid.nx()},
          {"ny", grid.ny()},
          {"n_observed", grid.n_observed()},
          {"observed", observed}};
}

void write_count_matrix_csv(std::ostream& out, const ObservationGrid& grid, std::span<const int> counts)
{
  require(counts.size() == grid.size(), "one count per grid cell is required");
  for (int j = 0; j < grid.ny(); ++j) {
    for (int i = 0; i < grid.nx(); ++i)
      out << (i ? "," : "") << counts[grid.index(i, j)];
    out << '\n';
  }
}

void write_pcf_csv(std::ostream& out, const PcfFunction& g)
{
  out << "r,g\n";
  const auto r = g.abscissae();
  const auto v = g.values();
  for (std::size_t k = 0; k < r.size(); ++k)
    out << format_double(r[k]) << ',' << format_double(v[k]) << '\n';
}

void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m)
{
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      out << (j ? "," : "") << format_double(m(i, j));
    out << '\n';
  }
}

namespace {

std::string_view level_name(Approximation a)
{
  switch (a) {
    case Approximation::fine_integral:
      return "fine-integral";
    case Approximation::midpoint:
      return "midpoint";
    case Approximation::diagonal:
      return "diagonal";
  }
  return "midpoint";
}

Approximation parse_level(const std::string& s, const std::string& path)
{
  if (s == "fine-integral")
    return Approximation::fine_integral;
  if (s == "midpoint")
    return Approximation::midpoint;
  if (s == "diagonal")
    return Approximation::diagonal;
  schema_error(path, "expected fine-integral, midpoint or diagonal");
}

std::vector<double> numbers_at(const json& j, const std::string& path)
{
  if (!j.is_array() || j.empty())
    schema_error(path, "expected a non-empty array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(number_at(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

json nan_to_null(double v)
{
  return std::isfinite(v) ? json(v) : json(nullptr);
}

} // namespace

ExperimentConfig experiment_config_from_json(const json& j)
{
  const std::string root = "config";
  if (!j.is_object())
    schema_error(root, "expected an object");
  check_keys(j,
             {"thomas", "n_sim", "windows", "rates", "band_widths", "grid_sizes", "modes", "seed", "approximation",
              "mask_resolution", "r_max", "n_r", "max_skip_fraction"},
             root);
  ExperimentConfig c;
  if (auto it = j.find("thomas"); it != j.end()) {
    check_keys(*it, {"kappa", "mu", "sigma"}, root + ".thomas");
    if (it->contains("kappa"))
      c.thomas.kappa = number_at((*it)["kappa"], root + ".thomas.kappa");
    if (it->contains("mu"))
      c.thomas.mu = number_at((*it)["mu"], root + ".thomas.mu");
    if (it->contains("sigma"))
      c.thomas.sigma = number_at((*it)["sigma"], root + ".thomas.sigma");
  }
  if (j.contains("n_sim"))
    c.n_sim = int_at(j["n_sim"], root + ".n_sim");
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !j["seed"].is_number_integer())
      schema_error(root + ".seed", "expected a non-negative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }

  if (j.contains("windows") && (j.contains("rates") || j.contains("band_widths")))
    schema_error(root, "give either windows or rates and band_widths, not both");
  if (auto it = j.find("windows"); it != j.end()) {
    if (!it->is_array() || it->empty())
      schema_error(root + ".windows", "expected a non-empty array");
    c.windows.clear();
    for (std::size_t i = 0; i < it->size(); ++i) {
      const std::string p = root + ".windows[" + std::to_string(i) + "]";
      const json& w = (*it)[i];
      check_keys(w, {"rate", "band_width"}, p);
      BandConfig b;
      b.rate = number_at(member(w, "rate", p), p + ".rate");
      b.band_width = b.rate < 1.0 ? number_at(member(w, "band_width", p), p + ".band_width") : 0.0;
      try {
        band_layout(b.rate, b.band_width);
      } catch (const Error& e) {
        schema_error(p, e.what());
      }
      c.windows.push_back(b);
    }
  } else if (j.contains("rates") || j.contains("band_widths")) {
    // cross product, keeping only the pairs that tile the unit square
    const auto rates = numbers_at(member(j, "rates", root), root + ".rates");
    const auto widths = numbers_at(member(j, "band_widths", root), root + ".band_widths");
    c.windows.clear();
    for (double r : rates)
      for (double w : widths) {
        try {
          band_layout(r, w);
          c.windows.push_back({r, w});
        } catch (const Error&) {
        }
      }
    if (c.windows.empty())
      schema_error(root + ".band_widths", "no rate and band width pair is compatible");
  }
  if (auto it = j.find("grid_sizes"); it != j.end()) {
    c.grid_sizes.clear();
    for (double g : numbers_at(*it, root + ".grid_sizes"))
      c.grid_sizes.push_back(static_cast<int>(g));
  }
  if (auto it = j.find("modes"); it != j.end()) {
    if (!it->is_array() || it->empty())
      schema_error(root + ".modes", "expected a non-empty array");
    c.modes.clear();
    for (std::size_t i = 0; i < it->size(); ++i) {
      const json& m = (*it)[i];
      const std::string p = root + ".modes[" + std::to_string(i) + "]";
      if (!m.is_string())
        schema_error(p, "expected \"known\" or \"estimated\"");
      try {
        c.modes.push_back(parse_pcf_mode(m.get<std::string>()));
      } catch (const Error& e) {
        schema_error(p, e.what());
      }
    }
  }
  if (j.contains("approximation")) {
    if (!j["approximation"].is_string())
      schema_error(root + ".approximation", "expected a string");
    c.level = parse_level(j["approximation"].get<std::string>(), root + ".approximation");
  }
  if (j.contains("mask_resolution"))
    c.mask_resolution = int_at(j["mask_resolution"], root + ".mask_resolution");
  if (j.contains("r_max"))
    c.r_max = number_at(j["r_max"], root + ".r_max");
  if (j.contains("n_r"))
    c.n_r = int_at(j["n_r"], root + ".n_r");
  if (j.contains("max_skip_fraction"))
    c.max_skip_fraction = number_at(j["max_skip_fraction"], root + ".max_skip_fraction");
  try {
    c.validate();
  } catch (const Error& e) {
    schema_error(root, e.what());
  }
  return c;
}

json experiment_config_to_json(const ExperimentConfig& c)
{
  json windows = json::array();
  for (const auto& w : c.windows)
    windows.push_back({{"rate", w.rate}, {"band_width", w.band_width}});
  json modes = json::array();
  for (auto m : c.modes)
    modes.push_back(std::string(to_string(m)));
  return {{"thomas", {{"kappa", c.thomas.kappa}, {"mu", c.thomas.mu}, {"sigma", c.thomas.sigma}}},
          {"n_sim", c.n_sim},
          {"windows", windows},
          {"grid_sizes", c.grid_sizes},
          {"modes", modes},
          {"seed", c.seed},
          {"approximation", std::string(level_name(c.level))},
          {"mask_resolution", c.mask_resolution},
          {"r_max", c.r_max},
          {"n_r", c.n_r},
          {"max_skip_fraction", c.max_skip_fraction}};
}

json report_to_json(const EvalReport& report)
{
  json results = json::array();
  for (const auto& r : report.results) {
    json r2 = json::array();
    for (double v : r.r2)
      r2.push_back(nan_to_null(v));
    results.push_back({{"rate", r.window.rate},
                       {"band_width", r.window.band_width},
                       {"n_bands", r.layout.n_bands},
                       {"actual_band_width", r.layout.actual_width},
                       {"grid_size", r.grid_size},
                       {"pcf", std::string(to_string(r.mode))},
                       {"n_unobserved_cells", r.n_unobserved_cells},
                       {"n_used", r.n_used},
                       {"n_skipped", r.n_skipped},
                       {"n_undefined_r2", r.n_undefined_r2},
                       {"mb", r.mb},
                       {"mb_se", r.mb_se},
                       {"msep", r.msep},
                       {"r2_median", nan_to_null(r.r2_median)},
                       {"r2_q1", nan_to_null(r.r2_q1)},
                       {"r2_q3", nan_to_null(r.r2_q3)},
                       {"r2_all_median", nan_to_null(r.r2_all_median)},
                       {"r2", r2},
                       {"runtime_seconds", r.runtime_seconds}});
  }
  return {{"version", report.version},
          {"config", experiment_config_to_json(report.config)},
          {"sim_seeds", report.sim_seeds},
          {"runtime_seconds", report.runtime_seconds},
          {"results", results}};
}

void write_report_csv(std::ostream& out, const EvalReport& report)
{
  out << "rate,band_width,n_bands,grid_size,pcf,n_used,n_skipped,mb,mb_se,msep,r2_median,r2_q1,r2_q3\n";
  for (const auto& r : report.results)
    out << format_double(r.window.rate) << ',' << format_double(r.window.band_width) << ',' << r.layout.n_bands
        << ',' << r.grid_size << ',' << to_string(r.mode) << ',' << r.n_used << ',' << r.n_skipped << ','
        << format_double(r.mb) << ',' << format_double(r.mb_se) << ',' << format_double(r.msep) << ','
        << format_double(r.r2_median) << ',' << format_double(r.r2_q1) << ',' << format_double(r.r2_q3) << '\n';
}

void write_r2_csv(std::ostream& out, const EvalReport& report)
{
  out << "rate,band_width,grid_size,pcf,index,r2\n";
  for (const auto& r : report.results)
    for (std::size_t k = 0; k < r.r2.size(); ++k)
      out << format_double(r.window.rate) << ',' << format_double(r.window.band_width) << ',' << r.grid_size
          << ',' << to_string(r.mode) << ',' << k << ',' << format_double(r.r2[k]) << '\n';
}

} // namespace ppk
