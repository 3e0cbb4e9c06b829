#pragma once

#include "ppkrige/eval.hpp"
#include "ppkrige/geometry.hpp"
#include "ppkrige/pcf.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ppk {

//! Shortest decimal that parses back to the same double.
std::string format_double(double v);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

//! Points from a CSV with header `x,y`. Fails with io on unreadable or
//! malformed input; points outside `bounds` are invalid-argument.
PointPattern read_pattern_csv(std::istream& in, const Rect& bounds);
PointPattern read_pattern_csv(const std::string& path, const Rect& bounds);
void write_pattern_csv(std::ostream& out, const PointPattern& pattern);

//! {"bounds": [xmin, ymin, xmax, ymax],
//!  "observed": "full" | {"rate": r, "band_width": w} | {"mask": {"nx", "ny", "data"}},
//!  "resolution": [nx, ny]}   (resolution optional, default 512 x 512)
//! Mask data is base64 of the row-major bits, least significant bit first.
Window window_from_json(const nlohmann::json& j);
nlohmann::json window_to_json(const Window& window);
Window read_window_json(const std::string& path);

//! Header `x,y,value`, one row per cell centre in row-major order.
void write_grid_csv(std::ostream& out, const ObservationGrid& grid, std::span<const double> values);
//! Cell-centre CSV restricted to cells in `cells`.
void write_grid_csv(std::ostream& out,
                    const ObservationGrid& grid,
                    std::span<const double> values,
                    std::span<const std::size_t> cells);

//! Grid metadata: origin, cell side, dimensions, observed flags.
nlohmann::json grid_to_json(const ObservationGrid& grid);
//! Count matrix, one CSV row per grid row with y increasing.
void write_count_matrix_csv(std::ostream& out, const ObservationGrid& grid, std::span<const int> counts);

//! Header `r,g`.
void write_pcf_csv(std::ostream& out, const PcfFunction& g);

void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m);

ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
nlohmann::json experiment_config_to_json(const ExperimentConfig& config);
nlohmann::json report_to_json(const EvalReport& report);
//! One row per configuration with MB, MSEP and R^2 summaries.
void write_report_csv(std::ostream& out, const EvalReport& report);
//! Per-simulation R^2 values, one row per configuration and simulation.
void write_r2_csv(std::ostream& out, const EvalReport& report);

nlohmann::json read_json_file(const std::string& path);

//! Semantic version followed by the git description of the build.
std::string version_string();

} // namespace ppk
