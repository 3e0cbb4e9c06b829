#pragma once

#include <string_view>

namespace ppk {

enum class LogLevel
{
  quiet,
  warn,
  info,
  debug
};

void set_log_level(LogLevel level);
LogLevel log_level();

//! Lines go to stderr prefixed with the level; stdout is left for data.
void log_warn(std::string_view message);
void log_info(std::string_view message);
void log_debug(std::string_view message);

} // namespace ppk
