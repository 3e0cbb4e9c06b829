#include "ppkrige/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace ppk {

namespace {

std::atomic<LogLevel> current{LogLevel::warn};
std::mutex sink;

void emit(LogLevel level, std::string_view tag, std::string_view message)
{
  if (level > current.load())
    return;
  std::lock_guard lock(sink);
  std::cerr << tag << ": " << message << '\n';
}

} // namespace

void set_log_level(LogLevel level)
{
  current.store(level);
}

LogLevel log_level()
{
  return current.load();
}

void log_warn(std::string_view message)
{
  emit(LogLevel::warn, "warning", message);
}

void log_info(std::string_view message)
{
  emit(LogLevel::info, "info", message);
}

void log_debug(std::string_view message)
{
  emit(LogLevel::debug, "debug", message);
}

} // namespace ppk
