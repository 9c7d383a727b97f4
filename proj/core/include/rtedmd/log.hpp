#pragma once

#include <string_view>

namespace rtedmd {

enum class LogLevel { Quiet, Warn, Info };

void set_log_level(LogLevel level);
LogLevel log_level();

void log_warning(std::string_view message);
void log_info(std::string_view message);

}  // namespace rtedmd
