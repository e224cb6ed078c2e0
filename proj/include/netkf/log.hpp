#pragma once

#include <string_view>

namespace netkf {

enum class LogLevel { error = 0, warn = 1, info = 2, debug = 3 };

/// Level from NETKF_LOG (error|warn|info|debug); defaults to warn.
LogLevel log_level();

/// Writes "[netkf level] msg" to stderr when `level` is enabled.
void log(LogLevel level, std::string_view msg);

}  // namespace netkf
