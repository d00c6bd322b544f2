#pragma once

#include <spdlog/logger.h>

#include <memory>

namespace mlembed {

// Shared stderr logger. Verbosity comes from MLEMBED_LOG_LEVEL
// (trace, debug, info, warn, error, off); default is "warn".
std::shared_ptr<spdlog::logger> logger();

}  // namespace mlembed
