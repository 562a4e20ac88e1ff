#pragma once

#include <spdlog/spdlog.h>

namespace d2turb {

// Shared logger writing to stderr. Level comes from the D2TURB_LOG
// environment variable (trace, debug, info, warn, error, off); default warn.
spdlog::logger& logger();

}  // namespace d2turb
