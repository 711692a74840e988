// Copyright 2026 the calib authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdlib>
#include <iostream>
#include <string>
#include <string_view>

namespace calib {

enum class LogLevel { kQuiet = 0, kInfo = 1, kDebug = 2 };

/// Verbosity from the CALIB_LOG environment variable: quiet | info | debug
/// (or 0 | 1 | 2). Defaults to info.
inline LogLevel logLevel() {
  static const LogLevel level = [] {
    const char* env = std::getenv("CALIB_LOG");
    if (!env) return LogLevel::kInfo;
    const std::string_view v(env);
    if (v == "quiet" || v == "0") return LogLevel::kQuiet;
    if (v == "debug" || v == "2") return LogLevel::kDebug;
    return LogLevel::kInfo;
  }();
  return level;
}

inline void logInfo(const std::string& msg) {
  if (logLevel() >= LogLevel::kInfo) std::cerr << "[calib] " << msg << "\n";
}

inline void logDebug(const std::string& msg) {
  if (logLevel() >= LogLevel::kDebug) std::cerr << "[calib] " << msg << "\n";
}

}  // namespace calib
