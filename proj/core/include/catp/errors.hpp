#pragma once

#include <stdexcept>

namespace catp {

// Bad configuration text or values (CLI exit code 2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Unreadable or malformed files (CLI exit code 3).
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace catp
