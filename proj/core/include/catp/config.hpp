#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "catp/compensation.hpp"
#include "catp/encoder.hpp"
#include "catp/errors.hpp"
#include "catp/pruning.hpp"

namespace catp {

struct RunConfig {
  EncoderConfig encoder;
  PruneThresholds thresholds;
  CompensationMode compensation = CompensationMode::weighted;
  std::uint64_t seed = 1;
  std::optional<std::string> weights_path;
  std::string output_dir = "out";
};

// Parses "key = value" lines; '#' starts a comment; unknown keys are
// rejected. Every key is optional, so the empty string yields the default
// desk-scale configuration. Throws ConfigError naming the offending line.
RunConfig parse_config(std::string_view text);

// parse_config over a file's contents. Throws IoError if unreadable.
RunConfig load_config(const std::string& path);

std::string_view to_string(CompensationMode mode);
CompensationMode compensation_from_string(std::string_view text);  // throws ConfigError

}  // namespace catp
