#include "catp/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <initializer_list>
#include <map>
#include <sstream>
#include <vector>

namespace catp {

namespace {

std::string_view trim(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) {
    text.remove_prefix(1);
  }
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) {
    text.remove_suffix(1);
  }
  return text;
}

[[noreturn]] void fail(std::size_t line, const std::string& message) {
  throw ConfigError("config line " + std::to_string(line) + ": " + message);
}

std::uint64_t parse_u64(std::string_view value, std::size_t line) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    fail(line, "expected an unsigned integer, got '" + std::string(value) + "'");
  }
  return out;
}

double parse_f64(std::string_view value, std::size_t line) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    fail(line, "expected a number, got '" + std::string(value) + "'");
  }
  return out;
}

std::vector<std::size_t> parse_size_list(std::string_view value, std::size_t line) {
  std::vector<std::size_t> out;
  std::size_t start = 0;
  while (start <= value.size()) {
    std::size_t end = value.find(',', start);
    if (end == std::string_view::npos) end = value.size();
    const std::string_view item = trim(value.substr(start, end - start));
    if (item.empty()) fail(line, "empty entry in list");
    out.push_back(static_cast<std::size_t>(parse_u64(item, line)));
    start = end + 1;
  }
  return out;
}

}  // namespace

std::string_view to_string(CompensationMode mode) {
  switch (mode) {
    case CompensationMode::none: return "none";
    case CompensationMode::average: return "average";
    case CompensationMode::weighted: return "weighted";
  }
  return "weighted";
}

CompensationMode compensation_from_string(std::string_view text) {
  if (text == "none") return CompensationMode::none;
  if (text == "average") return CompensationMode::average;
  if (text == "weighted") return CompensationMode::weighted;
  throw ConfigError("compensation must be one of none, average, weighted; got '" +
                    std::string(text) + "'");
}

RunConfig parse_config(std::string_view text) {
  RunConfig config;
  std::map<std::string, std::size_t> seen_line;

  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;

    if (const std::size_t hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;

    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) fail(line_no, "expected 'key = value'");
    const std::string key{trim(line.substr(0, eq))};
    const std::string_view value = trim(line.substr(eq + 1));
    if (key.empty()) fail(line_no, "missing key before '='");
    if (value.empty()) fail(line_no, "missing value for '" + key + "'");
    seen_line[key] = line_no;

    if (key == "image_h") {
      config.encoder.image_h = parse_u64(value, line_no);
    } else if (key == "image_w") {
      config.encoder.image_w = parse_u64(value, line_no);
    } else if (key == "patch_size") {
      config.encoder.patch_size = parse_u64(value, line_no);
    } else if (key == "embed_dim") {
      config.encoder.embed_dim = parse_u64(value, line_no);
    } else if (key == "num_layers") {
      config.encoder.num_layers = parse_u64(value, line_no);
    } else if (key == "num_heads") {
      config.encoder.num_heads = parse_u64(value, line_no);
    } else if (key == "mlp_ratio") {
      config.encoder.mlp_ratio = parse_f64(value, line_no);
    } else if (key == "in_channels") {
      config.encoder.in_channels = parse_u64(value, line_no);
    } else if (key == "stage_boundaries") {
      config.encoder.stage_boundaries = parse_size_list(value, line_no);
    } else if (key == "theta_d") {
      config.thresholds.theta_d = parse_f64(value, line_no);
    } else if (key == "theta_u") {
      config.thresholds.theta_u = parse_f64(value, line_no);
    } else if (key == "tau") {
      config.thresholds.tau = parse_f64(value, line_no);
    } else if (key == "compensation") {
      try {
        config.compensation = compensation_from_string(value);
      } catch (const ConfigError& err) {
        fail(line_no, err.what());
      }
    } else if (key == "seed") {
      config.seed = parse_u64(value, line_no);
    } else if (key == "weights") {
      config.weights_path = std::string(value);
    } else if (key == "output_dir") {
      config.output_dir = std::string(value);
    } else {
      fail(line_no, "unknown key '" + key + "'");
    }
  }

  const auto blame = [&seen_line](std::initializer_list<const char*> keys) {
    std::size_t line = 0;
    for (const char* key : keys) {
      if (const auto it = seen_line.find(key); it != seen_line.end()) {
        line = std::max(line, it->second);
      }
    }
    return line;
  };

  try {
    config.encoder.validate();
  } catch (const std::invalid_argument& err) {
    const std::size_t line =
        blame({"image_h", "image_w", "patch_size", "embed_dim", "num_layers",
               "num_heads", "mlp_ratio", "in_channels", "stage_boundaries"});
    fail(line, err.what());
  }
  try {
    config.thresholds.validate();
  } catch (const std::invalid_argument& err) {
    fail(blame({"theta_d", "theta_u", "tau"}), err.what());
  }
  return config;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

}  // namespace catp
