#pragma once

#include <optional>
#include <ostream>
#include <string>

namespace catp::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitValidation = 4;

// Full forward pass; writes prediction.pgm, per-boundary mask_s.pgm and
// heatmap_s.pgm, and report.json into the output directory.
int cmd_run(const std::string& config_path, const std::string& image_path,
            const std::optional<std::string>& out_dir, std::ostream& out,
            std::ostream& err);

// Threshold sweep over "d/u,d/u,..." pairs; writes sweep.json. Runs on the
// given image, or on a seeded synthetic raster when none is supplied.
int cmd_sweep(const std::string& config_path, const std::string& grid_text,
              const std::optional<std::string>& image_path, std::ostream& out,
              std::ostream& err);

// Compares the scoring Jacobian against central finite differences.
int cmd_gradcheck(const std::string& config_path, std::ostream& out, std::ostream& err);

// Mean absolute error between two rasters on disk.
int cmd_mae(const std::string& pred_path, const std::string& ref_path, std::ostream& out,
            std::ostream& err);

}  // namespace catp::cli
