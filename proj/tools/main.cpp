#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"confidence-aware token pruning pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  std::string image_path;
  std::string grid_text;
  std::string pred_path;
  std::string ref_path;
  std::string out_dir;
  std::string sweep_image;

  CLI::App* run = app.add_subcommand("run", "forward pass with artifact output");
  run->add_option("--config", config_path, "config file")->required();
  run->add_option("--image", image_path, "input image (PGM or PPM)")->required();
  run->add_option("--out", out_dir, "output directory (defaults to the config's)");

  CLI::App* sweep = app.add_subcommand("sweep", "cost report per threshold pair");
  sweep->add_option("--config", config_path, "config file")->required();
  sweep->add_option("--grid", grid_text, "comma-separated theta_d/theta_u pairs")
      ->required();
  sweep->add_option("--image", sweep_image,
                    "input image (synthetic noise raster when omitted)");

  CLI::App* gradcheck = app.add_subcommand("gradcheck", "scoring Jacobian validation");
  gradcheck->add_option("--config", config_path, "config file")->required();

  CLI::App* mae = app.add_subcommand("mae", "mean absolute error between two rasters");
  mae->add_option("--pred", pred_path, "prediction raster")->required();
  mae->add_option("--ref", ref_path, "reference raster")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& help) {
    return app.exit(help);
  } catch (const CLI::ParseError& parse_error) {
    app.exit(parse_error);
    return catp::cli::kExitConfig;
  }

  if (run->parsed()) {
    const std::optional<std::string> out =
        out_dir.empty() ? std::nullopt : std::optional<std::string>(out_dir);
    return catp::cli::cmd_run(config_path, image_path, out, std::cout, std::cerr);
  }
  if (sweep->parsed()) {
    const std::optional<std::string> image =
        sweep_image.empty() ? std::nullopt : std::optional<std::string>(sweep_image);
    return catp::cli::cmd_sweep(config_path, grid_text, image, std::cout, std::cerr);
  }
  if (gradcheck->parsed()) {
    return catp::cli::cmd_gradcheck(config_path, std::cout, std::cerr);
  }
  return catp::cli::cmd_mae(pred_path, ref_path, std::cout, std::cerr);
}
