#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include "json.hpp"

#include "../tools/commands.hpp"
#include "catp/cost_model.hpp"
#include "catp/image_io.hpp"
#include "catp/weights.hpp"

using namespace catp;
using namespace catp::cli;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path& scratch_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() /
                 ("catp_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

struct ScratchCleanup {
  ~ScratchCleanup() {
    std::error_code ec;
    fs::remove_all(scratch_dir(), ec);
  }
} cleanup;

std::string path_in_scratch(const std::string& name) {
  return (scratch_dir() / name).string();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

json read_json(const std::string& path) { return json::parse(read_file(path)); }

// Writes a deterministic gray 64x64 raster and returns its path.
std::string make_image(const std::string& name, std::uint64_t seed) {
  const Image img = synthetic_image(64, 64, 1, seed);
  Matrix values(64, 64);
  values.data() = img.pixels;
  const std::string path = path_in_scratch(name);
  save_pgm(path, values);
  return path;
}

std::string make_config(const std::string& name, const std::string& extra) {
  const std::string path = path_in_scratch(name);
  write_file(path, "theta_d = 0.45\ntheta_u = 0.55\n" + extra);
  return path;
}

// Runs the installed binary; returns its exit status.
int spawn_cli(const std::string& args, const std::string& env_prefix = "") {
  const std::string out = path_in_scratch("spawn_stdout.txt");
  const std::string errs = path_in_scratch("spawn_stderr.txt");
  const std::string command =
      env_prefix + " " + std::string(CATP_CLI_PATH) + " " + args + " > " + out +
      " 2> " + errs;
  const int status = std::system(command.c_str());
  REQUIRE(status != -1);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::size_t count_white(const Image& img) {
  std::size_t count = 0;
  for (const double v : img.pixels) {
    if (v == 1.0) ++count;
  }
  return count;
}

}  // namespace

TEST_CASE("run writes the full artifact set with a consistent report") {
  const std::string config = make_config("run.cfg", "seed = 1\n");
  const std::string image = make_image("input.pgm", 5);
  const std::string out_dir = path_in_scratch("run_out");

  std::ostringstream out, err;
  REQUIRE(cmd_run(config, image, out_dir, out, err) == kExitOk);
  CHECK(out.str().find("patches per stage:") != std::string::npos);
  CHECK(out.str().find("flops:") != std::string::npos);

  for (const std::string name :
       {"prediction.pgm", "mask_2.pgm", "mask_3.pgm", "mask_4.pgm", "heatmap_2.pgm",
        "heatmap_3.pgm", "heatmap_4.pgm", "report.json"}) {
    CHECK(fs::exists(fs::path(out_dir) / name));
  }

  const json report = read_json(out_dir + "/report.json");
  CHECK(report["config"]["seed"] == 1);
  CHECK(report["config"]["theta_d"] == 0.45);
  CHECK(report["config"]["embed_dim"] == 32);

  REQUIRE(report["stages"].size() == 4);
  CHECK(report["stages"][0]["patches"] == 16);
  CHECK(report["stages"][0]["prototypes"] == 0);
  CHECK(report["stages"][0]["tokens"] == 17);

  REQUIRE(report["boundaries"].size() == 3);
  for (const json& boundary : report["boundaries"]) {
    const std::size_t entering = boundary["entering"];
    const std::size_t low = boundary["low"];
    const std::size_t mid = boundary["mid"];
    const std::size_t high = boundary["high"];
    CHECK(low + mid + high == entering);
    CHECK(boundary["mask_popcount"] == mid);
  }

  REQUIRE(report["cost"]["per_layer"].size() == 8);
  const std::uint64_t baseline = report["cost"]["total_baseline"];
  CHECK(baseline == 8 * layer_flops(17, 32, 4, 4.0));
  CHECK(report["cost"]["total_pruned"] < baseline);

  CHECK(report["artifacts"]["prediction"] == "prediction.pgm");
  CHECK(report["artifacts"]["masks"].size() == 3);
  CHECK(report["artifacts"]["heatmaps"].size() == 3);

  // Mask rasters carry the same survivor counts as the report.
  for (std::size_t b = 0; b < 3; ++b) {
    const std::string mask_path =
        out_dir + "/mask_" + std::to_string(b + 2) + ".pgm";
    const Image mask = load_netpbm(mask_path);
    CHECK(mask.height == 4);
    CHECK(mask.width == 4);
    CHECK(count_white(mask) == report["boundaries"][b]["mask_popcount"]);
  }

  const Image prediction = load_netpbm(out_dir + "/prediction.pgm");
  CHECK(prediction.height == 64);
  CHECK(prediction.width == 64);
}

TEST_CASE("run artifacts are byte-identical across invocations") {
  const std::string config = make_config("det.cfg", "seed = 11\n");
  const std::string image = make_image("det.pgm", 6);
  const std::string dir_a = path_in_scratch("det_a");
  const std::string dir_b = path_in_scratch("det_b");

  std::ostringstream out, err;
  REQUIRE(cmd_run(config, image, dir_a, out, err) == kExitOk);
  REQUIRE(cmd_run(config, image, dir_b, out, err) == kExitOk);

  for (const std::string name :
       {"prediction.pgm", "mask_2.pgm", "mask_3.pgm", "mask_4.pgm", "heatmap_2.pgm",
        "heatmap_3.pgm", "heatmap_4.pgm", "report.json"}) {
    CHECK(read_file(dir_a + "/" + name) == read_file(dir_b + "/" + name));
  }
}

TEST_CASE("open thresholds keep every token in the masks") {
  const std::string config = path_in_scratch("open.cfg");
  write_file(config, "theta_d = 0\ntheta_u = 1\ncompensation = none\n");
  const std::string image = make_image("open.pgm", 7);
  const std::string out_dir = path_in_scratch("open_out");

  std::ostringstream out, err;
  REQUIRE(cmd_run(config, image, out_dir, out, err) == kExitOk);

  const json report = read_json(out_dir + "/report.json");
  for (const json& boundary : report["boundaries"]) {
    CHECK(boundary["mid"] == 16);
    CHECK(boundary["low"] == 0);
    CHECK(boundary["high"] == 0);
    CHECK(boundary["fallback"] == false);
  }
  for (int b = 2; b <= 4; ++b) {
    const Image mask = load_netpbm(out_dir + "/mask_" + std::to_string(b) + ".pgm");
    CHECK(count_white(mask) == 16);
  }
  for (const json& stage : report["stages"]) CHECK(stage["prototypes"] == 0);
}

TEST_CASE("sweep cost agrees with run cost at the same thresholds") {
  const std::string config = make_config("sweep.cfg", "seed = 3\n");
  const std::string image = make_image("sweep.pgm", 9);
  const std::string run_dir = path_in_scratch("sweep_run");

  std::ostringstream out, err;
  REQUIRE(cmd_run(config, image, run_dir, out, err) == kExitOk);

  const std::string sweep_config = path_in_scratch("sweep_outdir.cfg");
  write_file(sweep_config,
             "theta_d = 0.45\ntheta_u = 0.55\nseed = 3\noutput_dir = " +
                 path_in_scratch("sweep_out") + "\n");
  REQUIRE(cmd_sweep(sweep_config, "0.45/0.55, 0.9/0.1", image, out, err) == kExitOk);

  const json run_report = read_json(run_dir + "/report.json");
  const json sweep_report = read_json(path_in_scratch("sweep_out") + "/sweep.json");

  REQUIRE(sweep_report["entries"].size() == 2);
  const json& match = sweep_report["entries"][0];
  REQUIRE(match["valid"] == true);
  CHECK(match["theta_d"] == 0.45);
  CHECK(match["report"]["total_pruned"] == run_report["cost"]["total_pruned"]);
  CHECK(match["report"]["scoring_overhead"] == run_report["cost"]["scoring_overhead"]);
  CHECK(match["stage_counts"] == run_report["stages"]);

  const json& rejected = sweep_report["entries"][1];
  CHECK(rejected["valid"] == false);
  CHECK_FALSE(rejected["diagnostic"].get<std::string>().empty());
  CHECK_FALSE(rejected.contains("report"));
}

TEST_CASE("sweep without an image uses a seeded synthetic raster") {
  const std::string dir_a = path_in_scratch("synth_a");
  const std::string dir_b = path_in_scratch("synth_b");
  const std::string cfg_a = path_in_scratch("synth_a.cfg");
  const std::string cfg_b = path_in_scratch("synth_b.cfg");
  write_file(cfg_a, "seed = 21\noutput_dir = " + dir_a + "\n");
  write_file(cfg_b, "seed = 21\noutput_dir = " + dir_b + "\n");

  std::ostringstream out, err;
  REQUIRE(cmd_sweep(cfg_a, "0.4/0.6,0.45/0.55", std::nullopt, out, err) == kExitOk);
  REQUIRE(cmd_sweep(cfg_b, "0.4/0.6,0.45/0.55", std::nullopt, out, err) == kExitOk);

  // Identical apart from the echoed output_dir lines.
  const json a = read_json(dir_a + "/sweep.json");
  const json b = read_json(dir_b + "/sweep.json");
  CHECK(a["entries"] == b["entries"]);

  // An empty grid is allowed and produces an empty entry list.
  REQUIRE(cmd_sweep(cfg_a, "", std::nullopt, out, err) == kExitOk);
  CHECK(read_json(dir_a + "/sweep.json")["entries"].empty());
}

TEST_CASE("gradcheck validates the scoring jacobian") {
  const std::string config = make_config("grad.cfg", "seed = 2\n");
  std::ostringstream out, err;
  CHECK(cmd_gradcheck(config, out, err) == kExitOk);
  CHECK(out.str().find("max relative error") != std::string::npos);
  CHECK(out.str().find("gradcheck passed") != std::string::npos);
  CHECK(out.str().find("tau=10") != std::string::npos);
}

TEST_CASE("mae compares rasters") {
  const std::string image = make_image("mae_a.pgm", 31);

  std::ostringstream out, err;
  REQUIRE(cmd_mae(image, image, out, err) == kExitOk);
  CHECK(out.str() == "mae = 0\n");

  Matrix zeros(64, 64, 0.0);
  const std::string black = path_in_scratch("mae_black.pgm");
  save_pgm(black, zeros);

  std::ostringstream out2;
  REQUIRE(cmd_mae(image, black, out2, err) == kExitOk);
  double value = -1.0;
  std::istringstream parse(out2.str().substr(out2.str().find('=') + 1));
  parse >> value;
  CHECK(value > 0.0);
  CHECK(value <= 1.0);

  Matrix small(32, 32, 0.0);
  const std::string tiny = path_in_scratch("mae_small.pgm");
  save_pgm(tiny, small);
  std::ostringstream out3, err3;
  CHECK(cmd_mae(image, tiny, out3, err3) == kExitValidation);
}

TEST_CASE("exit codes map the error taxonomy") {
  const std::string image = make_image("codes.pgm", 40);
  std::ostringstream out, err;

  CHECK(cmd_run(path_in_scratch("absent.cfg"), image,
                path_in_scratch("codes_out"), out, err) == kExitIo);

  const std::string bad_key = path_in_scratch("badkey.cfg");
  write_file(bad_key, "not_a_key = 4\n");
  CHECK(cmd_run(bad_key, image, path_in_scratch("codes_out"), out, err) == kExitConfig);

  const std::string inverted = path_in_scratch("inverted.cfg");
  write_file(inverted, "theta_d = 0.8\ntheta_u = 0.2\n");
  CHECK(cmd_run(inverted, image, path_in_scratch("codes_out"), out, err) ==
        kExitConfig);

  const std::string ok = make_config("codes_ok.cfg", "");
  CHECK(cmd_run(ok, path_in_scratch("absent.pgm"), path_in_scratch("codes_out"), out,
                err) == kExitIo);

  Matrix small(32, 32, 0.5);
  const std::string tiny = path_in_scratch("tiny.pgm");
  save_pgm(tiny, small);
  CHECK(cmd_run(ok, tiny, path_in_scratch("codes_out"), out, err) == kExitValidation);

  CHECK(cmd_sweep(ok, "0.3:0.7", std::nullopt, out, err) == kExitConfig);
  CHECK(cmd_sweep(ok, "0.3/0.7,", std::nullopt, out, err) == kExitConfig);
  CHECK(cmd_sweep(ok, "0.3/abc", std::nullopt, out, err) == kExitConfig);

  CHECK(cmd_mae(path_in_scratch("absent.pgm"), image, out, err) == kExitIo);
}

TEST_CASE("weight files silence the fallback warning") {
  EncoderConfig cfg;
  const TensorMap full = export_weights(resolve_weights({}, cfg, 50).weights);
  const std::string weight_path = path_in_scratch("full.catpw");
  save_weight_file(weight_path, full);

  const std::string config = path_in_scratch("weights.cfg");
  write_file(config, "theta_d = 0.45\ntheta_u = 0.55\nweights = " + weight_path + "\n");
  const std::string image = make_image("weights.pgm", 51);

  std::ostringstream out, err;
  REQUIRE(cmd_run(config, image, path_in_scratch("weights_out"), out, err) == kExitOk);
  CHECK(err.str().find("drawn from seed") == std::string::npos);

  // A partial file still runs but says what was filled in.
  TensorMap partial;
  partial["cls_token"] = full.at("cls_token");
  const std::string partial_path = path_in_scratch("partial.catpw");
  save_weight_file(partial_path, partial);
  const std::string partial_config = path_in_scratch("partial.cfg");
  write_file(partial_config, "weights = " + partial_path + "\n");

  std::ostringstream out2, err2;
  REQUIRE(cmd_run(partial_config, image, path_in_scratch("weights_out2"), out2, err2) ==
          kExitOk);
  CHECK(err2.str().find("missing from file") != std::string::npos);
  CHECK(err2.str().find("pos_embed") != std::string::npos);

  const std::string bad_path_config = path_in_scratch("badweights.cfg");
  write_file(bad_path_config, "weights = " + path_in_scratch("absent.catpw") + "\n");
  std::ostringstream out3, err3;
  CHECK(cmd_run(bad_path_config, image, path_in_scratch("weights_out3"), out3, err3) ==
        kExitIo);
}

TEST_CASE("binary: subcommand dispatch and argument errors") {
  CHECK(spawn_cli("") == kExitConfig);
  CHECK(spawn_cli("frobnicate") == kExitConfig);
  CHECK(spawn_cli("run --config only.cfg") == kExitConfig);
  CHECK(spawn_cli("--help") == kExitOk);

  const std::string config = make_config("bin.cfg", "seed = 4\n");
  const std::string image = make_image("bin.pgm", 60);
  const std::string out_dir = path_in_scratch("bin_out");

  CHECK(spawn_cli("run --config " + config + " --image " + image + " --out " +
                  out_dir) == kExitOk);
  CHECK(fs::exists(fs::path(out_dir) / "prediction.pgm"));

  CHECK(spawn_cli("gradcheck --config " + config) == kExitOk);
  CHECK(spawn_cli("mae --pred " + image + " --ref " + image) == kExitOk);
  CHECK(spawn_cli("sweep --config " + config + " --grid 0.45/0.55 --image " + image) ==
        kExitOk);
}

TEST_CASE("binary: CATP_SEED overrides the config seed") {
  const std::string config = make_config("seed.cfg", "seed = 4\n");
  const std::string image = make_image("seed.pgm", 61);
  const std::string out_dir = path_in_scratch("seed_out");

  REQUIRE(spawn_cli("run --config " + config + " --image " + image + " --out " +
                        out_dir,
                    "CATP_SEED=777") == kExitOk);
  CHECK(read_json(out_dir + "/report.json")["config"]["seed"] == 777);

  CHECK(spawn_cli("run --config " + config + " --image " + image + " --out " + out_dir,
                  "CATP_SEED=banana") == kExitConfig);
  CHECK(spawn_cli("run --config " + config + " --image " + image + " --out " + out_dir,
                  "CATP_SEED=12x") == kExitConfig);
}
