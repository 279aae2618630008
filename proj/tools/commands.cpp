#include "commands.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>

#include "json.hpp"

#include "catp/config.hpp"
#include "catp/image_io.hpp"
#include "catp/pipeline.hpp"
#include "catp/rng.hpp"

namespace catp::cli {

namespace {

using ordered_json = nlohmann::ordered_json;

int guard(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& ex) {
    err << "config error: " << ex.what() << "\n";
    return kExitConfig;
  } catch (const IoError& ex) {
    err << "io error: " << ex.what() << "\n";
    return kExitIo;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitValidation;
  }
}

RunConfig load_run_config(const std::string& path) {
  RunConfig config = load_config(path);
  if (const char* env = std::getenv("CATP_SEED")) {
    const std::string text(env);
    std::uint64_t seed = 0;
    std::size_t consumed = 0;
    try {
      seed = std::stoull(text, &consumed);
    } catch (const std::exception&) {
      consumed = 0;
    }
    if (consumed != text.size() || text.empty()) {
      throw ConfigError("CATP_SEED must be an unsigned integer, got '" + text + "'");
    }
    config.seed = seed;
  }
  return config;
}

WeightResolution prepare_weights(const RunConfig& config, std::ostream& err) {
  TensorMap tensors;
  if (config.weights_path) tensors = load_weight_file(*config.weights_path);
  WeightResolution resolution = resolve_weights(tensors, config.encoder, config.seed);
  if (!resolution.missing.empty()) {
    if (config.weights_path) {
      err << "weights: " << resolution.missing.size()
          << " tensors missing from file, drawn from seed " << config.seed << ":";
      for (const std::string& name : resolution.missing) err << " " << name;
      err << "\n";
    } else {
      err << "weights: no file given, all " << resolution.missing.size()
          << " tensors drawn from seed " << config.seed << "\n";
    }
  }
  return resolution;
}

ThresholdGrid parse_grid(const std::string& text) {
  ThresholdGrid grid;
  std::size_t start = 0;
  const auto trimmed = [](std::string item) {
    const auto is_space = [](char ch) { return std::isspace(static_cast<unsigned char>(ch)); };
    item.erase(item.begin(), std::find_if_not(item.begin(), item.end(), is_space));
    item.erase(std::find_if_not(item.rbegin(), item.rend(), is_space).base(), item.end());
    return item;
  };
  while (start <= text.size()) {
    std::size_t end = text.find(',', start);
    if (end == std::string::npos) end = text.size();
    const std::string item = trimmed(text.substr(start, end - start));
    start = end + 1;
    if (item.empty()) {
      if (grid.empty() && start > text.size()) break;  // wholly empty grid
      throw ConfigError("grid: empty entry");
    }
    const std::size_t slash = item.find('/');
    if (slash == std::string::npos) {
      throw ConfigError("grid: expected 'theta_d/theta_u', got '" + item + "'");
    }
    try {
      std::size_t used_d = 0;
      std::size_t used_u = 0;
      const std::string d_text = trimmed(item.substr(0, slash));
      const std::string u_text = trimmed(item.substr(slash + 1));
      const double d = std::stod(d_text, &used_d);
      const double u = std::stod(u_text, &used_u);
      if (used_d != d_text.size() || used_u != u_text.size()) {
        throw std::invalid_argument(item);
      }
      grid.emplace_back(d, u);
    } catch (const std::exception&) {
      throw ConfigError("grid: cannot parse pair '" + item + "'");
    }
  }
  return grid;
}

ordered_json config_to_json(const RunConfig& config) {
  ordered_json json;
  json["image_h"] = config.encoder.image_h;
  json["image_w"] = config.encoder.image_w;
  json["patch_size"] = config.encoder.patch_size;
  json["embed_dim"] = config.encoder.embed_dim;
  json["num_layers"] = config.encoder.num_layers;
  json["num_heads"] = config.encoder.num_heads;
  json["mlp_ratio"] = config.encoder.mlp_ratio;
  json["in_channels"] = config.encoder.in_channels;
  json["stage_boundaries"] = config.encoder.stage_boundaries;
  json["theta_d"] = config.thresholds.theta_d;
  json["theta_u"] = config.thresholds.theta_u;
  json["tau"] = config.thresholds.tau;
  json["compensation"] = std::string(to_string(config.compensation));
  json["seed"] = config.seed;
  return json;
}

ordered_json cost_to_json(const CostReport& report) {
  ordered_json json;
  json["per_layer"] = ordered_json::array();
  for (const LayerCost& cost : report.per_layer) {
    json["per_layer"].push_back(
        {{"layer", cost.layer}, {"tokens", cost.tokens}, {"flops", cost.flops}});
  }
  json["scoring_overhead"] = report.scoring_overhead;
  json["total_pruned"] = report.total_pruned;
  json["total_baseline"] = report.total_baseline;
  json["reduction_ratio"] = report.reduction_ratio;
  return json;
}

ordered_json counts_to_json(const std::vector<StageTokenCount>& counts) {
  ordered_json json = ordered_json::array();
  for (std::size_t stage = 1; stage <= counts.size(); ++stage) {
    const StageTokenCount& count = counts[stage - 1];
    json.push_back({{"stage", stage},
                    {"patches", count.patches},
                    {"prototypes", count.prototypes},
                    {"tokens", count.total()}});
  }
  return json;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create " + path.string());
  out << content;
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

int cmd_run(const std::string& config_path, const std::string& image_path,
            const std::optional<std::string>& out_dir, std::ostream& out,
            std::ostream& err) {
  return guard(err, [&] {
    RunConfig config = load_run_config(config_path);
    if (out_dir) config.output_dir = *out_dir;
    const Image image = load_netpbm(image_path);
    const WeightResolution resolution = prepare_weights(config, err);

    const auto started = std::chrono::steady_clock::now();
    const PipelineRunResult result = run_pipeline(
        image, config.encoder, config.thresholds, config.compensation, resolution.weights);
    const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                             std::chrono::steady_clock::now() - started)
                             .count();

    const std::filesystem::path dir(config.output_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string());

    const std::size_t grid_h = config.encoder.grid_h();
    const std::size_t grid_w = config.encoder.grid_w();

    Matrix prediction(result.prediction.height, result.prediction.width);
    prediction.data() = result.prediction.values;
    save_pgm((dir / "prediction.pgm").string(), prediction);

    ordered_json report;
    report["config"] = config_to_json(config);
    report["stages"] = counts_to_json(result.stage_counts);
    report["boundaries"] = ordered_json::array();
    ordered_json artifacts;
    artifacts["prediction"] = "prediction.pgm";
    artifacts["masks"] = ordered_json::array();
    artifacts["heatmaps"] = ordered_json::array();

    for (const StageRecord& record : result.records) {
      const std::string suffix = std::to_string(record.stage) + ".pgm";

      Matrix mask_grid(grid_h, grid_w, 0.0);
      for (const std::size_t pos : record.surviving.slots) mask_grid.data()[pos] = 1.0;
      save_pgm((dir / ("mask_" + suffix)).string(), mask_grid);
      artifacts["masks"].push_back("mask_" + suffix);

      Matrix heat_grid(grid_h, grid_w);
      heat_grid.data() = confidence_heatmap(record, grid_h, grid_w);
      save_pgm((dir / ("heatmap_" + suffix)).string(), heat_grid);
      artifacts["heatmaps"].push_back("heatmap_" + suffix);

      const auto at_threshold = [&record](double threshold) {
        return std::count(record.scores.begin(), record.scores.end(), threshold);
      };
      report["boundaries"].push_back(
          {{"stage", record.stage},
           {"entering", record.entering.size()},
           {"low", record.partition.low.size()},
           {"mid", record.partition.mid.size()},
           {"high", record.partition.high.size()},
           {"fallback", record.fallback_applied},
           {"mask_popcount", record.mask.popcount()},
           {"scores_at_theta_d", at_threshold(config.thresholds.theta_d)},
           {"scores_at_theta_u", at_threshold(config.thresholds.theta_u)}});
    }

    report["cost"] = cost_to_json(result.cost);
    report["artifacts"] = artifacts;
    write_text_file(dir / "report.json", report.dump(2) + "\n");

    out << "patches per stage:";
    for (const StageTokenCount& count : result.stage_counts) out << " " << count.patches;
    out << "\nflops: " << result.cost.total_pruned << " of " << result.cost.total_baseline
        << " baseline (reduction " << result.cost.reduction_ratio * 100.0 << "%)\n";
    out << "wrote " << dir.string() << "/{prediction.pgm, mask_*.pgm, heatmap_*.pgm, "
        << "report.json} in " << elapsed << " ms\n";
    return kExitOk;
  });
}

int cmd_sweep(const std::string& config_path, const std::string& grid_text,
              const std::optional<std::string>& image_path, std::ostream& out,
              std::ostream& err) {
  return guard(err, [&] {
    const RunConfig config = load_run_config(config_path);
    const ThresholdGrid grid = parse_grid(grid_text);
    const Image image =
        image_path ? load_netpbm(*image_path)
                   : synthetic_image(config.encoder.image_h, config.encoder.image_w,
                                     config.encoder.in_channels, config.seed);
    const WeightResolution resolution = prepare_weights(config, err);

    const StageCountRunner runner = [&](const PruneThresholds& thresholds) {
      return run_pipeline(image, config.encoder, thresholds, config.compensation,
                          resolution.weights)
          .stage_counts;
    };
    const std::vector<SweepEntry> entries = threshold_sweep(
        runner, grid, config.encoder, config.compensation, config.thresholds.tau);

    ordered_json sweep;
    sweep["config"] = config_to_json(config);
    sweep["entries"] = ordered_json::array();
    for (const SweepEntry& entry : entries) {
      ordered_json item;
      item["theta_d"] = entry.theta_d;
      item["theta_u"] = entry.theta_u;
      item["valid"] = entry.valid;
      if (entry.valid) {
        item["stage_counts"] = counts_to_json(entry.stage_counts);
        item["report"] = cost_to_json(entry.report);
      } else {
        item["diagnostic"] = entry.diagnostic;
      }
      sweep["entries"].push_back(std::move(item));
    }

    const std::filesystem::path dir(config.output_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string());
    write_text_file(dir / "sweep.json", sweep.dump(2) + "\n");

    out << "swept " << entries.size() << " threshold pairs, wrote "
        << (dir / "sweep.json").string() << "\n";
    return kExitOk;
  });
}

int cmd_gradcheck(const std::string& config_path, std::ostream& out, std::ostream& err) {
  return guard(err, [&] {
    const RunConfig config = load_run_config(config_path);
    const std::size_t dim = config.encoder.embed_dim;
    const double tau = config.thresholds.tau;
    constexpr std::size_t kDraws = 100;
    constexpr std::size_t kTokens = 8;
    constexpr double kStep = 1e-6;

    Rng rng(config.seed);
    double max_rel = 0.0;
    Matrix last_patches;
    ScoringHead last_head;

    for (std::size_t draw = 0; draw < kDraws; ++draw) {
      const Matrix patches = gaussian_init(rng, kTokens, dim, 0.3);
      ScoringHead head;
      head.weight.resize(dim);
      for (double& w : head.weight) {
        // Magnitudes bounded away from zero keep the per-coordinate relative
        // comparison meaningful.
        const double magnitude = 0.1 + 1.4 * rng.next_unit_open();
        w = rng.next_unit_open() < 0.5 ? -magnitude : magnitude;
      }
      head.bias = 2.0 * rng.next_unit_open() - 1.0;

      const Matrix analytic = score_jacobian(patches, head, tau);
      for (std::size_t t = 0; t < kTokens; ++t) {
        for (std::size_t j = 0; j < dim; ++j) {
          Matrix plus = patches;
          Matrix minus = patches;
          plus(t, j) += kStep;
          minus(t, j) -= kStep;
          const double fd = (score_tokens(plus, head, tau)[t] -
                             score_tokens(minus, head, tau)[t]) /
                            (2.0 * kStep);
          const double an = analytic(t, j);
          const double rel =
              fd == an ? 0.0 : std::abs(fd - an) / std::max(std::abs(an), 1e-12);
          max_rel = std::max(max_rel, rel);
        }
      }
      last_patches = patches;
      last_head = head;
    }

    out << "max relative error over " << kDraws << " draws: " << max_rel << "\n";
    for (double scale : {1.0, 10.0, 100.0}) {
      const Matrix jac = score_jacobian(last_patches, last_head, tau * scale);
      double magnitude = 0.0;
      for (const double value : jac.data()) magnitude = std::max(magnitude, std::abs(value));
      out << "max |jacobian| at tau=" << tau * scale << ": " << magnitude << "\n";
    }

    if (max_rel >= 1e-4) {
      err << "gradcheck failed: relative error " << max_rel << " exceeds 1e-4\n";
      return kExitValidation;
    }
    out << "gradcheck passed\n";
    return kExitOk;
  });
}

int cmd_mae(const std::string& pred_path, const std::string& ref_path, std::ostream& out,
            std::ostream& err) {
  return guard(err, [&] {
    const Image pred = convert_channels(load_netpbm(pred_path), 1);
    const Image ref = convert_channels(load_netpbm(ref_path), 1);
    out << "mae = " << compute_mae(pred, ref) << "\n";
    return kExitOk;
  });
}

}  // namespace catp::cli
