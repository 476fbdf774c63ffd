// soilgp command-line front end: synthetic data, fitting, prediction, maps,
// sequential evaluation, correlations, sample plans and sample-mass math.

#include <CLI11.hpp>
#include <glog/logging.h>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "soilgp/soilgp.hpp"

namespace {

using namespace soilgp;
namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kNumericError = 3 };

std::vector<double> parse_number_list(const std::string &text,
                                      const std::string &what) {
  std::vector<double> out;
  for (const auto &tok : io::split(text, ',')) {
    const auto v = io::parse_double(tok);
    if (!v) {
      throw DataError(what + ": bad number '" + tok + "'");
    }
    out.push_back(*v);
  }
  return out;
}

Bounds parse_bounds(const std::string &text) {
  const auto v = parse_number_list(text, "--bounds");
  if (v.size() != 4 || !(v[2] > v[0]) || !(v[3] > v[1])) {
    throw DataError("--bounds expects xmin,ymin,xmax,ymax with max > min");
  }
  return {v[0], v[1], v[2], v[3]};
}

/// Shared fit-related options; command-line flags override the config file.
struct FitOptions {
  std::string config_path;
  std::optional<std::string> mode;
  std::optional<std::size_t> restarts;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> max_iters;

  void attach(CLI::App *cmd) {
    cmd->add_option("--config", config_path, "Run configuration (key=value)");
    cmd->add_option("--mode", mode, "Kernel mode: convolved | icm");
    cmd->add_option("--restarts", restarts, "Optimizer restarts");
    cmd->add_option("--seed", seed, "Random seed");
    cmd->add_option("--max-iters", max_iters, "Iterations per restart");
  }

  io::RunConfig resolve() const {
    io::RunConfig cfg;
    if (!config_path.empty()) {
      cfg = io::parse_run_config(config_path);
    }
    if (mode) {
      cfg.fit.mode = parse_kernel_mode(*mode);
    }
    if (restarts) {
      cfg.fit.restarts = *restarts;
    }
    if (seed) {
      cfg.fit.seed = *seed;
    }
    if (max_iters) {
      cfg.fit.max_iters = *max_iters;
    }
    validate(cfg.fit);
    return cfg;
  }
};

FittedModel load_model_with_data(const std::string &model_path,
                                 const Dataset &data) {
  return io::load_model(io::parse_model_text(io::read_file(model_path)), data);
}

int run(int argc, char **argv) {
  CLI::App app{"Multi-task Gaussian-process soil property mapping"};
  app.require_subcommand(1);

  // fit
  auto *fit_cmd = app.add_subcommand("fit", "Fit an MTGP to observations");
  std::string fit_obs;
  std::string fit_out;
  FitOptions fit_opts;
  fit_cmd->add_option("--obs", fit_obs, "Observation CSV")->required();
  fit_cmd->add_option("--out", fit_out, "Model file to write")->required();
  fit_opts.attach(fit_cmd);

  // predict
  auto *pred_cmd = app.add_subcommand("predict", "Predict at query points");
  std::string pred_model;
  std::string pred_obs;
  std::string pred_queries;
  std::string pred_out;
  bool pred_denorm = false;
  bool pred_noise = false;
  pred_cmd->add_option("--model", pred_model, "Model file")->required();
  pred_cmd->add_option("--obs", pred_obs, "Training observation CSV")
      ->required();
  pred_cmd->add_option("--queries", pred_queries, "Query CSV (task,x_m,y_m)")
      ->required();
  pred_cmd->add_option("--out", pred_out, "Prediction CSV")->required();
  pred_cmd->add_flag("--denormalize", pred_denorm,
                     "Report values in original units");
  pred_cmd->add_flag("--with-noise", pred_noise,
                     "Add observation noise to the variance");

  // map
  auto *map_cmd = app.add_subcommand("map", "Predict mean/variance grids");
  std::string map_model;
  std::string map_obs;
  std::string map_dir;
  std::string map_bounds;
  std::optional<double> map_res;
  std::string map_config;
  bool map_denorm = false;
  map_cmd->add_option("--model", map_model, "Model file")->required();
  map_cmd->add_option("--obs", map_obs, "Training observation CSV")->required();
  map_cmd->add_option("--out-dir", map_dir, "Output directory")->required();
  map_cmd->add_option("--bounds", map_bounds,
                      "xmin,ymin,xmax,ymax (default: data bounding box)");
  map_cmd->add_option("--resolution", map_res, "Cell size in meters");
  map_cmd->add_option("--config", map_config, "Run configuration");
  map_cmd->add_flag("--denormalize", map_denorm,
                    "Write maps in original units");

  // eval-sequential
  auto *eval_cmd = app.add_subcommand(
      "eval-sequential", "RMSE against truth after each ingested sample");
  std::string eval_obs;
  std::string eval_truth;
  std::string eval_out;
  std::string eval_method = "both";
  FitOptions eval_opts;
  eval_cmd->add_option("--obs", eval_obs, "Observation CSV")->required();
  eval_cmd->add_option("--truth", eval_truth, "Truth CSV (map format)")
      ->required();
  eval_cmd->add_option("--out", eval_out, "RMSE curve CSV")->required();
  eval_cmd->add_option("--method", eval_method, "mtgp | stgp | both")
      ->check(CLI::IsMember({"mtgp", "stgp", "both"}));
  eval_opts.attach(eval_cmd);

  // correlations
  auto *corr_cmd = app.add_subcommand(
      "correlations",
      "Task correlation matrix (with --model) or trajectory (without)");
  std::string corr_model;
  std::string corr_obs;
  std::string corr_out;
  FitOptions corr_opts;
  corr_cmd->add_option("--model", corr_model, "Model file");
  corr_cmd->add_option("--obs", corr_obs, "Observation CSV")->required();
  corr_cmd->add_option("--out", corr_out, "Output CSV")->required();
  corr_opts.attach(corr_cmd);

  // synth
  auto *synth_cmd =
      app.add_subcommand("synth", "Draw synthetic observations from a prior");
  std::string synth_out;
  std::string synth_locations;
  std::string synth_field = "300,170";
  double synth_spacing = 45.0;
  std::string synth_labels = "pH,N,P,K";
  std::string synth_lengths = "40,40,60,80";
  std::string synth_corr = "0,1,0.9";
  double synth_noise = 0.05;
  std::string synth_theta;
  std::string synth_mode = "convolved";
  std::uint64_t synth_seed = 1;
  std::string synth_truth_out;
  double synth_truth_res = 15.0;
  synth_cmd->add_option("--out", synth_out, "Observation CSV")->required();
  synth_cmd->add_option("--locations", synth_locations,
                        "Plan CSV (sample_id,x_m,y_m); default: grid plan");
  synth_cmd->add_option("--field", synth_field,
                        "Field width,height in meters for the default plan")
      ->capture_default_str();
  synth_cmd->add_option("--spacing", synth_spacing, "Default plan spacing")
      ->capture_default_str();
  synth_cmd->add_option("--labels", synth_labels, "Task labels")
      ->capture_default_str();
  synth_cmd->add_option("--lengthscales", synth_lengths,
                        "Per-task length-scales (m)")
      ->capture_default_str();
  synth_cmd->add_option("--correlation", synth_corr,
                        "Correlated pairs as i,j,r triples (0-based)")
      ->capture_default_str();
  synth_cmd->add_option("--noise", synth_noise, "Noise variance per task")
      ->capture_default_str();
  synth_cmd->add_option("--theta", synth_theta,
                        "Packed hyperparameter vector (overrides the above)");
  synth_cmd->add_option("--mode", synth_mode, "convolved | icm")
      ->capture_default_str();
  synth_cmd->add_option("--seed", synth_seed, "Random seed")
      ->capture_default_str();
  synth_cmd->add_option("--truth-out", synth_truth_out,
                        "Also write the noise-free field on a grid");
  synth_cmd->add_option("--truth-resolution", synth_truth_res,
                        "Truth grid cell size (m)")
      ->capture_default_str();

  // plan
  auto *plan_cmd = app.add_subcommand("plan", "Grid sampling plan");
  std::string plan_boundary;
  double plan_spacing = 45.0;
  std::string plan_out;
  plan_cmd->add_option("--boundary", plan_boundary, "Boundary CSV")
      ->required();
  plan_cmd->add_option("--spacing", plan_spacing, "Lattice spacing (m)")
      ->capture_default_str();
  plan_cmd->add_option("--out", plan_out, "Plan CSV")->required();

  // mass
  auto *mass_cmd = app.add_subcommand("mass", "Soil sample mass in grams");
  DrillSpec mass_spec;
  mass_cmd->add_option("--rho", mass_spec.bulk_density, "Bulk density g/mm^3")
      ->required();
  mass_cmd->add_option("--depth", mass_spec.depth, "Depth (mm)")->required();
  mass_cmd->add_option("--diameter", mass_spec.auger_diameter,
                       "Auger diameter (mm)")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return kUsage;
  }

  if (*fit_cmd) {
    const auto cfg = fit_opts.resolve();
    const Dataset data = io::parse_observations(fit_obs);
    const FittedModel model = fit(data, cfg.fit);
    io::write_file_atomic(fit_out, io::write_model(model, data));
  } else if (*pred_cmd) {
    const Dataset data = io::parse_observations(pred_obs);
    const FittedModel model = load_model_with_data(pred_model, data);
    const auto queries =
        io::parse_queries_text(io::read_file(pred_queries), data.labels());
    const auto res = predict(model, queries, pred_denorm, pred_noise);
    if (res.clamp_count > 0) {
      std::cerr << "note: clamped " << res.clamp_count
                << " negative variances (max magnitude " << res.max_clamp
                << ")\n";
    }
    io::write_file_atomic(pred_out,
                          io::write_predictions(queries, res, data.labels()));
  } else if (*map_cmd) {
    io::RunConfig cfg;
    if (!map_config.empty()) {
      cfg = io::parse_run_config(map_config);
    }
    const Dataset data = io::parse_observations(map_obs);
    const FittedModel model = load_model_with_data(map_model, data);
    const Bounds bounds =
        map_bounds.empty() ? data.bounds() : parse_bounds(map_bounds);
    const GridSpec grid(bounds, map_res.value_or(cfg.resolution));
    const bool denorm = map_denorm || cfg.denormalize;
    const auto maps = predict_map(model, grid, denorm);
    fs::create_directories(map_dir);
    io::write_file_atomic(fs::path(map_dir) / "map.csv",
                          io::write_map_csv(maps, data.labels()));
    for (const auto &m : maps) {
      const auto &label = data.labels()[m.task];
      io::write_file_atomic(fs::path(map_dir) / (label + "_mean.asc"),
                            io::write_esri_ascii(grid, m.mean));
      io::write_file_atomic(fs::path(map_dir) / (label + "_variance.asc"),
                            io::write_esri_ascii(grid, m.variance));
    }
  } else if (*eval_cmd) {
    const auto cfg = eval_opts.resolve();
    const Dataset data = io::parse_observations(eval_obs);
    const TruthSet truth =
        io::parse_truth_text(io::read_file(eval_truth), data.labels());
    std::vector<RmseCurve> curves;
    if (eval_method != "stgp") {
      curves.push_back(sequential_eval(data, truth, EvalMethod::MTGP, cfg.fit));
    }
    if (eval_method != "mtgp") {
      curves.push_back(sequential_eval(data, truth, EvalMethod::STGP, cfg.fit));
    }
    io::write_file_atomic(eval_out,
                          io::write_rmse_curves(curves, data.labels()));
  } else if (*corr_cmd) {
    const Dataset data = io::parse_observations(corr_obs);
    if (!corr_model.empty()) {
      const FittedModel model = load_model_with_data(corr_model, data);
      io::write_file_atomic(corr_out, io::write_correlation_matrix(
                                          task_correlations(model),
                                          data.labels()));
    } else {
      const auto cfg = corr_opts.resolve();
      io::write_file_atomic(
          corr_out, io::write_trajectory(correlation_trajectory(data, cfg.fit),
                                         data.labels()));
    }
  } else if (*synth_cmd) {
    const auto labels = io::split(synth_labels, ',');
    const std::size_t n = labels.size();
    const KernelMode mode = parse_kernel_mode(synth_mode);
    HyperParams params;
    if (!synth_theta.empty()) {
      const auto theta = parse_number_list(synth_theta, "--theta");
      params = HyperParams(n, mode, detail::to_vector(theta));
    } else {
      auto lengths = parse_number_list(synth_lengths, "--lengthscales");
      if (mode == KernelMode::ICM) {
        lengths.resize(1);
      }
      Eigen::MatrixXd corr = Eigen::MatrixXd::Identity(
          static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
      const auto triples = synth_corr.empty()
                               ? std::vector<double>{}
                               : parse_number_list(synth_corr, "--correlation");
      if (triples.size() % 3 != 0) {
        throw DataError("--correlation expects i,j,r triples");
      }
      for (std::size_t k = 0; k < triples.size(); k += 3) {
        const auto i = static_cast<Eigen::Index>(triples[k]);
        const auto j = static_cast<Eigen::Index>(triples[k + 1]);
        if (i < 0 || j < 0 || i >= corr.rows() || j >= corr.rows() || i == j) {
          throw DataError("--correlation: bad task pair");
        }
        corr(i, j) = corr(j, i) = triples[k + 2];
      }
      params = HyperParams::from_components(
          factor_from_correlation(corr, std::vector<double>(n, 1.0)), lengths,
          std::vector<double>(n, synth_noise), mode);
    }
    std::vector<Location> locations;
    Bounds field{};
    if (!synth_locations.empty()) {
      locations = io::parse_plan_text(io::read_file(synth_locations));
    } else {
      const auto wh = parse_number_list(synth_field, "--field");
      if (wh.size() != 2) {
        throw DataError("--field expects width,height");
      }
      field = {0.0, 0.0, wh[0], wh[1]};
      const FieldBoundary boundary{
          {{0, 0}, {wh[0], 0}, {wh[0], wh[1]}, {0, wh[1]}}, {}};
      locations = grid_plan(boundary, synth_spacing).points;
    }
    if (locations.empty()) {
      throw DataError("no sample locations");
    }
    std::vector<TaskPoint> truth_points;
    std::optional<GridSpec> truth_grid;
    if (!synth_truth_out.empty()) {
      if (synth_locations.empty()) {
        truth_grid.emplace(field, synth_truth_res);
      } else {
        Bounds b{locations.front().x, locations.front().y,
                 locations.front().x, locations.front().y};
        for (const auto &l : locations) {
          b.min_x = std::min(b.min_x, l.x);
          b.min_y = std::min(b.min_y, l.y);
          b.max_x = std::max(b.max_x, l.x);
          b.max_y = std::max(b.max_y, l.y);
        }
        truth_grid.emplace(b, synth_truth_res);
      }
      for (std::size_t t = 0; t < n; ++t) {
        for (const auto &c : truth_grid->cell_centers()) {
          truth_points.push_back({t, c});
        }
      }
    }
    const auto synth = sample_field(params, locations, std::move(truth_points),
                                    synth_seed, kDefaultNoiseFloor, labels);
    io::write_file_atomic(synth_out, io::write_observations(synth.observations));
    if (!synth_truth_out.empty()) {
      io::write_file_atomic(
          synth_truth_out,
          io::write_truth({synth.truth_points, synth.truth_values}, labels));
    }
  } else if (*plan_cmd) {
    const auto boundary =
        io::parse_boundary_text(io::read_file(plan_boundary));
    io::write_file_atomic(plan_out,
                          io::write_plan(grid_plan(boundary, plan_spacing)));
  } else if (*mass_cmd) {
    std::printf("%.1f\n", sample_mass(mass_spec));
  }
  return kOk;
}

}  // namespace

int main(int argc, char **argv) {
  // Line-search warnings from the optimizer are noise for CLI users.
  FLAGS_minloglevel = google::GLOG_ERROR;
  google::InitGoogleLogging(argv[0]);
  try {
    return run(argc, argv);
  } catch (const soilgp::NumericError &e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kNumericError;
  } catch (const soilgp::DataError &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::filesystem::filesystem_error &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  }
}
