#pragma once

#include <ceres/ceres.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "soilgp/domain.hpp"
#include "soilgp/error.hpp"
#include "soilgp/hyperparams.hpp"
#include "soilgp/kernels.hpp"

namespace soilgp {

enum class GradientMethod { Analytic, FiniteDifference };

struct FitConfig {
  std::size_t restarts = 8;
  std::size_t max_iters = 200;
  double tol = 1e-6;
  std::uint64_t seed = 0;
  KernelMode mode = KernelMode::Convolved;
  GradientMethod gradient = GradientMethod::Analytic;
  double noise_floor = kDefaultNoiseFloor;
  // Field extent used to draw initial length-scales; 0 means "use the
  // training data's bounding box".
  double extent_hint = 0.0;
};

inline void validate(const FitConfig &config) {
  if (config.restarts < 1) {
    throw DataError("restarts must be at least 1");
  }
  if (config.max_iters < 1) {
    throw DataError("max_iters must be at least 1");
  }
  if (!(config.tol > 0.0)) {
    throw DataError("tol must be positive");
  }
  if (!(config.noise_floor >= 0.0)) {
    throw DataError("noise_floor must be non-negative");
  }
}

namespace detail {

struct Evaluation {
  double lml = 0.0;
  Eigen::VectorXd gradient;
};

inline void check_dimensions(const HyperParams &params, const Dataset &data) {
  if (params.n_tasks() != data.n_tasks()) {
    throw DataError("hyperparameters describe " +
                    std::to_string(params.n_tasks()) + " tasks, data has " +
                    std::to_string(data.n_tasks()));
  }
}

inline Eigen::VectorXd to_vector(const std::vector<double> &v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(),
                                           static_cast<Eigen::Index>(v.size()));
}

/// LML and (optionally) its analytic gradient in the packed space.
/// Empty when the covariance cannot be factorized.
inline std::optional<Evaluation> evaluate(const HyperParams &params,
                                          const Dataset &data,
                                          double noise_floor,
                                          bool with_gradient) {
  check_dimensions(params, data);
  // Log-parameters far enough out overflow or underflow when exponentiated.
  const auto usable = [](double v) { return v > 0.0 && std::isfinite(v); };
  const SpatialParams spatial = params.spatial();
  const NoiseParams noise = params.noise(noise_floor);
  if (!std::all_of(spatial.lengthscales.begin(), spatial.lengthscales.end(),
                   usable) ||
      !std::all_of(noise.variances.begin(), noise.variances.end(), usable) ||
      !params.task_covariance().allFinite()) {
    return std::nullopt;
  }
  Evaluation out;
  out.gradient = Eigen::VectorXd::Zero(params.theta().size());
  if (data.empty()) {
    return out;
  }

  const auto points = data.task_points();
  const Eigen::VectorXd y = to_vector(data.values());
  const Eigen::MatrixXd kc = params.task_covariance();
  const KernelMode mode = params.mode();

  const Eigen::MatrixXd k =
      assemble_training_cov(points, kc, spatial, noise, mode);
  const auto chol = jittered_cholesky(k);
  if (!chol) {
    return std::nullopt;
  }
  if (mode == KernelMode::Convolved) {
    // The closed-form cross kernel is not PSD for every set of 2-D
    // length-scales. Noise can hide that from the check above, so the
    // noise-free part has to pass the same ladder on its own.
    Eigen::MatrixXd signal = k;
    for (Eigen::Index p = 0; p < signal.rows(); ++p) {
      signal(p, p) -= noise.variances[points[static_cast<std::size_t>(p)].task];
    }
    if (!jittered_cholesky(signal)) {
      return std::nullopt;
    }
  }
  const auto lower = chol->lower.triangularView<Eigen::Lower>();
  Eigen::VectorXd alpha = lower.solve(y);
  const double quad = alpha.squaredNorm();
  lower.transpose().solveInPlace(alpha);

  const auto m = static_cast<double>(y.size());
  const double log_det = 2.0 * chol->lower.diagonal().array().log().sum();
  out.lml = -0.5 * quad - 0.5 * log_det -
            0.5 * m * std::log(2.0 * std::numbers::pi);
  if (!std::isfinite(out.lml)) {
    return std::nullopt;
  }
  if (!with_gradient) {
    return out;
  }

  // W = alpha alpha^T - K^{-1};  dLML/dtheta = 1/2 tr(W dK/dtheta).
  Eigen::MatrixXd w = Eigen::MatrixXd::Identity(k.rows(), k.cols());
  lower.solveInPlace(w);
  lower.transpose().solveInPlace(w);
  w = alpha * alpha.transpose() - w;

  const auto n = static_cast<Eigen::Index>(params.n_tasks());
  Eigen::MatrixXd task_sums = Eigen::MatrixXd::Zero(n, n);
  const Eigen::Index len_off = params.length_offset();
  const Eigen::Index noise_off = params.noise_offset();

  for (Eigen::Index p = 0; p < k.rows(); ++p) {
    const auto &a = points[static_cast<std::size_t>(p)];
    const auto ti = static_cast<Eigen::Index>(a.task);
    for (Eigen::Index q = 0; q <= p; ++q) {
      const auto &b = points[static_cast<std::size_t>(q)];
      const auto tj = static_cast<Eigen::Index>(b.task);
      const double weight = (p == q ? 1.0 : 2.0) * w(p, q);
      const double r = distance(a.location, b.location);
      if (mode == KernelMode::ICM) {
        const double l = spatial.lengthscales.front();
        const double ks = matern32_unit(r, l);
        task_sums(ti, tj) += 0.5 * weight * ks;
        task_sums(tj, ti) += 0.5 * weight * ks;
        out.gradient(len_off) +=
            0.5 * weight * kc(ti, tj) * matern32_dlog_length(r, l);
      } else {
        const auto g = cross_matern32_with_grad(r, spatial.for_task(a.task),
                                                spatial.for_task(b.task));
        task_sums(ti, tj) += 0.5 * weight * g.value;
        task_sums(tj, ti) += 0.5 * weight * g.value;
        out.gradient(len_off + ti) += 0.5 * weight * kc(ti, tj) * g.dlog_li;
        out.gradient(len_off + tj) += 0.5 * weight * kc(ti, tj) * g.dlog_lj;
      }
    }
    out.gradient(noise_off + ti) +=
        0.5 * w(p, p) * std::exp(params.theta()(noise_off + ti));
  }

  // dLML/dL = S L; diagonal entries live in log space.
  const Eigen::MatrixXd factor = params.task_factor().lower();
  const Eigen::MatrixXd grad_factor = task_sums * factor;
  Eigen::Index idx = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      out.gradient(idx++) =
          grad_factor(i, j) * (i == j ? factor(i, i) : 1.0);
    }
  }
  return out;
}

}  // namespace detail

/// log p(y | X, theta) under a zero-mean GP. Empty when the covariance
/// cannot be factorized after the jitter ladder ("rejected").
inline std::optional<double> log_marginal_likelihood(
    const HyperParams &params, const Dataset &data,
    double noise_floor = kDefaultNoiseFloor) {
  const auto eval = detail::evaluate(params, data, noise_floor, false);
  if (!eval) {
    return std::nullopt;
  }
  return eval->lml;
}

inline std::optional<Eigen::VectorXd> lml_gradient(
    const HyperParams &params, const Dataset &data,
    double noise_floor = kDefaultNoiseFloor) {
  auto eval = detail::evaluate(params, data, noise_floor, true);
  if (!eval) {
    return std::nullopt;
  }
  return std::move(eval->gradient);
}

/// Central finite-difference gradient of the LML with per-coordinate step h.
inline std::optional<Eigen::VectorXd> lml_gradient_fd(
    const HyperParams &params, const Dataset &data,
    double noise_floor = kDefaultNoiseFloor, double h = 1e-5) {
  Eigen::VectorXd grad(params.theta().size());
  for (Eigen::Index i = 0; i < grad.size(); ++i) {
    Eigen::VectorXd plus = params.theta();
    Eigen::VectorXd minus = params.theta();
    plus(i) += h;
    minus(i) -= h;
    const auto up = log_marginal_likelihood(
        HyperParams(params.n_tasks(), params.mode(), plus), data, noise_floor);
    const auto down = log_marginal_likelihood(
        HyperParams(params.n_tasks(), params.mode(), minus), data,
        noise_floor);
    if (!up || !down) {
      return std::nullopt;
    }
    grad(i) = (*up - *down) / (2.0 * h);
  }
  return grad;
}

/// Trained model: hyperparameters plus the factorized training covariance.
/// Training data is stored normalized.
struct FittedModel {
  HyperParams params;
  double noise_floor = kDefaultNoiseFloor;
  Dataset training;
  NormStats stats;
  Eigen::MatrixXd chol_lower;
  Eigen::VectorXd alpha;
  double jitter = 0.0;
  double lml = 0.0;
  std::vector<double> restart_lml;

  std::size_t n_tasks() const { return params.n_tasks(); }
  KernelMode mode() const { return params.mode(); }
};

/// Factorizes the training covariance of already-normalized `training` at
/// fixed hyperparameters.
inline FittedModel condition(const HyperParams &params, Dataset training,
                             NormStats stats,
                             double noise_floor = kDefaultNoiseFloor) {
  detail::check_dimensions(params, training);
  const auto points = training.task_points();
  const Eigen::MatrixXd k =
      assemble_training_cov(points, params.task_covariance(), params.spatial(),
                            params.noise(noise_floor), params.mode());
  auto chol = jittered_cholesky(k);
  if (!chol) {
    throw NumericError("training covariance is not positive definite");
  }
  Eigen::VectorXd alpha = detail::to_vector(training.values());
  chol->lower.triangularView<Eigen::Lower>().solveInPlace(alpha);
  const double quad = alpha.squaredNorm();
  chol->lower.triangularView<Eigen::Lower>().transpose().solveInPlace(alpha);
  const double lml =
      -0.5 * quad - chol->lower.diagonal().array().log().sum() -
      0.5 * static_cast<double>(alpha.size()) *
          std::log(2.0 * std::numbers::pi);
  return FittedModel{params,
                     noise_floor,
                     std::move(training),
                     std::move(stats),
                     std::move(chol->lower),
                     std::move(alpha),
                     chol->jitter,
                     lml,
                     {}};
}

namespace detail {

class NegativeLml final : public ceres::FirstOrderFunction {
 public:
  NegativeLml(const Dataset &data, std::size_t n_tasks, KernelMode mode,
              double noise_floor, GradientMethod method)
      : data_(data),
        n_tasks_(n_tasks),
        mode_(mode),
        noise_floor_(noise_floor),
        method_(method) {}

  bool Evaluate(const double *parameters, double *cost,
                double *gradient) const override {
    const Eigen::Map<const Eigen::VectorXd> theta(parameters,
                                                  NumParameters());
    if (!theta.allFinite()) {
      return false;
    }
    const HyperParams params(n_tasks_, mode_, theta);
    const bool analytic =
        gradient != nullptr && method_ == GradientMethod::Analytic;
    const auto eval = evaluate(params, data_, noise_floor_, analytic);
    if (!eval) {
      return false;
    }
    *cost = -eval->lml;
    if (gradient != nullptr) {
      Eigen::VectorXd g;
      if (analytic) {
        g = eval->gradient;
      } else {
        auto fd = lml_gradient_fd(params, data_, noise_floor_);
        if (!fd) {
          return false;
        }
        g = std::move(*fd);
      }
      Eigen::Map<Eigen::VectorXd>(gradient, NumParameters()) = -g;
    }
    return true;
  }

  int NumParameters() const override {
    return static_cast<int>(HyperParams::size(n_tasks_, mode_));
  }

 private:
  const Dataset &data_;
  std::size_t n_tasks_;
  KernelMode mode_;
  double noise_floor_;
  GradientMethod method_;
};

/// Seeded initial point for restart `restart`.
inline Eigen::VectorXd initial_theta(std::size_t n_tasks, KernelMode mode,
                                     double extent, std::uint64_t seed,
                                     std::size_t restart) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(restart)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> off_diag(0.0, 0.1);
  std::uniform_real_distribution<double> log_length(std::log(extent / 20.0),
                                                    std::log(extent));
  Eigen::VectorXd theta(HyperParams::size(n_tasks, mode));
  Eigen::Index k = 0;
  for (std::size_t i = 0; i < n_tasks; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      theta(k++) = (i == j) ? 0.0 : off_diag(rng);
    }
  }
  for (std::size_t i = 0; i < HyperParams::length_count(n_tasks, mode); ++i) {
    theta(k++) = log_length(rng);
  }
  for (std::size_t i = 0; i < n_tasks; ++i) {
    theta(k++) = std::log(0.05);
  }
  return theta;
}

}  // namespace detail

/// Multi-start L-BFGS maximization of the LML on normalized data. Returns
/// the restart with the highest LML (lowest index on ties).
inline FittedModel fit(const Dataset &data, const FitConfig &config) {
  validate(config);
  auto [normalized, stats] = normalize(data);
  const std::size_t n = data.n_tasks();
  double extent = config.extent_hint > 0.0 ? config.extent_hint
                                           : data.bounds().extent();
  if (!(extent > 0.0) || !std::isfinite(extent)) {
    extent = 1.0;
  }

  std::vector<double> restart_lml(config.restarts,
                                  -std::numeric_limits<double>::infinity());
  std::optional<HyperParams> best;
  double best_lml = -std::numeric_limits<double>::infinity();

  for (std::size_t r = 0; r < config.restarts; ++r) {
    Eigen::VectorXd theta =
        detail::initial_theta(n, config.mode, extent, config.seed, r);
    if (!normalized.empty()) {
      ceres::GradientProblem problem(new detail::NegativeLml(
          normalized, n, config.mode, config.noise_floor, config.gradient));
      ceres::GradientProblemSolver::Options options;
      options.line_search_direction_type = ceres::LBFGS;
      options.max_num_iterations = static_cast<int>(config.max_iters);
      options.function_tolerance = config.tol;
      options.logging_type = ceres::SILENT;
      options.minimizer_progress_to_stdout = false;
      ceres::GradientProblemSolver::Summary summary;
      ceres::Solve(options, problem, theta.data(), &summary);
    }
    if (!theta.allFinite()) {
      continue;
    }
    const HyperParams params(n, config.mode, theta);
    const auto lml =
        log_marginal_likelihood(params, normalized, config.noise_floor);
    if (!lml) {
      continue;
    }
    restart_lml[r] = *lml;
    if (*lml > best_lml) {
      best_lml = *lml;
      best = params;
    }
  }
  if (!best) {
    throw NumericError("all fit restarts were rejected");
  }
  FittedModel model =
      condition(*best, std::move(normalized), std::move(stats),
                config.noise_floor);
  model.restart_lml = std::move(restart_lml);
  return model;
}

struct PredictionResult {
  std::vector<double> mean;
  std::vector<double> variance;
  bool denormalized = false;
  std::size_t clamp_count = 0;
  double max_clamp = 0.0;
};

/// Posterior mean and variance at `queries`. Variance is that of the latent
/// function unless `include_noise` is set.
inline PredictionResult predict(const FittedModel &model,
                                std::span<const TaskPoint> queries,
                                bool denormalize = false,
                                bool include_noise = false) {
  for (const auto &q : queries) {
    if (q.task >= model.n_tasks()) {
      throw DataError("unknown task id " + std::to_string(q.task));
    }
  }
  const Eigen::MatrixXd kc = model.params.task_covariance();
  const SpatialParams spatial = model.params.spatial();
  const NoiseParams noise = model.params.noise(model.noise_floor);
  const auto points = model.training.task_points();

  PredictionResult out;
  out.denormalized = denormalize;
  out.mean.resize(queries.size());
  out.variance.resize(queries.size());

  Eigen::MatrixXd v;
  Eigen::VectorXd mean;
  if (!points.empty()) {
    const Eigen::MatrixXd cross =
        assemble_cross_cov(queries, points, kc, spatial, model.mode());
    mean = cross * model.alpha;
    v = model.chol_lower.triangularView<Eigen::Lower>().solve(
        cross.transpose());
  }
  for (std::size_t q = 0; q < queries.size(); ++q) {
    const auto task = queries[q].task;
    const auto t = static_cast<Eigen::Index>(task);
    double mu = points.empty() ? 0.0 : mean(static_cast<Eigen::Index>(q));
    double var = kc(t, t);
    if (!points.empty()) {
      var -= v.col(static_cast<Eigen::Index>(q)).squaredNorm();
    }
    if (var < 0.0) {
      ++out.clamp_count;
      out.max_clamp = std::max(out.max_clamp, -var);
      var = 0.0;
    }
    if (include_noise) {
      var += noise.variances[task];
    }
    if (denormalize) {
      mu = model.stats.denormalize(task, mu);
      var = model.stats.denormalize_variance(task, var);
    }
    out.mean[q] = mu;
    out.variance[q] = var;
  }
  return out;
}

/// r_ij = K_c[i,j] / sqrt(K_c[i,i] K_c[j,j]) of the learned task covariance.
inline Eigen::MatrixXd task_correlations(const Eigen::MatrixXd &kc) {
  const Eigen::Index n = kc.rows();
  Eigen::MatrixXd r(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      r(i, j) = (i == j) ? 1.0
                         : std::clamp(kc(i, j) / (std::sqrt(kc(i, i)) *
                                                  std::sqrt(kc(j, j))),
                                      -1.0, 1.0);
    }
  }
  return r;
}

inline Eigen::MatrixXd task_correlations(const FittedModel &model) {
  return task_correlations(model.params.task_covariance());
}

/// One independent single-task GP per task.
inline std::vector<FittedModel> fit_stgp(const Dataset &data,
                                         const FitConfig &config) {
  std::vector<FittedModel> models;
  models.reserve(data.n_tasks());
  FitConfig single = config;
  if (single.extent_hint <= 0.0) {
    single.extent_hint = data.bounds().extent();
  }
  for (std::size_t t = 0; t < data.n_tasks(); ++t) {
    models.push_back(fit(single_task(data, t), single));
  }
  return models;
}

/// Routes each query to the single-task model of its task.
inline PredictionResult predict_stgp(const std::vector<FittedModel> &models,
                                     std::span<const TaskPoint> queries,
                                     bool denormalize = false,
                                     bool include_noise = false) {
  PredictionResult out;
  out.denormalized = denormalize;
  out.mean.resize(queries.size());
  out.variance.resize(queries.size());
  std::vector<std::vector<std::size_t>> by_task(models.size());
  for (std::size_t q = 0; q < queries.size(); ++q) {
    if (queries[q].task >= models.size()) {
      throw DataError("unknown task id " + std::to_string(queries[q].task));
    }
    by_task[queries[q].task].push_back(q);
  }
  for (std::size_t t = 0; t < models.size(); ++t) {
    if (by_task[t].empty()) {
      continue;
    }
    std::vector<TaskPoint> local;
    for (auto q : by_task[t]) {
      local.push_back({0, queries[q].location});
    }
    const auto res = predict(models[t], local, denormalize, include_noise);
    for (std::size_t k = 0; k < local.size(); ++k) {
      out.mean[by_task[t][k]] = res.mean[k];
      out.variance[by_task[t][k]] = res.variance[k];
    }
    out.clamp_count += res.clamp_count;
    out.max_clamp = std::max(out.max_clamp, res.max_clamp);
  }
  return out;
}

namespace detail {

/// One draw from N(0, cov) using a seeded standard-normal stream.
inline Eigen::VectorXd draw_gaussian(const Eigen::MatrixXd &cov,
                                     std::uint64_t seed) {
  const auto chol = jittered_cholesky(cov);
  if (!chol) {
    throw NumericError("prior covariance is not positive definite");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd z(cov.rows());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    z(i) = normal(rng);
  }
  return chol->lower * z;
}

inline std::string sample_name(std::size_t index, std::size_t total) {
  const std::size_t width = std::max<std::size_t>(2, std::to_string(total).size());
  std::string digits = std::to_string(index + 1);
  return "S" + std::string(width - digits.size(), '0') + digits;
}

inline std::vector<TaskPoint> homotopic_points(
    std::span<const Location> locations, std::size_t n_tasks) {
  std::vector<TaskPoint> points;
  points.reserve(locations.size() * n_tasks);
  for (const auto &loc : locations) {
    for (std::size_t t = 0; t < n_tasks; ++t) {
      points.push_back({t, loc});
    }
  }
  return points;
}

}  // namespace detail

/// One draw y ~ N(0, K + Sigma) at every (location, task), as a homotopic
/// dataset with sample ids S01, S02, ... in location order.
inline Dataset sample_prior(const HyperParams &params,
                            std::span<const Location> locations,
                            std::uint64_t seed,
                            double noise_floor = kDefaultNoiseFloor,
                            std::vector<std::string> labels = {}) {
  const std::size_t n = params.n_tasks();
  const auto points = detail::homotopic_points(locations, n);
  const Eigen::MatrixXd k =
      assemble_training_cov(points, params.task_covariance(), params.spatial(),
                            params.noise(noise_floor), params.mode());
  const Eigen::VectorXd y = detail::draw_gaussian(k, seed);
  std::vector<Observation> obs;
  obs.reserve(points.size());
  for (std::size_t p = 0; p < points.size(); ++p) {
    obs.push_back({detail::sample_name(p / n, locations.size()),
                   points[p].location, points[p].task,
                   y(static_cast<Eigen::Index>(p))});
  }
  return make_dataset(std::move(obs), n, std::move(labels));
}

struct SyntheticField {
  Dataset observations;
  std::vector<TaskPoint> truth_points;
  std::vector<double> truth_values;
};

/// Joint draw of the latent field at the sample locations and at
/// `truth_points`; observations add independent task noise to the latent
/// values. The truth values are noise-free.
inline SyntheticField sample_field(const HyperParams &params,
                                   std::span<const Location> locations,
                                   std::vector<TaskPoint> truth_points,
                                   std::uint64_t seed,
                                   double noise_floor = kDefaultNoiseFloor,
                                   std::vector<std::string> labels = {}) {
  const std::size_t n = params.n_tasks();
  auto points = detail::homotopic_points(locations, n);
  const std::size_t n_obs = points.size();
  points.insert(points.end(), truth_points.begin(), truth_points.end());
  const Eigen::MatrixXd k = assemble_cross_cov(
      points, points, params.task_covariance(), params.spatial(),
      params.mode());
  const Eigen::VectorXd latent = detail::draw_gaussian(k, seed);

  const NoiseParams noise = params.noise(noise_floor);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Observation> obs;
  obs.reserve(n_obs);
  for (std::size_t p = 0; p < n_obs; ++p) {
    const double eps = std::sqrt(noise.variances[points[p].task]) * normal(rng);
    obs.push_back({detail::sample_name(p / n, locations.size()),
                   points[p].location, points[p].task,
                   latent(static_cast<Eigen::Index>(p)) + eps});
  }
  std::vector<double> truth(truth_points.size());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    truth[i] = latent(static_cast<Eigen::Index>(n_obs + i));
  }
  return {make_dataset(std::move(obs), n, std::move(labels)),
          std::move(truth_points), std::move(truth)};
}

}  // namespace soilgp
