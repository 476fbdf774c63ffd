#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "soilgp/domain.hpp"
#include "soilgp/error.hpp"
#include "soilgp/gp.hpp"

namespace soilgp {

/// Regular grid of square cells over `bounds`; cells are indexed row-major
/// starting at (min x, min y), so row 0 is the southern row.
class GridSpec {
 public:
  GridSpec(Bounds bounds, double resolution)
      : bounds_(bounds), resolution_(resolution) {
    if (!(resolution > 0.0) || !std::isfinite(resolution)) {
      throw DataError("grid resolution must be positive");
    }
    // Tolerate widths that are an exact multiple up to rounding.
    ncols_ = static_cast<std::size_t>(
        std::floor(bounds.width() / resolution + 1e-9));
    nrows_ = static_cast<std::size_t>(
        std::floor(bounds.height() / resolution + 1e-9));
    if (ncols_ == 0 || nrows_ == 0) {
      throw DataError("grid has zero cells");
    }
  }

  const Bounds &bounds() const { return bounds_; }
  double resolution() const { return resolution_; }
  std::size_t ncols() const { return ncols_; }
  std::size_t nrows() const { return nrows_; }
  std::size_t cell_count() const { return ncols_ * nrows_; }

  Location cell_center(std::size_t row, std::size_t col) const {
    return {bounds_.min_x + (static_cast<double>(col) + 0.5) * resolution_,
            bounds_.min_y + (static_cast<double>(row) + 0.5) * resolution_};
  }

  std::vector<Location> cell_centers() const {
    std::vector<Location> out;
    out.reserve(cell_count());
    for (std::size_t r = 0; r < nrows_; ++r) {
      for (std::size_t c = 0; c < ncols_; ++c) {
        out.push_back(cell_center(r, c));
      }
    }
    return out;
  }

 private:
  Bounds bounds_;
  double resolution_;
  std::size_t ncols_ = 0;
  std::size_t nrows_ = 0;
};

struct PropertyMap {
  std::size_t task = 0;
  GridSpec grid;
  std::vector<double> mean;
  std::vector<double> variance;
  bool normalized = true;
};

/// Posterior mean and variance maps, one per task.
inline std::vector<PropertyMap> predict_map(const FittedModel &model,
                                            const GridSpec &grid,
                                            bool denormalize = false) {
  const auto centers = grid.cell_centers();
  std::vector<PropertyMap> maps;
  maps.reserve(model.n_tasks());
  for (std::size_t t = 0; t < model.n_tasks(); ++t) {
    std::vector<TaskPoint> queries;
    queries.reserve(centers.size());
    for (const auto &c : centers) {
      queries.push_back({t, c});
    }
    auto res = predict(model, queries, denormalize);
    maps.push_back({t, grid, std::move(res.mean), std::move(res.variance),
                    !denormalize});
  }
  return maps;
}

inline double rmse(std::span<const double> predicted,
                   std::span<const double> truth) {
  if (predicted.size() != truth.size()) {
    throw DataError("rmse: length mismatch");
  }
  if (predicted.empty()) {
    throw DataError("rmse: no points");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double d = predicted[i] - truth[i];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(predicted.size()));
}

/// Ground-truth values at arbitrary (task, location) points, in original
/// data units.
struct TruthSet {
  std::vector<TaskPoint> points;
  std::vector<double> values;
};

inline TruthSet truth_from_maps(std::span<const PropertyMap> maps) {
  TruthSet truth;
  for (const auto &map : maps) {
    const auto centers = map.grid.cell_centers();
    for (std::size_t i = 0; i < centers.size(); ++i) {
      truth.points.push_back({map.task, centers[i]});
      truth.values.push_back(map.mean[i]);
    }
  }
  return truth;
}

enum class EvalMethod { MTGP, STGP };

/// Per-task RMSE as a function of the number of samples ingested.
struct RmseCurve {
  EvalMethod method = EvalMethod::MTGP;
  std::vector<std::size_t> k;
  // rmse[task][step]
  std::vector<std::vector<double>> rmse;
};

/// Refits on prefix(data, k) for k = 1..K and scores predictions against
/// `truth`. Errors are reported in units z-scored with the statistics of the
/// full dataset so that every k and both methods share one scale.
inline RmseCurve sequential_eval(const Dataset &data, const TruthSet &truth,
                                 EvalMethod method, FitConfig config) {
  if (truth.points.size() != truth.values.size()) {
    throw DataError("truth points and values differ in length");
  }
  const std::size_t n = data.n_tasks();
  std::vector<std::vector<std::size_t>> by_task(n);
  for (std::size_t i = 0; i < truth.points.size(); ++i) {
    if (truth.points[i].task >= n) {
      throw DataError("truth references unknown task");
    }
    by_task[truth.points[i].task].push_back(i);
  }
  for (std::size_t t = 0; t < n; ++t) {
    if (by_task[t].empty()) {
      throw DataError("truth grid does not cover task " + data.labels()[t]);
    }
  }

  const NormStats scale = compute_norm_stats(data);
  if (config.extent_hint <= 0.0) {
    config.extent_hint = data.bounds().extent();
  }
  const std::size_t total = data.sample_ids().size();

  RmseCurve curve;
  curve.method = method;
  curve.rmse.assign(n, {});
  for (std::size_t k = 1; k <= total; ++k) {
    const Dataset part = prefix(data, k);
    PredictionResult pred;
    if (method == EvalMethod::MTGP) {
      pred = predict(fit(part, config), truth.points, true);
    } else {
      pred = predict_stgp(fit_stgp(part, config), truth.points, true);
    }
    curve.k.push_back(k);
    for (std::size_t t = 0; t < n; ++t) {
      std::vector<double> p;
      std::vector<double> y;
      for (auto i : by_task[t]) {
        p.push_back(scale.normalize(t, pred.mean[i]));
        y.push_back(scale.normalize(t, truth.values[i]));
      }
      curve.rmse[t].push_back(rmse(p, y));
    }
  }
  return curve;
}

struct CorrelationTrajectory {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<std::size_t> k;
  // r[pair][step]
  std::vector<std::vector<double>> r;
};

/// Learned inter-task correlations after each prefix refit.
inline CorrelationTrajectory correlation_trajectory(const Dataset &data,
                                                    FitConfig config) {
  const std::size_t total = data.sample_ids().size();
  if (total < 2) {
    throw DataError("correlation trajectory needs at least 2 samples");
  }
  if (config.extent_hint <= 0.0) {
    config.extent_hint = data.bounds().extent();
  }
  const std::size_t n = data.n_tasks();
  CorrelationTrajectory traj;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      traj.pairs.emplace_back(i, j);
    }
  }
  traj.r.assign(traj.pairs.size(), {});
  for (std::size_t k = 1; k <= total; ++k) {
    const auto corr = task_correlations(fit(prefix(data, k), config));
    traj.k.push_back(k);
    for (std::size_t p = 0; p < traj.pairs.size(); ++p) {
      traj.r[p].push_back(corr(static_cast<Eigen::Index>(traj.pairs[p].first),
                               static_cast<Eigen::Index>(traj.pairs[p].second)));
    }
  }
  return traj;
}

}  // namespace soilgp
