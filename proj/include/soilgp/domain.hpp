#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "soilgp/error.hpp"

namespace soilgp {

/// Local planar coordinates in meters (easting, northing).
struct Location {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Location &, const Location &) = default;
};

inline double distance(const Location &a, const Location &b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

/// A (task, location) pair: the row key of every covariance matrix.
struct TaskPoint {
  std::size_t task = 0;
  Location location;

  friend bool operator==(const TaskPoint &, const TaskPoint &) = default;
};

struct Observation {
  std::string sample_id;
  Location location;
  std::size_t task = 0;
  double value = 0.0;

  friend bool operator==(const Observation &, const Observation &) = default;
};

/// Axis-aligned rectangle.
struct Bounds {
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 0.0;
  double max_y = 0.0;

  double width() const { return max_x - min_x; }
  double height() const { return max_y - min_y; }
  double extent() const { return std::max(width(), height()); }

  friend bool operator==(const Bounds &, const Bounds &) = default;
};

/// Validated, immutable multi-task observation set. Insertion order is
/// preserved and defines the sequential replay order.
class Dataset {
 public:
  std::size_t n_tasks() const { return labels_.size(); }
  const std::vector<std::string> &labels() const { return labels_; }
  const std::vector<Observation> &observations() const { return observations_; }
  std::size_t size() const { return observations_.size(); }
  bool empty() const { return observations_.empty(); }
  const Bounds &bounds() const { return bounds_; }

  std::vector<TaskPoint> task_points() const {
    std::vector<TaskPoint> points;
    points.reserve(observations_.size());
    for (const auto &obs : observations_) {
      points.push_back({obs.task, obs.location});
    }
    return points;
  }

  std::vector<double> values() const {
    std::vector<double> out;
    out.reserve(observations_.size());
    for (const auto &obs : observations_) {
      out.push_back(obs.value);
    }
    return out;
  }

  std::size_t count_for_task(std::size_t task) const {
    return static_cast<std::size_t>(
        std::count_if(observations_.begin(), observations_.end(),
                      [task](const Observation &o) { return o.task == task; }));
  }

  /// Distinct sample ids in first-appearance order.
  std::vector<std::string> sample_ids() const {
    std::vector<std::string> ids;
    std::unordered_set<std::string> seen;
    for (const auto &obs : observations_) {
      if (seen.insert(obs.sample_id).second) {
        ids.push_back(obs.sample_id);
      }
    }
    return ids;
  }

  friend bool operator==(const Dataset &, const Dataset &) = default;

 private:
  friend Dataset make_dataset(std::vector<Observation>, std::size_t,
                              std::vector<std::string>);
  friend Dataset make_prior_dataset(std::size_t, std::vector<std::string>);

  Dataset(std::vector<Observation> observations,
          std::vector<std::string> labels, Bounds bounds)
      : observations_(std::move(observations)),
        labels_(std::move(labels)),
        bounds_(bounds) {}

  std::vector<Observation> observations_;
  std::vector<std::string> labels_;
  Bounds bounds_;
};

inline std::vector<std::string> default_labels(std::size_t n_tasks) {
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < n_tasks; ++i) {
    labels.push_back("T" + std::to_string(i));
  }
  return labels;
}

/// Validates and wraps observations. Labels default to T0..T{n-1}.
inline Dataset make_dataset(std::vector<Observation> observations,
                            std::size_t n_tasks,
                            std::vector<std::string> labels = {}) {
  if (n_tasks < 1) {
    throw DataError("n_tasks must be at least 1");
  }
  if (observations.empty()) {
    throw DataError("empty dataset");
  }
  if (labels.empty()) {
    labels = default_labels(n_tasks);
  }
  if (labels.size() != n_tasks) {
    throw DataError("label count does not match n_tasks");
  }
  if (std::unordered_set<std::string>(labels.begin(), labels.end()).size() !=
      labels.size()) {
    throw DataError("task labels must be unique");
  }

  Bounds bounds{std::numeric_limits<double>::infinity(),
                std::numeric_limits<double>::infinity(),
                -std::numeric_limits<double>::infinity(),
                -std::numeric_limits<double>::infinity()};
  for (std::size_t i = 0; i < observations.size(); ++i) {
    const auto &obs = observations[i];
    if (obs.task >= n_tasks) {
      throw DataError("task out of range at observation " + std::to_string(i));
    }
    if (!std::isfinite(obs.location.x) || !std::isfinite(obs.location.y)) {
      throw DataError("non-finite coordinate at observation " +
                      std::to_string(i));
    }
    if (!std::isfinite(obs.value)) {
      throw DataError("non-finite value at observation " + std::to_string(i));
    }
    bounds.min_x = std::min(bounds.min_x, obs.location.x);
    bounds.min_y = std::min(bounds.min_y, obs.location.y);
    bounds.max_x = std::max(bounds.max_x, obs.location.x);
    bounds.max_y = std::max(bounds.max_y, obs.location.y);
  }
  return Dataset(std::move(observations), std::move(labels), bounds);
}

/// Observation-free dataset carrying only the task layout; the training set
/// of a prior-only model.
inline Dataset make_prior_dataset(std::size_t n_tasks,
                                  std::vector<std::string> labels = {}) {
  if (labels.empty()) {
    labels = default_labels(n_tasks);
  }
  return Dataset({}, std::move(labels), Bounds{});
}

/// Per-task z-scoring statistics (population standard deviation).
struct NormStats {
  std::vector<double> mean;
  std::vector<double> stddev;

  double normalize(std::size_t task, double value) const {
    return (value - mean[task]) / stddev[task];
  }
  double denormalize(std::size_t task, double value) const {
    return value * stddev[task] + mean[task];
  }
  double denormalize_variance(std::size_t task, double variance) const {
    return variance * stddev[task] * stddev[task];
  }

  static NormStats identity(std::size_t n_tasks) {
    return {std::vector<double>(n_tasks, 0.0),
            std::vector<double>(n_tasks, 1.0)};
  }

  friend bool operator==(const NormStats &, const NormStats &) = default;
};

inline NormStats compute_norm_stats(const Dataset &dataset) {
  const std::size_t n = dataset.n_tasks();
  std::vector<double> sum(n, 0.0);
  std::vector<std::size_t> count(n, 0);
  for (const auto &obs : dataset.observations()) {
    sum[obs.task] += obs.value;
    ++count[obs.task];
  }
  NormStats stats = NormStats::identity(n);
  for (std::size_t t = 0; t < n; ++t) {
    if (count[t] > 0) {
      stats.mean[t] = sum[t] / static_cast<double>(count[t]);
    }
  }
  std::vector<double> sq(n, 0.0);
  for (const auto &obs : dataset.observations()) {
    const double d = obs.value - stats.mean[obs.task];
    sq[obs.task] += d * d;
  }
  for (std::size_t t = 0; t < n; ++t) {
    if (count[t] >= 2) {
      const double sd = std::sqrt(sq[t] / static_cast<double>(count[t]));
      // A constant task has nothing to scale.
      stats.stddev[t] = sd > 0.0 ? sd : 1.0;
    }
  }
  return stats;
}

/// Returns a copy of `dataset` with every value mapped through `fn(task, v)`.
template <typename Fn>
Dataset transform_values(const Dataset &dataset, Fn &&fn) {
  std::vector<Observation> obs = dataset.observations();
  for (auto &o : obs) {
    o.value = fn(o.task, o.value);
  }
  if (obs.empty()) {
    return dataset;
  }
  return make_dataset(std::move(obs), dataset.n_tasks(), dataset.labels());
}

inline Dataset apply_normalization(const Dataset &dataset,
                                   const NormStats &stats) {
  return transform_values(dataset, [&stats](std::size_t t, double v) {
    return stats.normalize(t, v);
  });
}

inline std::pair<Dataset, NormStats> normalize(const Dataset &dataset) {
  NormStats stats = compute_norm_stats(dataset);
  return {apply_normalization(dataset, stats), std::move(stats)};
}

inline Dataset denormalize(const Dataset &dataset, const NormStats &stats) {
  return transform_values(dataset, [&stats](std::size_t t, double v) {
    return stats.denormalize(t, v);
  });
}

/// All observations belonging to the first `k` distinct sample ids.
inline Dataset prefix(const Dataset &dataset, std::size_t k) {
  const auto ids = dataset.sample_ids();
  if (k < 1 || k > ids.size()) {
    throw DataError("prefix length " + std::to_string(k) +
                    " out of range [1, " + std::to_string(ids.size()) + "]");
  }
  std::unordered_set<std::string> keep(ids.begin(), ids.begin() + k);
  std::vector<Observation> obs;
  for (const auto &o : dataset.observations()) {
    if (keep.contains(o.sample_id)) {
      obs.push_back(o);
    }
  }
  return make_dataset(std::move(obs), dataset.n_tasks(), dataset.labels());
}

/// Observations of a single task, re-indexed as task 0 of a one-task set.
/// Returns a prior-only dataset when the task has no observations.
inline Dataset single_task(const Dataset &dataset, std::size_t task) {
  std::vector<Observation> obs;
  for (const auto &o : dataset.observations()) {
    if (o.task == task) {
      obs.push_back(o);
      obs.back().task = 0;
    }
  }
  std::vector<std::string> label{dataset.labels().at(task)};
  if (obs.empty()) {
    return make_prior_dataset(1, std::move(label));
  }
  return make_dataset(std::move(obs), 1, std::move(label));
}

/// Drops every observation of `task`; the task layout is kept.
inline Dataset without_task(const Dataset &dataset, std::size_t task) {
  std::vector<Observation> obs;
  for (const auto &o : dataset.observations()) {
    if (o.task != task) {
      obs.push_back(o);
    }
  }
  if (obs.empty()) {
    return make_prior_dataset(dataset.n_tasks(), dataset.labels());
  }
  return make_dataset(std::move(obs), dataset.n_tasks(), dataset.labels());
}

}  // namespace soilgp
