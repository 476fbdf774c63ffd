#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "soilgp/error.hpp"
#include "soilgp/kernels.hpp"

namespace soilgp {

/// Packed unconstrained hyperparameter vector
///   [vech(L) row-major with log diagonal | log l (n entries, 1 in ICM) |
///    log sigma^2 (n entries)].
/// The effective noise variance is sigma^2 + noise_floor.
class HyperParams {
 public:
  HyperParams() = default;

  HyperParams(std::size_t n_tasks, KernelMode mode, Eigen::VectorXd theta)
      : n_tasks_(n_tasks), mode_(mode), theta_(std::move(theta)) {
    if (static_cast<std::size_t>(theta_.size()) != size(n_tasks, mode)) {
      throw DataError("hyperparameter vector has " +
                      std::to_string(theta_.size()) + " entries, expected " +
                      std::to_string(size(n_tasks, mode)));
    }
    if (!theta_.allFinite()) {
      throw DataError("hyperparameter vector must be finite");
    }
  }

  static HyperParams from_components(const Eigen::MatrixXd &task_factor,
                                     const std::vector<double> &lengthscales,
                                     const std::vector<double> &noise_variances,
                                     KernelMode mode) {
    const auto n = static_cast<std::size_t>(task_factor.rows());
    const std::size_t n_len = length_count(n, mode);
    if (lengthscales.size() != n_len) {
      throw DataError("expected " + std::to_string(n_len) + " length-scales");
    }
    if (noise_variances.size() != n) {
      throw DataError("expected one noise variance per task");
    }
    const auto chol = TaskCholeskyFactor::from_lower(task_factor);
    Eigen::VectorXd theta(size(n, mode));
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < chol.packed().size(); ++i) {
      theta(k++) = chol.packed()(i);
    }
    for (double l : lengthscales) {
      detail::require_positive_length(l);
      theta(k++) = std::log(l);
    }
    for (double s : noise_variances) {
      if (!(s > 0.0)) {
        throw DataError("noise variance must be positive");
      }
      theta(k++) = std::log(s);
    }
    return {n, mode, std::move(theta)};
  }

  static std::size_t length_count(std::size_t n_tasks, KernelMode mode) {
    return mode == KernelMode::ICM ? 1 : n_tasks;
  }
  static std::size_t size(std::size_t n_tasks, KernelMode mode) {
    return TaskCholeskyFactor::free_parameter_count(n_tasks) +
           length_count(n_tasks, mode) + n_tasks;
  }

  std::size_t n_tasks() const { return n_tasks_; }
  KernelMode mode() const { return mode_; }
  const Eigen::VectorXd &theta() const { return theta_; }

  Eigen::Index factor_offset() const { return 0; }
  Eigen::Index length_offset() const {
    return static_cast<Eigen::Index>(
        TaskCholeskyFactor::free_parameter_count(n_tasks_));
  }
  Eigen::Index noise_offset() const {
    return length_offset() +
           static_cast<Eigen::Index>(length_count(n_tasks_, mode_));
  }

  TaskCholeskyFactor task_factor() const {
    return {n_tasks_, theta_.segment(factor_offset(), length_offset())};
  }
  Eigen::MatrixXd task_covariance() const { return task_cov(task_factor()); }

  SpatialParams spatial() const {
    SpatialParams out;
    for (Eigen::Index i = length_offset(); i < noise_offset(); ++i) {
      out.lengthscales.push_back(std::exp(theta_(i)));
    }
    return out;
  }

  NoiseParams noise(double noise_floor = kDefaultNoiseFloor) const {
    NoiseParams out;
    for (Eigen::Index i = noise_offset(); i < theta_.size(); ++i) {
      out.variances.push_back(std::exp(theta_(i)) + noise_floor);
    }
    return out;
  }

  friend bool operator==(const HyperParams &a, const HyperParams &b) {
    return a.n_tasks_ == b.n_tasks_ && a.mode_ == b.mode_ &&
           a.theta_.size() == b.theta_.size() && a.theta_ == b.theta_;
  }

 private:
  std::size_t n_tasks_ = 0;
  KernelMode mode_ = KernelMode::Convolved;
  Eigen::VectorXd theta_;
};

/// Task factor whose K_c has the given correlation matrix and per-task
/// variances (Cholesky of the implied covariance).
inline Eigen::MatrixXd factor_from_correlation(
    const Eigen::MatrixXd &correlation, const std::vector<double> &variances) {
  const Eigen::Index n = correlation.rows();
  Eigen::VectorXd sd(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    sd(i) = std::sqrt(variances.at(static_cast<std::size_t>(i)));
  }
  const Eigen::MatrixXd cov = sd.asDiagonal() * correlation * sd.asDiagonal();
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw DataError("correlation matrix is not positive definite");
  }
  return llt.matrixL();
}

}  // namespace soilgp
