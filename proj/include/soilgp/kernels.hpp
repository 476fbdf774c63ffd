#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "soilgp/domain.hpp"
#include "soilgp/error.hpp"

namespace soilgp {

enum class KernelMode { ICM, Convolved };

inline std::string to_string(KernelMode mode) {
  return mode == KernelMode::ICM ? "icm" : "convolved";
}

inline KernelMode parse_kernel_mode(const std::string &text) {
  if (text == "icm" || text == "ICM") {
    return KernelMode::ICM;
  }
  if (text == "convolved" || text == "Convolved") {
    return KernelMode::Convolved;
  }
  throw DataError("unknown kernel mode '" + text + "'");
}

namespace detail {
inline constexpr double kSqrt3 = 1.7320508075688772;
// Relative length-scale gap below which the cross kernel uses the
// equal-length-scale closed form.
inline constexpr double kEqualLengthTol = 1e-6;

inline void require_positive_length(double l) {
  if (!(l > 0.0) || !std::isfinite(l)) {
    throw DataError("length-scale must be positive and finite");
  }
}
}  // namespace detail

/// Unit-amplitude Matern 3/2: (1 + sqrt(3) r / l) exp(-sqrt(3) r / l).
inline double matern32_unit(double r, double l) {
  detail::require_positive_length(l);
  const double u = detail::kSqrt3 * r / l;
  return (1.0 + u) * std::exp(-u);
}

/// d matern32_unit / d log(l).
inline double matern32_dlog_length(double r, double l) {
  const double u = detail::kSqrt3 * r / l;
  return u * u * std::exp(-u);
}

/// Cross-task covariance of two Matern 3/2 tasks with length-scales l_i and
/// l_j, obtained by convolving their exponential basis functions. Reduces to
/// matern32_unit when l_i == l_j; k(0) = 2 sqrt(l_i l_j) / (l_i + l_j).
inline double cross_matern32_unit(double r, double li, double lj) {
  detail::require_positive_length(li);
  detail::require_positive_length(lj);
  if (std::abs(li - lj) / std::max(li, lj) < detail::kEqualLengthTol) {
    return matern32_unit(r, li);
  }
  const double amp = 2.0 * std::sqrt(li * lj) / (li * li - lj * lj);
  return amp * (li * std::exp(-detail::kSqrt3 * r / li) -
                lj * std::exp(-detail::kSqrt3 * r / lj));
}

struct CrossKernelGrad {
  double value = 0.0;
  double dlog_li = 0.0;
  double dlog_lj = 0.0;
};

/// Cross kernel value with its derivatives w.r.t. log l_i and log l_j.
inline CrossKernelGrad cross_matern32_with_grad(double r, double li,
                                                double lj) {
  if (std::abs(li - lj) / std::max(li, lj) < detail::kEqualLengthTol) {
    // On the diagonal the two partials are equal by symmetry and sum to the
    // derivative of the shared-length kernel.
    const double half = 0.5 * matern32_dlog_length(r, li);
    return {matern32_unit(r, li), half, half};
  }
  const double ei = std::exp(-detail::kSqrt3 * r / li);
  const double ej = std::exp(-detail::kSqrt3 * r / lj);
  const double diff = li * li - lj * lj;
  const double amp = 2.0 * std::sqrt(li * lj) / diff;
  const double body = li * ei - lj * ej;
  const double damp_dli = amp * (0.5 / li - 2.0 * li / diff);
  const double damp_dlj = amp * (0.5 / lj + 2.0 * lj / diff);
  const double dbody_dli = ei * (1.0 + detail::kSqrt3 * r / li);
  const double dbody_dlj = -ej * (1.0 + detail::kSqrt3 * r / lj);
  return {amp * body, li * (damp_dli * body + amp * dbody_dli),
          lj * (damp_dlj * body + amp * dbody_dlj)};
}

/// Free parameters of the lower-triangular factor L of the task covariance
/// K_c = L L^T: n(n+1)/2 entries, row-major, diagonal stored as log.
class TaskCholeskyFactor {
 public:
  TaskCholeskyFactor() = default;

  TaskCholeskyFactor(std::size_t n, Eigen::VectorXd packed)
      : n_(n), packed_(std::move(packed)) {
    if (static_cast<std::size_t>(packed_.size()) != free_parameter_count(n)) {
      throw DataError("task factor expects " +
                      std::to_string(free_parameter_count(n)) + " entries");
    }
  }

  /// From a materialized lower-triangular matrix with positive diagonal.
  static TaskCholeskyFactor from_lower(const Eigen::MatrixXd &lower) {
    const auto n = static_cast<std::size_t>(lower.rows());
    if (lower.cols() != lower.rows()) {
      throw DataError("task factor must be square");
    }
    Eigen::VectorXd packed(free_parameter_count(n));
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < lower.rows(); ++i) {
      for (Eigen::Index j = 0; j <= i; ++j) {
        if (i == j) {
          if (!(lower(i, i) > 0.0)) {
            throw DataError("task factor diagonal must be positive");
          }
          packed(k++) = std::log(lower(i, i));
        } else {
          packed(k++) = lower(i, j);
        }
      }
    }
    return {n, std::move(packed)};
  }

  static constexpr std::size_t free_parameter_count(std::size_t n) {
    return n * (n + 1) / 2;
  }

  std::size_t n() const { return n_; }
  const Eigen::VectorXd &packed() const { return packed_; }

  Eigen::MatrixXd lower() const {
    const auto n = static_cast<Eigen::Index>(n_);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j <= i; ++j) {
        out(i, j) = (i == j) ? std::exp(packed_(k)) : packed_(k);
        ++k;
      }
    }
    return out;
  }

 private:
  std::size_t n_ = 0;
  Eigen::VectorXd packed_;
};

inline Eigen::MatrixXd task_cov(const TaskCholeskyFactor &chol) {
  const Eigen::MatrixXd l = chol.lower();
  return l * l.transpose();
}

/// Per-task length-scales in meters; a single entry is shared by all tasks.
struct SpatialParams {
  std::vector<double> lengthscales;

  double for_task(std::size_t task) const {
    return lengthscales.size() == 1 ? lengthscales.front()
                                    : lengthscales.at(task);
  }
  double max() const {
    return *std::max_element(lengthscales.begin(), lengthscales.end());
  }
};

/// Per-task observation noise variances (normalized units squared).
struct NoiseParams {
  std::vector<double> variances;
};

inline constexpr double kDefaultNoiseFloor = 1e-8;
inline constexpr double kPsdJitter = 1e-10;

namespace detail {

inline void check_params(std::span<const TaskPoint> points,
                         const Eigen::MatrixXd &task_covariance,
                         const SpatialParams &spatial, KernelMode mode) {
  const auto n = static_cast<std::size_t>(task_covariance.rows());
  if (task_covariance.cols() != task_covariance.rows()) {
    throw DataError("task covariance must be square");
  }
  if (spatial.lengthscales.empty()) {
    throw DataError("no length-scales supplied");
  }
  if (mode == KernelMode::Convolved && spatial.lengthscales.size() != n &&
      spatial.lengthscales.size() != 1) {
    throw DataError("convolved mode needs one length-scale per task");
  }
  for (double l : spatial.lengthscales) {
    require_positive_length(l);
  }
  for (const auto &p : points) {
    if (p.task >= n) {
      throw DataError("task index " + std::to_string(p.task) +
                      " exceeds task covariance dimension");
    }
  }
}

/// Unit-amplitude spatial covariance between two task points.
inline double spatial_entry(const TaskPoint &a, const TaskPoint &b,
                            const SpatialParams &spatial, KernelMode mode) {
  const double r = distance(a.location, b.location);
  if (mode == KernelMode::ICM) {
    return matern32_unit(r, spatial.lengthscales.front());
  }
  return cross_matern32_unit(r, spatial.for_task(a.task),
                             spatial.for_task(b.task));
}

}  // namespace detail

/// Cross covariance k(queries, obs): entry (p, q) is
/// K_c[i, j] * k_ij(|x_p - x_q|). No noise.
inline Eigen::MatrixXd assemble_cross_cov(std::span<const TaskPoint> queries,
                                          std::span<const TaskPoint> obs,
                                          const Eigen::MatrixXd &task_covariance,
                                          const SpatialParams &spatial,
                                          KernelMode mode) {
  detail::check_params(queries, task_covariance, spatial, mode);
  detail::check_params(obs, task_covariance, spatial, mode);
  const auto rows = static_cast<Eigen::Index>(queries.size());
  const auto cols = static_cast<Eigen::Index>(obs.size());
  Eigen::MatrixXd out(rows, cols);
  for (Eigen::Index p = 0; p < rows; ++p) {
    const auto &a = queries[static_cast<std::size_t>(p)];
    for (Eigen::Index q = 0; q < cols; ++q) {
      const auto &b = obs[static_cast<std::size_t>(q)];
      out(p, q) = task_covariance(static_cast<Eigen::Index>(a.task),
                                  static_cast<Eigen::Index>(b.task)) *
                  detail::spatial_entry(a, b, spatial, mode);
    }
  }
  return out;
}

/// Training covariance K + Sigma_noise over `obs`. In ICM mode only the first
/// length-scale is read (K = K_c (x) K_s for homotopic data).
inline Eigen::MatrixXd assemble_training_cov(
    std::span<const TaskPoint> obs, const Eigen::MatrixXd &task_covariance,
    const SpatialParams &spatial, const NoiseParams &noise, KernelMode mode) {
  detail::check_params(obs, task_covariance, spatial, mode);
  if (noise.variances.size() != static_cast<std::size_t>(task_covariance.rows())) {
    throw DataError("noise parameter count does not match task count");
  }
  const auto m = static_cast<Eigen::Index>(obs.size());
  Eigen::MatrixXd out(m, m);
  for (Eigen::Index p = 0; p < m; ++p) {
    const auto &a = obs[static_cast<std::size_t>(p)];
    for (Eigen::Index q = 0; q <= p; ++q) {
      const auto &b = obs[static_cast<std::size_t>(q)];
      const double v = task_covariance(static_cast<Eigen::Index>(a.task),
                                       static_cast<Eigen::Index>(b.task)) *
                       detail::spatial_entry(a, b, spatial, mode);
      out(p, q) = v;
      out(q, p) = v;
    }
    out(p, p) += noise.variances[a.task];
  }
  return out;
}

/// Jitter ladder tried in order when factorizing a covariance matrix.
inline constexpr double kJitterLadder[] = {0.0, 1e-10, 1e-9, 1e-8};

struct CholeskyResult {
  Eigen::MatrixXd lower;
  double jitter = 0.0;
};

/// Lower Cholesky factor of `matrix`, escalating diagonal jitter up to
/// `max_jitter`. Empty when every rung fails.
inline std::optional<CholeskyResult> jittered_cholesky(
    const Eigen::MatrixXd &matrix, double max_jitter = 1e-8) {
  if (matrix.size() == 0) {
    return CholeskyResult{matrix, 0.0};
  }
  if (!matrix.allFinite()) {
    return std::nullopt;
  }
  for (double jitter : kJitterLadder) {
    if (jitter > max_jitter) {
      break;
    }
    Eigen::MatrixXd work = matrix;
    work.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(work);
    if (llt.info() == Eigen::Success &&
        (llt.matrixL().toDenseMatrix().diagonal().array() > 0.0).all()) {
      return CholeskyResult{llt.matrixL(), jitter};
    }
  }
  return std::nullopt;
}

}  // namespace soilgp
