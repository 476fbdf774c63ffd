#pragma once

// Shared generators for the unit suites.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "soilgp/soilgp.hpp"

namespace soilgp::testing {

inline std::vector<Location> random_locations(std::size_t m, double width,
                                              double height,
                                              std::mt19937_64 &rng) {
  std::uniform_real_distribution<double> ux(0.0, width);
  std::uniform_real_distribution<double> uy(0.0, height);
  std::vector<Location> out;
  for (std::size_t i = 0; i < m; ++i) {
    out.push_back({ux(rng), uy(rng)});
  }
  return out;
}

/// Random hyperparameters: log-uniform length-scales in [lo, hi], factor
/// entries in [-2, 2], diagonal in [0.1, 3], noise in [noise_lo, 1].
inline HyperParams random_params(std::size_t n, KernelMode mode,
                                 std::mt19937_64 &rng, double lo = 1.0,
                                 double hi = 200.0,
                                 double noise_lo = 1e-6) {
  std::uniform_real_distribution<double> off(-2.0, 2.0);
  std::uniform_real_distribution<double> diag(0.1, 3.0);
  std::uniform_real_distribution<double> log_len(std::log(lo), std::log(hi));
  std::uniform_real_distribution<double> log_noise(std::log(noise_lo), 0.0);
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                            static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < l.rows(); ++i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      l(i, j) = off(rng);
    }
    l(i, i) = diag(rng);
  }
  std::vector<double> lengths(HyperParams::length_count(n, mode));
  for (auto &v : lengths) {
    v = std::exp(log_len(rng));
  }
  std::vector<double> noise(n);
  for (auto &v : noise) {
    v = std::exp(log_noise(rng));
  }
  return HyperParams::from_components(l, lengths, noise, mode);
}

/// Heterotopic dataset: each location carries a random non-empty subset of
/// tasks with standard-normal values.
inline Dataset random_heterotopic(std::size_t n_tasks,
                                  const std::vector<Location> &locations,
                                  std::mt19937_64 &rng) {
  std::bernoulli_distribution keep(0.6);
  std::normal_distribution<double> value(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, n_tasks - 1);
  std::vector<Observation> obs;
  for (std::size_t i = 0; i < locations.size(); ++i) {
    const std::string id = "S" + std::to_string(i + 1);
    bool any = false;
    for (std::size_t t = 0; t < n_tasks; ++t) {
      if (keep(rng)) {
        obs.push_back({id, locations[i], t, value(rng)});
        any = true;
      }
    }
    if (!any) {
      obs.push_back({id, locations[i], pick(rng), value(rng)});
    }
  }
  return make_dataset(std::move(obs), n_tasks);
}

/// Homotopic dataset with every task observed at every location.
inline Dataset homotopic(std::size_t n_tasks,
                         const std::vector<Location> &locations,
                         std::mt19937_64 &rng) {
  std::normal_distribution<double> value(0.0, 1.0);
  std::vector<Observation> obs;
  for (std::size_t i = 0; i < locations.size(); ++i) {
    for (std::size_t t = 0; t < n_tasks; ++t) {
      obs.push_back({"S" + std::to_string(i + 1), locations[i], t, value(rng)});
    }
  }
  return make_dataset(std::move(obs), n_tasks);
}

inline double relative_error(const Eigen::VectorXd &a,
                             const Eigen::VectorXd &b) {
  return (a - b).norm() / std::max(b.norm(), 1e-12);
}

}  // namespace soilgp::testing
