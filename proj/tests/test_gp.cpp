#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "soilgp/gp.hpp"
#include "test_support.hpp"

namespace soilgp {
namespace {

double oracle_lml(const HyperParams &params, const Dataset &data,
                  double floor) {
  const auto d = oracle::decode(params.theta(), params.n_tasks(),
                                params.mode() == KernelMode::ICM, floor);
  const auto cov = oracle::dense_cov(
      data.task_points(), d, [&](double r, double li, double lj) {
        return params.mode() == KernelMode::ICM ? oracle::matern32(r, li)
                                                : oracle::convolved_cross(r, li, lj);
      });
  return oracle::mvn_log_density(detail::to_vector(data.values()), cov);
}

// Parameters that keep the covariance comfortably positive definite.
HyperParams tame_params(std::size_t n, KernelMode mode, std::mt19937_64 &rng) {
  return testing::random_params(n, mode, rng, 10.0, 80.0, 1e-2);
}

TEST(LogMarginalLikelihood, SinglePointStandardNormal) {
  const auto params = HyperParams::from_components(
      Eigen::MatrixXd::Constant(1, 1, std::sqrt(0.5)), {10.0}, {0.5},
      KernelMode::Convolved);
  const auto data = make_dataset({{"a", {0, 0}, 0, 0.0}}, 1);
  const auto lml = log_marginal_likelihood(params, data, 0.0);
  ASSERT_TRUE(lml.has_value());
  EXPECT_NEAR(*lml, -0.5 * std::log(2.0 * std::numbers::pi), 1e-12);
  EXPECT_NEAR(*lml, -0.918939, 1e-6);
}

TEST(LogMarginalLikelihood, MatchesDenseOracle) {
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<std::size_t> nd(1, 3);
  std::uniform_int_distribution<std::size_t> md(2, 6);
  for (int trial = 0; trial < 50; ++trial) {
    for (auto mode : {KernelMode::ICM, KernelMode::Convolved}) {
      const std::size_t n = nd(rng);
      const auto data = testing::random_heterotopic(
          n, testing::random_locations(md(rng), 100, 100, rng), rng);
      ASSERT_LE(data.size(), 20u);
      const auto params = tame_params(n, mode, rng);
      const auto lml = log_marginal_likelihood(params, data, 1e-8);
      ASSERT_TRUE(lml.has_value());
      EXPECT_NEAR(*lml, oracle_lml(params, data, 1e-8), 1e-8);
    }
  }
}

TEST(LogMarginalLikelihood, DependsOnNoise) {
  std::mt19937_64 rng(13);
  const auto data =
      testing::homotopic(2, testing::random_locations(4, 50, 50, rng), rng);
  const auto params = tame_params(2, KernelMode::Convolved, rng);
  Eigen::VectorXd theta = params.theta();
  theta.tail(2).array() += std::log(2.0);
  const HyperParams doubled(2, KernelMode::Convolved, theta);
  EXPECT_NE(*log_marginal_likelihood(params, data, 0.0),
            *log_marginal_likelihood(doubled, data, 0.0));
}

TEST(LogMarginalLikelihood, DimensionMismatch) {
  std::mt19937_64 rng(1);
  const auto data =
      testing::homotopic(2, testing::random_locations(3, 50, 50, rng), rng);
  const auto params = tame_params(3, KernelMode::ICM, rng);
  EXPECT_THROW(log_marginal_likelihood(params, data, 0.0), DataError);
}

TEST(LogMarginalLikelihood, RejectsIndefiniteSignalHiddenByNoise) {
  std::mt19937_64 rng(19);
  int hidden = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const auto data = testing::random_heterotopic(
        4, testing::random_locations(25, 300, 170, rng), rng);
    const auto params = testing::random_params(4, KernelMode::Convolved, rng);
    const auto points = data.task_points();
    const Eigen::MatrixXd signal = assemble_training_cov(
        points, params.task_covariance(), params.spatial(),
        NoiseParams{std::vector<double>(4, 0.0)}, KernelMode::Convolved);
    const bool signal_ok = jittered_cholesky(signal).has_value();
    const bool noisy_ok =
        jittered_cholesky(assemble_training_cov(
                              points, params.task_covariance(), params.spatial(),
                              params.noise(1e-8), KernelMode::Convolved))
            .has_value();
    const bool accepted = log_marginal_likelihood(params, data, 1e-8).has_value();
    EXPECT_EQ(accepted, signal_ok && noisy_ok) << "trial " << trial;
    hidden += noisy_ok && !signal_ok ? 1 : 0;
  }
  EXPECT_GT(hidden, 0);
}

TEST(LmlGradient, MatchesCentralDifferences) {
  std::mt19937_64 rng(14);
  for (auto mode : {KernelMode::ICM, KernelMode::Convolved}) {
    for (int trial = 0; trial < 50; ++trial) {
      const std::size_t n = 1 + static_cast<std::size_t>(trial % 3);
      const auto data = testing::random_heterotopic(
          n, testing::random_locations(8, 100, 100, rng), rng);
      // Rejected draws have no gradient to check.
      auto params = tame_params(n, mode, rng);
      while (!log_marginal_likelihood(params, data, 1e-8)) {
        params = tame_params(n, mode, rng);
      }
      const auto grad = lml_gradient(params, data, 1e-8);
      ASSERT_TRUE(grad.has_value());
      const auto f = [&](const Eigen::VectorXd &theta) {
        return *log_marginal_likelihood(HyperParams(n, mode, theta), data, 1e-8);
      };
      const Eigen::VectorXd fd =
          oracle::central_difference(f, params.theta(), 1e-5);
      EXPECT_LE(testing::relative_error(*grad, fd), 1e-4)
          << to_string(mode) << " trial " << trial;
    }
  }
}

TEST(LmlGradient, FiniteDifferenceModeIsTheFdFormula) {
  std::mt19937_64 rng(15);
  const auto data = testing::random_heterotopic(
      3, testing::random_locations(6, 100, 100, rng), rng);
  const auto params = tame_params(3, KernelMode::Convolved, rng);
  const auto got = lml_gradient_fd(params, data, 1e-8);
  ASSERT_TRUE(got.has_value());
  const auto f = [&](const Eigen::VectorXd &theta) {
    return *log_marginal_likelihood(HyperParams(3, KernelMode::Convolved, theta),
                                    data, 1e-8);
  };
  const Eigen::VectorXd want = oracle::central_difference(f, params.theta(), 1e-5);
  EXPECT_LE((*got - want).cwiseAbs().maxCoeff(), 1e-12);
}

Dataset correlated_data(std::uint64_t seed, std::size_t sites) {
  std::mt19937_64 rng(seed);
  Eigen::Matrix2d corr;
  corr << 1.0, 0.9, 0.9, 1.0;
  const auto params = HyperParams::from_components(
      factor_from_correlation(corr, std::vector<double>{1.0, 1.0}), {40.0, 60.0},
      {0.05, 0.05}, KernelMode::Convolved);
  const auto locs = testing::random_locations(sites, 150, 100, rng);
  return sample_prior(params, locs, seed);
}

FitConfig small_config() {
  FitConfig config;
  config.restarts = 3;
  config.seed = 7;
  return config;
}

TEST(Fit, DeterministicForSeed) {
  const auto data = correlated_data(1, 12);
  const auto a = fit(data, small_config());
  const auto b = fit(data, small_config());
  EXPECT_EQ(a.params, b.params);
  EXPECT_EQ(a.lml, b.lml);
  EXPECT_EQ(a.restart_lml, b.restart_lml);
}

TEST(Fit, ReportsMaxOverRestartsAndStationaryPoint) {
  const auto data = correlated_data(2, 12);
  auto config = small_config();
  config.tol = 1e-12;
  config.max_iters = 500;
  const auto model = fit(data, config);
  ASSERT_EQ(model.restart_lml.size(), 3u);
  for (double v : model.restart_lml) {
    EXPECT_GE(model.lml, v);
  }
  const auto grad = lml_gradient(model.params, model.training, model.noise_floor);
  ASSERT_TRUE(grad.has_value());
  EXPECT_LE(grad->norm(), 1e-3);
}

TEST(Fit, InvariantsOfFittedModel) {
  const auto data = correlated_data(3, 10);
  const auto model = fit(data, small_config());
  EXPECT_EQ(model.n_tasks(), 2u);
  EXPECT_EQ(model.training.size(), data.size());
  EXPECT_EQ(model.alpha.size(), static_cast<Eigen::Index>(data.size()));
  EXPECT_TRUE(model.params.theta().allFinite());
  EXPECT_NEAR(*log_marginal_likelihood(model.params, model.training,
                                       model.noise_floor),
              model.lml, 1e-9);
}

TEST(Fit, SingleTaskMatchesPlainGp) {
  std::mt19937_64 rng(16);
  const auto locs = testing::random_locations(10, 100, 100, rng);
  const auto data = testing::homotopic(1, locs, rng);
  const auto model = fit(data, small_config());
  const double amp2 = model.params.task_covariance()(0, 0);
  const double l = model.params.spatial().lengthscales[0];
  const double noise = model.params.noise(model.noise_floor).variances[0];
  const Eigen::VectorXd y = detail::to_vector(model.training.values());
  EXPECT_NEAR(model.lml, oracle::single_task_lml(locs, y, amp2, l, noise), 1e-6);
}

TEST(Predict, InterpolatesAtVanishingNoise) {
  std::mt19937_64 rng(17);
  for (auto mode : {KernelMode::ICM, KernelMode::Convolved}) {
    const auto raw = testing::random_heterotopic(
        3, testing::random_locations(10, 100, 100, rng), rng);
    const auto [data, stats] = normalize(raw);
    auto params = tame_params(3, mode, rng);
    Eigen::VectorXd theta = params.theta();
    theta.tail(3).setConstant(std::log(1e-10));
    const auto model = condition(HyperParams(3, mode, theta), data, stats, 0.0);
    const auto pts = data.task_points();
    const auto res = predict(model, pts);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      EXPECT_NEAR(res.mean[i], data.observations()[i].value, 1e-5);
      EXPECT_LE(res.variance[i], 1e-4);
    }
  }
}

TEST(Predict, FarFieldRevertsToPrior) {
  std::mt19937_64 rng(18);
  const auto data = testing::random_heterotopic(
      3, testing::random_locations(10, 100, 100, rng), rng);
  const auto params = tame_params(3, KernelMode::Convolved, rng);
  const auto model = condition(params, data, NormStats::identity(3), 1e-8);
  const double far = 100.0 * params.spatial().max();
  const std::vector<TaskPoint> q{{0, {far, far}}, {1, {-far, 0}}, {2, {0, far}}};
  const auto res = predict(model, q);
  const Eigen::MatrixXd kc = params.task_covariance();
  ASSERT_EQ(res.mean.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_LE(std::abs(res.mean[i]), 1e-6);
    EXPECT_NEAR(res.variance[i],
                kc(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)),
                1e-6);
  }
}

TEST(Predict, BatchShapeOrderAndErrors) {
  std::mt19937_64 rng(19);
  const auto data = testing::random_heterotopic(
      2, testing::random_locations(8, 100, 100, rng), rng);
  const auto params = tame_params(2, KernelMode::ICM, rng);
  const auto model = condition(params, data, NormStats::identity(2), 1e-8);
  std::vector<TaskPoint> q;
  for (int i = 0; i < 7; ++i) {
    q.push_back({static_cast<std::size_t>(i % 2), {10.0 * i, 5.0 * i}});
  }
  const auto batch = predict(model, q);
  ASSERT_EQ(batch.mean.size(), 7u);
  ASSERT_EQ(batch.variance.size(), 7u);
  for (std::size_t i = 0; i < q.size(); ++i) {
    const auto one = predict(model, std::span<const TaskPoint>(&q[i], 1));
    EXPECT_NEAR(batch.mean[i], one.mean[0], 1e-12);
    EXPECT_NEAR(batch.variance[i], one.variance[0], 1e-12);
    EXPECT_GE(batch.variance[i], 0.0);
  }
  const std::vector<TaskPoint> bad{{2, {0, 0}}};
  EXPECT_THROW(predict(model, bad), DataError);
  EXPECT_EQ(batch.clamp_count, 0u);
}

TEST(Predict, DenormalizeAndNoiseFlags) {
  const auto raw = correlated_data(4, 8);
  const auto transformed = transform_values(
      raw, [](std::size_t t, double v) { return 10.0 * v + 5.0 * (t + 1.0); });
  const auto model = fit(transformed, small_config());
  const std::vector<TaskPoint> q{{1, {20.0, 30.0}}};
  const auto plain = predict(model, q);
  const auto denorm = predict(model, q, true);
  const auto noisy = predict(model, q, false, true);
  EXPECT_NEAR(denorm.mean[0], model.stats.denormalize(1, plain.mean[0]), 1e-12);
  EXPECT_NEAR(denorm.variance[0],
              model.stats.denormalize_variance(1, plain.variance[0]), 1e-12);
  EXPECT_NEAR(noisy.variance[0] - plain.variance[0],
              model.params.noise(model.noise_floor).variances[1], 1e-12);
}

TEST(TaskCorrelations, Examples) {
  const auto id = task_correlations(Eigen::MatrixXd::Identity(3, 3));
  EXPECT_TRUE(id.isApprox(Eigen::MatrixXd::Identity(3, 3)));
  Eigen::Matrix2d kc;
  kc << 1.0, 0.9, 0.9, 1.0;
  EXPECT_NEAR(task_correlations(kc)(0, 1), 0.9, 1e-15);
  std::mt19937_64 rng(20);
  for (int i = 0; i < 50; ++i) {
    const auto r = task_correlations(
        testing::random_params(4, KernelMode::Convolved, rng).task_covariance());
    for (Eigen::Index t = 0; t < 4; ++t) {
      EXPECT_EQ(r(t, t), 1.0);
    }
    EXPECT_LE(r.cwiseAbs().maxCoeff(), 1.0);
  }
}

TEST(FitStgp, OneModelPerTaskAndIgnoresOtherTasks) {
  std::mt19937_64 rng(21);
  const auto data = testing::random_heterotopic(
      4, testing::random_locations(8, 100, 100, rng), rng);
  const auto models = fit_stgp(data, small_config());
  ASSERT_EQ(models.size(), 4u);
  const std::vector<TaskPoint> q{{0, {3, 4}}, {0, {50, 60}}};
  const auto full = predict_stgp(models, q);

  std::vector<Observation> only0;
  for (const auto &o : data.observations()) {
    if (o.task == 0) {
      only0.push_back(o);
    }
  }
  auto config = small_config();
  config.extent_hint = data.bounds().extent();
  const auto alone = fit(make_dataset(only0, 1), config);
  const std::vector<TaskPoint> q0{{0, {3, 4}}, {0, {50, 60}}};
  const auto res = predict(alone, q0);
  EXPECT_EQ(full.mean, res.mean);
  EXPECT_EQ(full.variance, res.variance);
}

TEST(SamplePrior, ShapeAndDeterminism) {
  std::mt19937_64 rng(22);
  const auto params = tame_params(3, KernelMode::Convolved, rng);
  const auto locs = testing::random_locations(7, 100, 100, rng);
  const auto a = sample_prior(params, locs, 5, 0.0);
  const auto b = sample_prior(params, locs, 5, 0.0);
  EXPECT_EQ(a.size(), 21u);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.observations().front().sample_id, "S01");
  EXPECT_NE(sample_prior(params, locs, 6, 0.0), a);
}

TEST(SamplePrior, MonteCarloCovariance) {
  std::mt19937_64 rng(23);
  const auto params = HyperParams::from_components(
      factor_from_correlation(
          (Eigen::Matrix2d() << 1.0, 0.6, 0.6, 1.0).finished(),
          std::vector<double>{1.0, 1.5}),
      {30.0, 50.0}, {0.1, 0.2}, KernelMode::Convolved);
  const std::vector<Location> locs{{0, 0}, {20, 10}, {35, 40}};
  const auto pts = detail::homotopic_points(locs, 2);
  const Eigen::MatrixXd want = assemble_training_cov(
      pts, params.task_covariance(), params.spatial(), params.noise(0.0),
      KernelMode::Convolved);
  const int draws = 2000;
  Eigen::MatrixXd emp = Eigen::MatrixXd::Zero(6, 6);
  for (int s = 0; s < draws; ++s) {
    const auto y = detail::to_vector(
        sample_prior(params, locs, static_cast<std::uint64_t>(s), 0.0).values());
    emp += y * y.transpose();
  }
  emp /= draws;
  for (Eigen::Index i = 0; i < 6; ++i) {
    for (Eigen::Index j = 0; j < 6; ++j) {
      // Entries near zero get an absolute allowance at the Monte-Carlo scale.
      EXPECT_LE(std::abs(emp(i, j) - want(i, j)),
                std::max(0.1 * std::abs(want(i, j)),
                         0.1 * std::sqrt(want(i, i) * want(j, j))))
          << i << "," << j;
    }
  }
}

TEST(Properties, TranslationInvariance) {
  std::mt19937_64 rng(24);
  for (auto mode : {KernelMode::ICM, KernelMode::Convolved}) {
    const auto data = testing::random_heterotopic(
        3, testing::random_locations(10, 100, 100, rng), rng);
    std::vector<Observation> shifted = data.observations();
    for (auto &o : shifted) {
      o.location.x += 1234.5;
      o.location.y -= 678.25;
    }
    const auto moved = make_dataset(shifted, 3);
    const auto params = tame_params(3, mode, rng);
    EXPECT_NEAR(*log_marginal_likelihood(params, data, 1e-8),
                *log_marginal_likelihood(params, moved, 1e-8), 1e-8);
    const auto a = condition(params, data, NormStats::identity(3), 1e-8);
    const auto b = condition(params, moved, NormStats::identity(3), 1e-8);
    const std::vector<TaskPoint> qa{{1, {40, 40}}, {2, {90, 5}}};
    const std::vector<TaskPoint> qb{{1, {40 + 1234.5, 40 - 678.25}},
                                    {2, {90 + 1234.5, 5 - 678.25}}};
    const auto pa = predict(a, qa);
    const auto pb = predict(b, qb);
    for (std::size_t i = 0; i < 2; ++i) {
      EXPECT_NEAR(pa.mean[i], pb.mean[i], 1e-8);
      EXPECT_NEAR(pa.variance[i], pb.variance[i], 1e-8);
    }
  }
  // Fitted correlations do not depend on the coordinate origin.
  const auto data = correlated_data(5, 10);
  std::vector<Observation> shifted = data.observations();
  for (auto &o : shifted) {
    o.location.x += 500.0;
  }
  const auto ra = task_correlations(fit(data, small_config()));
  const auto rb = task_correlations(fit(make_dataset(shifted, 2), small_config()));
  EXPECT_LE((ra - rb).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Properties, DeleteAndReAddObservation) {
  std::mt19937_64 rng(25);
  const auto data =
      testing::homotopic(3, testing::random_locations(6, 100, 100, rng), rng);
  const auto params = tame_params(3, KernelMode::Convolved, rng);
  const double before = *log_marginal_likelihood(params, data, 1e-8);
  auto obs = data.observations();
  const Observation removed = obs[7];
  obs.erase(obs.begin() + 7);
  const double without = *log_marginal_likelihood(params, make_dataset(obs, 3), 1e-8);
  EXPECT_NE(without, before);
  obs.insert(obs.begin() + 7, removed);
  EXPECT_NEAR(*log_marginal_likelihood(params, make_dataset(obs, 3), 1e-8),
              before, 1e-10);
}

}  // namespace
}  // namespace soilgp
