#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

#include "pvi/amortize.hpp"
#include "pvi/stats.hpp"

namespace {

using namespace pvi;

std::vector<std::size_t> all_indices(const Dataset& ds) {
  std::vector<std::size_t> v(ds.size());
  std::iota(v.begin(), v.end(), 0);
  return v;
}

void randomize(Encoder& e, RngState seed) {
  Rng rng(seed);
  for (double& p : e.parameters()) p = 2.0 * rng.uniform() - 1.0;
}

// Encoder with zero hidden-to-output weights that emits θ for every input.
Encoder pinned(std::size_t hidden, const VariationalParams& theta) {
  Encoder e(hidden);
  e.b2(0) = theta.loc();
  e.b2(1) = theta.log_scale();
  return e;
}

TEST(EncoderTest, ZeroEncoderEmitsStandardLognormal) {
  const Encoder e(8);
  for (double x : {1e-3, 0.5, 1.0, 7.0, 250.0}) {
    const auto theta = e.forward(x);
    EXPECT_EQ(theta.loc(), 0.0);
    EXPECT_EQ(theta.scale(), 1.0);
  }
}

TEST(EncoderTest, InitializedHasZeroOutputLayer) {
  const Encoder e = Encoder::initialized(16, {3, 1});
  const auto theta = e.forward(2.0);
  EXPECT_EQ(theta.loc(), 0.0);
  EXPECT_EQ(theta.scale(), 1.0);
  for (std::size_t j = 0; j < 32; ++j) {
    EXPECT_LE(std::abs(e.parameters()[j]), 1.0);
  }
}

TEST(EncoderTest, HandWorkedForwardPass) {
  Encoder e(3);
  const double w1[] = {1.0, -0.5, 2.0};
  const double b1[] = {0.0, 0.25, -1.0};
  const double w2[2][3] = {{0.5, 1.0, -0.25}, {-1.0, 0.0, 0.5}};
  for (std::size_t j = 0; j < 3; ++j) {
    e.w1(j) = w1[j];
    e.b1(j) = b1[j];
    e.w2(0, j) = w2[0][j];
    e.w2(1, j) = w2[1][j];
  }
  e.b2(0) = 0.1;
  e.b2(1) = -0.2;
  // at x = 0.5 the pre-activations are (0.5, 0, 0), so h = (tanh 0.5, 0, 0)
  // μ = 0.1 + 0.5 tanh 0.5, log σ = -0.2 - tanh 0.5
  const auto theta = e.forward(0.5);
  EXPECT_NEAR(theta.loc(), 0.3310585786300049, 1e-15);
  EXPECT_NEAR(theta.scale(), 0.5157582364750397, 1e-15);
}

TEST(EncoderTest, DeterministicAndRejectsNonFinite) {
  Encoder e(5);
  randomize(e, {4, 4});
  const auto a = e.forward(1.3);
  const auto b = e.forward(1.3);
  EXPECT_EQ(a.loc(), b.loc());
  EXPECT_EQ(a.scale(), b.scale());
  EXPECT_GT(a.scale(), 0.0);
  EXPECT_THROW((void)e.forward(std::nan("")), std::domain_error);
  EXPECT_THROW((void)e.forward(INFINITY), std::domain_error);
  EXPECT_THROW(Encoder(0), std::invalid_argument);
}

TEST(LocalObjectiveProperty, BackpropMatchesFiniteDifferences) {
  const Dataset ds({0.3, 0.8, 1.0, 2.5, 4.0});
  const auto batch = all_indices(ds);
  const RngState key{21, 0};
  for (int trial = 0; trial < 10; ++trial) {
    Encoder e(4);
    randomize(e, {22, static_cast<std::uint64_t>(trial)});
    const LocalObjective obj = local_elbo_objective(ds, e, 3, 1, batch, 16, key);
    ASSERT_TRUE(obj.ok());
    double gmax = 0.0;
    for (double g : obj.grad) gmax = std::max(gmax, std::abs(g));
    for (std::size_t k = 0; k < e.parameters().size(); ++k) {
      const double p0 = e.parameters()[k];
      const double h = 1e-5 * std::max(1.0, std::abs(p0));
      e.parameters()[k] = p0 + h;
      const double up = local_elbo_objective(ds, e, 3, 1, batch, 16, key).loss;
      e.parameters()[k] = p0 - h;
      const double down = local_elbo_objective(ds, e, 3, 1, batch, 16, key).loss;
      e.parameters()[k] = p0;
      const double fd = (up - down) / (2.0 * h);
      const double rel = std::abs(obj.grad[k] - fd) / std::max(std::abs(fd), 1e-6 * gmax);
      EXPECT_LT(rel, 1e-4) << "trial " << trial << " parameter " << k << " analytic "
                           << obj.grad[k] << " fd " << fd;
    }
  }
}

TEST(LocalObjectiveProperty, ObjectiveIsSumOfPointObjectives) {
  const Dataset ds({0.2, 1.0, 3.0, 0.7});
  Encoder e(6);
  randomize(e, {30, 0});
  const RngState key{31, 2};
  const auto batch = all_indices(ds);
  const LocalObjective full = local_elbo_objective(ds, e, 3, 1, batch, 10, key);
  double loss = 0.0;
  std::vector<double> grad(full.grad.size(), 0.0);
  for (std::size_t i : batch) {
    const std::size_t one[] = {i};
    const LocalObjective single = local_elbo_objective(ds, e, 3, 1, one, 10, key);
    loss += single.loss;
    for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += single.grad[k];
  }
  EXPECT_EQ(full.loss, loss);
  EXPECT_EQ(full.grad, grad);
}

TEST(LocalObjectiveTest, PinnedOptimumMatchesClosedForm) {
  for (double x : {0.4, 1.0, 2.0}) {
    const Dataset ds({x});
    const auto opt = local_optimum(3, 1, x);
    const Encoder e = pinned(4, opt);
    const std::size_t one[] = {0};
    const LocalObjective obj = local_elbo_objective(ds, e, 3, 1, one, 20000, {40, 0});
    ASSERT_TRUE(obj.ok());
    const double truth = -elbo_closed_form(3, 1, x, opt.loc(), opt.scale());
    EXPECT_NEAR(obj.loss, truth, 3 * obj.local[0].standard_error) << "x=" << x;
  }
}

TEST(LocalObjectiveProperty, StationaryEncoderHasZeroMeanGradient) {
  const double x = 1.0;
  const Dataset ds({x});
  const Encoder e = pinned(3, local_optimum(3, 1, x));
  const std::size_t one[] = {0};
  std::vector<RunningStats> stats(e.parameters().size());
  for (std::uint64_t r = 0; r < 100; ++r) {
    const LocalObjective obj = local_elbo_objective(ds, e, 3, 1, one, 50, {41, r});
    ASSERT_TRUE(obj.ok());
    for (std::size_t k = 0; k < stats.size(); ++k) stats[k].push(obj.grad[k]);
  }
  for (std::size_t k = 0; k < stats.size(); ++k) {
    if (stats[k].standard_error() == 0.0) {
      EXPECT_EQ(stats[k].mean(), 0.0);
    } else {
      EXPECT_LT(std::abs(stats[k].mean()), 4 * stats[k].standard_error()) << "parameter " << k;
    }
  }
}

TEST(LocalObjectiveTest, Errors) {
  const Dataset ds({1.0, 2.0});
  const Encoder e(2);
  const std::size_t bad[] = {2};
  EXPECT_THROW(local_elbo_objective(ds, e, 3, 1, bad, 4, {}), std::out_of_range);
  const std::size_t ok[] = {0};
  EXPECT_THROW(local_elbo_objective(ds, e, 3, 1, ok, 0, {}), std::invalid_argument);
}

TEST(LocalOptimumTest, MatchesGridSearchOnClosedFormElbo) {
  for (double x : {0.1, 1.0, 5.0}) {
    const auto opt = local_optimum(3, 1, x);
    double best = -INFINITY;
    double best_mu = 0.0;
    double best_sigma = 0.0;
    for (double mu = -2.0; mu <= 2.0; mu += 0.002) {
      for (double sigma = 0.3; sigma <= 0.7; sigma += 0.002) {
        const double v = elbo_closed_form(3, 1, x, mu, sigma);
        if (v > best) {
          best = v;
          best_mu = mu;
          best_sigma = sigma;
        }
      }
    }
    EXPECT_NEAR(opt.loc(), best_mu, 0.002);
    EXPECT_NEAR(opt.scale(), best_sigma, 0.002);
    EXPECT_NEAR(opt.scale(), 0.5, 1e-15);
  }
}

TEST(TrainTest, LearnsPerPointOptimaOnReferenceData) {
  const Dataset ds = generate_dataset(3, 1, 200, {50, 0});
  AmortizeConfig cfg;
  cfg.seed = 51;
  const auto t0 = std::chrono::steady_clock::now();
  const TrainResult r = train_amortized(ds, 3, 1, cfg);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  ASSERT_FALSE(r.diverged) << r.message;
  EXPECT_LT(secs, 60.0);
  EXPECT_EQ(r.trace.size(), cfg.epochs);
  EXPECT_EQ(r.report.points.size(), ds.size());
  EXPECT_LT(r.report.median_abs_mu_error, 0.05);
  EXPECT_GE(r.report.gap_mc, -3 * r.report.gap_mc_se);
  EXPECT_GE(r.report.gap_closed_form, 0.0);
}

TEST(TrainProperty, SmoothedLossDecreasesOverFirstEpochs) {
  const Dataset ds = generate_dataset(3, 1, 200, {50, 0});
  AmortizeConfig cfg;
  cfg.seed = 52;
  cfg.step_size = 0.002;  // slow enough that 10 epochs stay off the plateau
  cfg.epochs = 10;
  const TrainResult r = train_amortized(ds, 3, 1, cfg);
  ASSERT_EQ(r.trace.size(), 10u);
  for (std::size_t k = 1; k < r.trace.size(); ++k) {
    const double se = std::hypot(r.trace[k].standard_error, r.trace[k - 1].standard_error);
    EXPECT_LE(r.trace[k].mean_loss, r.trace[k - 1].mean_loss + 3 * se) << "epoch " << k;
  }
  // exact expected loss of the encoder after each epoch; a k-epoch run is a
  // prefix of a longer one with the same seed
  double previous = INFINITY;
  for (std::size_t k = 1; k <= 10; ++k) {
    cfg.epochs = k;
    cfg.report_samples = 2;
    const TrainResult p = train_amortized(ds, 3, 1, cfg);
    double loss = 0.0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const auto t = p.encoder.forward(ds[i]);
      loss -= elbo_closed_form(3, 1, ds[i], t.loc(), t.scale());
    }
    EXPECT_LT(loss, previous) << "epoch " << k;
    previous = loss;
  }
}

TEST(TrainTest, SinglePointGapVanishes) {
  const Dataset ds({1.0});
  AmortizeConfig cfg;
  cfg.batch_size = 1;
  cfg.epochs = 2000;
  cfg.step_size = 0.05;
  cfg.seed = 53;
  const TrainResult r = train_amortized(ds, 3, 1, cfg);
  ASSERT_FALSE(r.diverged) << r.message;
  EXPECT_LT(std::abs(r.report.gap_mc), 3 * r.report.gap_mc_se);
  EXPECT_LT(r.report.gap_closed_form, 3 * r.report.gap_mc_se);
}

TEST(TrainProperty, SameSeedSameEncoder) {
  const Dataset ds = generate_dataset(3, 1, 20, {54, 0});
  AmortizeConfig cfg;
  cfg.epochs = 5;
  cfg.seed = 9;
  const TrainResult a = train_amortized(ds, 3, 1, cfg);
  const TrainResult b = train_amortized(ds, 3, 1, cfg);
  EXPECT_TRUE(std::equal(a.encoder.parameters().begin(), a.encoder.parameters().end(),
                         b.encoder.parameters().begin()));
  EXPECT_EQ(a.report.gap_mc, b.report.gap_mc);
}

TEST(TrainTest, DivergenceHaltsWithPartialTrace) {
  const Dataset ds = generate_dataset(3, 1, 20, {55, 0});
  AmortizeConfig cfg;
  cfg.epochs = 20;
  cfg.step_size = 1e6;
  const TrainResult r = train_amortized(ds, 3, 1, cfg);
  EXPECT_TRUE(r.diverged);
  EXPECT_FALSE(r.message.empty());
  EXPECT_LT(r.trace.size(), cfg.epochs);
}

TEST(TrainTest, RejectsInvalidConfiguration) {
  const Dataset ds({1.0, 2.0});
  AmortizeConfig cfg;
  cfg.batch_size = 3;
  EXPECT_THROW(train_amortized(ds, 3, 1, cfg), std::invalid_argument);
  cfg.batch_size = 0;
  EXPECT_THROW(train_amortized(ds, 3, 1, cfg), std::invalid_argument);
  cfg = {};
  cfg.batch_size = 2;
  cfg.hidden = 0;
  EXPECT_THROW(train_amortized(ds, 3, 1, cfg), std::invalid_argument);
}

TEST(DatasetTest, ParsesOnePerLine) {
  std::istringstream in("0.5\n\n  2\n1e-3\r\n");
  const Dataset ds = read_dataset(in);
  ASSERT_EQ(ds.size(), 3u);
  EXPECT_EQ(ds[0], 0.5);
  EXPECT_EQ(ds[1], 2.0);
  EXPECT_EQ(ds[2], 1e-3);
}

TEST(DatasetTest, ErrorsNameTheLine) {
  for (const char* text : {"1.0\n-2.0\n", "1.0\n0\n", "1.0\nabc\n"}) {
    std::istringstream in(text);
    try {
      (void)read_dataset(in, "obs.txt");
      FAIL() << "accepted " << text;
    } catch (const DatasetError& e) {
      EXPECT_NE(std::string(e.what()).find("obs.txt:2"), std::string::npos) << e.what();
    }
  }
  std::istringstream empty("\n\n");
  EXPECT_THROW(read_dataset(empty), DatasetError);
  EXPECT_THROW(Dataset({1.0, -1.0}), DatasetError);
  EXPECT_THROW(Dataset({}), DatasetError);
}

TEST(DatasetTest, MissingFileNamesPath) {
  try {
    (void)load_dataset("/nonexistent/pvi-data.txt");
    FAIL();
  } catch (const DatasetError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/pvi-data.txt"), std::string::npos);
  }
}

TEST(DatasetTest, GeneratedDataIsPositiveAndReproducible) {
  const Dataset a = generate_dataset(3, 1, 500, {60, 0});
  const Dataset b = generate_dataset(3, 1, 500, {60, 0});
  ASSERT_EQ(a.size(), 500u);
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_GT(a[i], 0.0);
    EXPECT_EQ(a[i], b[i]);
    sum += a[i];
  }
  // marginal of x is Lomax with mean β/(α-1) = 0.5
  EXPECT_NEAR(sum / 500.0, 0.5, 0.15);
}

}  // namespace
