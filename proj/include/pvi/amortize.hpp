#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pvi/estimators.hpp"
#include "pvi/rng.hpp"
#include "pvi/varfam.hpp"

namespace pvi {

/// Positive observations x_1..x_N of the factorized Gamma-Exponential model
/// p(x, z) = Π p(x_i | z_i) p(z_i).
class Dataset {
 public:
  explicit Dataset(std::vector<double> observations);

  [[nodiscard]] std::size_t size() const { return x_.size(); }
  [[nodiscard]] double operator[](std::size_t i) const { return x_[i]; }
  [[nodiscard]] std::span<const double> observations() const { return x_; }

 private:
  std::vector<double> x_;
};

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One decimal per line; blank lines are skipped. Errors name the line.
Dataset read_dataset(std::istream& in, const std::string& source = "<stream>");
Dataset load_dataset(const std::filesystem::path& path);

/// λ_i ~ Gamma(α, β), x_i ~ Exponential(λ_i).
Dataset generate_dataset(double alpha, double beta, std::size_t n, RngState seed);

/// Λ_φ: x -> tanh hidden layer of width H -> (μ, log σ).
/// Parameter layout: w1[H], b1[H], w2[2][H] (μ row, then log σ row), b2[2].
class Encoder {
 public:
  /// All parameters zero, so every input maps to (μ = 0, σ = 1).
  explicit Encoder(std::size_t hidden);

  /// Hidden layer uniform in ±1/sqrt(fan-in), output layer zero.
  static Encoder initialized(std::size_t hidden, RngState seed);

  [[nodiscard]] std::size_t hidden() const { return hidden_; }
  [[nodiscard]] std::span<double> parameters() { return phi_; }
  [[nodiscard]] std::span<const double> parameters() const { return phi_; }

  /// Throws std::domain_error for non-finite x.
  [[nodiscard]] VariationalParams forward(double x) const;

  /// Accumulates ∂loss/∂φ into `grad` given ∂loss/∂(μ, log σ) at input x.
  void backward(double x, const Vec2& d_out, std::span<double> grad) const;

  double& w1(std::size_t j) { return phi_[j]; }
  double& b1(std::size_t j) { return phi_[hidden_ + j]; }
  double& w2(std::size_t row, std::size_t j) { return phi_[2 * hidden_ + row * hidden_ + j]; }
  double& b2(std::size_t row) { return phi_[4 * hidden_ + row]; }

 private:
  [[nodiscard]] double w1(std::size_t j) const { return phi_[j]; }
  [[nodiscard]] double b1(std::size_t j) const { return phi_[hidden_ + j]; }
  [[nodiscard]] double w2(std::size_t row, std::size_t j) const {
    return phi_[2 * hidden_ + row * hidden_ + j];
  }
  [[nodiscard]] double b2(std::size_t row) const { return phi_[4 * hidden_ + row]; }

  std::size_t hidden_;
  std::vector<double> phi_;
};

struct LocalObjective {
  /// −Σ_{i∈batch} (1/L) Σ_s [log p(x_i, z_is) − log q_{θ_i}(z_is)]
  double loss = 0.0;
  std::vector<double> grad;  // ∂loss/∂φ, exact for the frozen draws
  std::vector<ElboEstimate> local;  // per batch entry
  std::optional<DrawFailure> failure;  // index = dataset position

  [[nodiscard]] bool ok() const { return !failure.has_value(); }
};

/// Negated sum of local Monte Carlo ELBOs over `batch` with θ_i = Λ_φ(x_i).
/// Point i draws its noise from draw_key.substream(i), so a batch objective
/// is the index-ordered sum of the single-point objectives.
LocalObjective local_elbo_objective(const Dataset& ds, const Encoder& e, double alpha,
                                    double beta, std::span<const std::size_t> batch,
                                    std::size_t samples, RngState draw_key);

struct AmortizeConfig {
  std::size_t hidden = 16;
  std::size_t batch_size = 5;
  std::size_t samples = 32;  // L per local ELBO
  std::size_t epochs = 50;
  double step_size = 0.02;
  std::uint64_t seed = 0;
  std::size_t report_samples = 2000;
};

struct EpochRecord {
  std::size_t epoch;
  double mean_loss;  // per point, averaged over the epoch's batches
  double standard_error;  // MC error of mean_loss from the local estimates
};

struct PointReport {
  double x;
  double mu_pred;
  double sigma_pred;
  double mu_opt;
  double sigma_opt;
};

struct AmortizationReport {
  std::vector<PointReport> points;
  /// Σ_i [ELBO(θ_i*) − ELBO(Λ_φ(x_i))] with the closed-form ELBO.
  double gap_closed_form;
  /// Same sum estimated by Monte Carlo with independent draws per term.
  double gap_mc;
  double gap_mc_se;
  double median_abs_mu_error;
};

/// Per-point optimum of the local ELBO: σ* = 1/sqrt(α+1),
/// μ* = log((α+1)/(β+x)) − σ*²/2.
VariationalParams local_optimum(double alpha, double beta, double x);

AmortizationReport amortization_report(const Dataset& ds, const Encoder& e, double alpha,
                                       double beta, std::size_t samples, RngState seed);

struct TrainResult {
  Encoder encoder;
  std::vector<EpochRecord> trace;
  bool diverged = false;
  std::string message;
  AmortizationReport report;
};

/// Minibatch SGD on φ; each update uses the batch-mean gradient.
TrainResult train_amortized(const Dataset& ds, double alpha, double beta,
                            const AmortizeConfig& cfg);

}  // namespace pvi
