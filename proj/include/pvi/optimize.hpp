#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pvi/estimators.hpp"
#include "pvi/model.hpp"
#include "pvi/varfam.hpp"

namespace pvi {

enum class StepSchedule {
  Constant,
  /// η_k = η / sqrt(k + 1)
  InverseSqrt,
};

/// Constant for the exact gradient, inverse-sqrt decay for MC estimators.
StepSchedule default_schedule(EstimatorKind kind);

struct OptConfig {
  double step_size = 0.05;
  std::size_t max_steps = 5000;
  std::optional<StepSchedule> schedule;  // default_schedule() when unset
  /// Stop once the smoothed gradient norm (unconstrained frame) drops below.
  double tolerance = 1e-8;
  double smoothing = 0.9;
  EstimatorKind grad_estimator = EstimatorKind::ClosedForm;
  std::size_t samples_per_step = 256;
  RngState seed{};
  bool retain_score_term = true;
};

struct TraceRecord {
  std::size_t step;
  VariationalParams theta;
  double elbo;
  GradientEstimate gradient;  // (∂μ, ∂σ) frame
};

enum class OptStatus { Converged, MaxSteps, Failed };

std::string_view to_string(OptStatus status);

struct OptResult {
  VariationalParams theta;
  std::vector<TraceRecord> trace;
  OptStatus status;
  std::size_t steps;  // parameter updates performed
  std::string message;
};

/// Gradient ascent on the ELBO in (μ, log σ):
///   u_{k+1} = u_k + η_k ∇_u ELBO(u_k)
/// Step k draws its Monte Carlo noise from cfg.seed.substream(k).
OptResult ascend(const Model& m, const VariationalFamily& f,
                 const VariationalParams& theta0, const OptConfig& cfg);

struct CurvePoint {
  double mu;
  double elbo;
  double kl;
  double log_evidence;
};

/// evidence_gap over a μ grid at fixed σ.
std::vector<CurvePoint> elbo_curve(const GammaExpModel& m, const VariationalFamily& f,
                                   double sigma, std::span<const double> mu_grid);

}  // namespace pvi
