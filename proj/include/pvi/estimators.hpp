#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>

#include "pvi/model.hpp"
#include "pvi/rng.hpp"
#include "pvi/varfam.hpp"

namespace pvi {

struct EstimatorConfig {
  std::size_t samples = 1000;  // L
  RngState seed{};
  /// Keep the direct −∇_θ log q_θ(z) term in the pathwise estimator. It has
  /// zero mean; dropping it only changes the variance.
  bool retain_score_term = true;
};

/// Draw i of an estimator uses noise from seed.substream(i), so results do
/// not depend on evaluation order.
NoiseDraw noise_for_sample(const EstimatorConfig& cfg, std::size_t i);

/// An integrand that was not finite; the estimate is unusable.
struct DrawFailure {
  std::size_t index;
  double z;
  std::string message;
};

struct ElboEstimate {
  double value = 0.0;
  double standard_error = 0.0;
  std::size_t samples = 0;
  std::optional<DrawFailure> failure;

  [[nodiscard]] bool ok() const { return !failure.has_value(); }
};

enum class EstimatorKind { ScoreFunction, Reparameterized, ClosedForm };

std::string_view to_string(EstimatorKind kind);

struct GradientEstimate {
  Vec2 grad{0.0, 0.0};  // (∂μ, ∂σ)
  Vec2 standard_error{0.0, 0.0};
  std::size_t samples = 0;
  EstimatorKind kind = EstimatorKind::ClosedForm;
  /// ELBO estimated from the same draws (exact for ClosedForm, NaN for
  /// pathwise_gradient of a general f).
  double elbo = 0.0;
  std::optional<DrawFailure> failure;

  [[nodiscard]] bool ok() const { return !failure.has_value(); }
};

/// Monte Carlo ELBO: mean of log p(x, z_i) − log q_θ(z_i) over L draws.
/// Throws SupportMismatch before sampling if the family is incompatible.
ElboEstimate elbo_mc(const Model& m, const VariationalFamily& f,
                     const VariationalParams& theta, const EstimatorConfig& cfg);

/// Closed-form ELBO of a Lognormal(μ, σ²) posterior approximation for the
/// Gamma-Exponential model:
///   log(β^α √(2π) / Γ(α)) + (α+1)μ − (β+x) e^{μ+σ²/2} + log σ + 1/2
double elbo_closed_form(double alpha, double beta, double x, double mu, double sigma);

/// (∂/∂μ, ∂/∂σ) of elbo_closed_form.
Vec2 elbo_closed_form_grad(double alpha, double beta, double x, double mu,
                           double sigma);

/// Per-draw pieces of the score-function estimator.
struct ScoreSample {
  double z;
  double integrand;  // log p(x, z) − log q_θ(z)
  Vec2 weight;       // ∇_θ log q_θ(z)
};

ScoreSample score_function_sample(const Model& m, const VariationalFamily& f,
                                  const VariationalParams& theta, NoiseDraw noise);

/// (1/L) Σ (log p(x, z_i) − log q_θ(z_i)) ∇_θ log q_θ(z_i)
GradientEstimate grad_score_function(const Model& m, const VariationalFamily& f,
                                     const VariationalParams& theta,
                                     const EstimatorConfig& cfg);

/// Total θ-derivative of log p(x, g_θ(ε)) − log q_θ(g_θ(ε)) at fixed ε:
///   (∂_z log p − ∂_z log q) · ∂g/∂θ − ∇_θ log q_θ(z)
/// The last term is omitted when retain_score_term is false.
Vec2 reparam_gradient_sample(const Model& m, const VariationalFamily& f,
                             const VariationalParams& theta, NoiseDraw noise,
                             bool retain_score_term = true);

GradientEstimate grad_reparam(const Model& m, const VariationalFamily& f,
                              const VariationalParams& theta,
                              const EstimatorConfig& cfg);

/// Pathwise gradient of E_q[f(z)] for an arbitrary differentiable f:
///   (1/L) Σ f'(g_θ(ε_i)) ∂g/∂θ
/// grad_reparam is the special case f = log p(x, ·) − log q_θ plus the
/// direct θ-dependence of log q_θ.
GradientEstimate pathwise_gradient(const std::function<double(double)>& f_grad_z,
                                   const VariationalFamily& f, const VariationalParams& theta,
                                   const EstimatorConfig& cfg);

/// Exact gradient for the Gamma-Exponential model with a Lognormal family.
GradientEstimate grad_closed_form(const GammaExpModel& m, const VariationalParams& theta);

struct EvidenceGap {
  double elbo;
  double kl;
  double log_evidence;
};

/// Closed-form ELBO, quadrature KL against the analytic posterior, and the
/// analytic log evidence. Only the Lognormal family has a closed form.
EvidenceGap evidence_gap(const GammaExpModel& m, const VariationalFamily& f,
                         const VariationalParams& theta);

}  // namespace pvi
