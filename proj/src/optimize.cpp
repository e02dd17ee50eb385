#include "pvi/optimize.hpp"

#include <cmath>
#include <stdexcept>

namespace pvi {

StepSchedule default_schedule(EstimatorKind kind) {
  return kind == EstimatorKind::ClosedForm ? StepSchedule::Constant
                                           : StepSchedule::InverseSqrt;
}

std::string_view to_string(OptStatus status) {
  switch (status) {
    case OptStatus::Converged:
      return "converged";
    case OptStatus::MaxSteps:
      return "max-steps";
    case OptStatus::Failed:
      return "failed";
  }
  return "unknown";
}

namespace {

GradientEstimate estimate(const Model& m, const VariationalFamily& f,
                          const VariationalParams& theta, const OptConfig& cfg,
                          std::size_t step) {
  EstimatorConfig ec{cfg.samples_per_step, cfg.seed.substream(step),
                     cfg.retain_score_term};
  switch (cfg.grad_estimator) {
    case EstimatorKind::ScoreFunction:
      return grad_score_function(m, f, theta, ec);
    case EstimatorKind::Reparameterized:
      return grad_reparam(m, f, theta, ec);
    case EstimatorKind::ClosedForm:
      break;
  }
  return grad_closed_form(static_cast<const GammaExpModel&>(m), theta);
}

}  // namespace

OptResult ascend(const Model& m, const VariationalFamily& f,
                 const VariationalParams& theta0, const OptConfig& cfg) {
  if (!(cfg.step_size > 0.0) || !std::isfinite(cfg.step_size)) {
    throw std::invalid_argument("ascend: step size must be positive");
  }
  if (cfg.max_steps < 1) throw std::invalid_argument("ascend: max_steps must be >= 1");
  if (!(cfg.tolerance > 0.0)) throw std::invalid_argument("ascend: tolerance must be positive");
  require_support_compatible(f, m);
  if (cfg.grad_estimator == EstimatorKind::ClosedForm &&
      (dynamic_cast<const GammaExpModel*>(&m) == nullptr ||
       f.kind() != FamilyKind::Lognormal)) {
    throw std::invalid_argument(
        "ascend: closed-form gradient needs the Gamma-Exponential model and lognormal family");
  }
  const StepSchedule schedule = cfg.schedule.value_or(default_schedule(cfg.grad_estimator));

  OptResult result{theta0, {}, OptStatus::MaxSteps, 0, {}};
  VariationalParams theta = theta0;
  double smoothed = 0.0;
  for (std::size_t k = 0;; ++k) {
    const GradientEstimate g = estimate(m, f, theta, cfg, k);
    result.trace.push_back({k, theta, g.elbo, g});
    result.theta = theta;
    if (!g.ok() || !std::isfinite(g.grad[0]) || !std::isfinite(g.grad[1])) {
      result.status = OptStatus::Failed;
      result.message = g.failure ? g.failure->message : "non-finite gradient";
      return result;
    }
    const Vec2 gu = to_unconstrained_gradient(theta, g.grad);
    const double norm = std::hypot(gu[0], gu[1]);
    smoothed = k == 0 ? norm : cfg.smoothing * smoothed + (1.0 - cfg.smoothing) * norm;
    if (smoothed < cfg.tolerance) {
      result.status = OptStatus::Converged;
      return result;
    }
    if (k == cfg.max_steps) return result;

    const double eta = schedule == StepSchedule::Constant
                           ? cfg.step_size
                           : cfg.step_size / std::sqrt(static_cast<double>(k) + 1.0);
    const Vec2 u = theta.unconstrained();
    try {
      theta = VariationalParams::from_unconstrained({u[0] + eta * gu[0], u[1] + eta * gu[1]});
    } catch (const std::invalid_argument& e) {
      result.status = OptStatus::Failed;
      result.message = e.what();
      return result;
    }
    result.steps = k + 1;
  }
}

std::vector<CurvePoint> elbo_curve(const GammaExpModel& m, const VariationalFamily& f,
                                   double sigma, std::span<const double> mu_grid) {
  std::vector<CurvePoint> out;
  out.reserve(mu_grid.size());
  for (double mu : mu_grid) {
    const EvidenceGap gap = evidence_gap(m, f, VariationalParams::from_loc_scale(mu, sigma));
    out.push_back({mu, gap.elbo, gap.kl, gap.log_evidence});
  }
  return out;
}

}  // namespace pvi
