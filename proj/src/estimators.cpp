#include "pvi/estimators.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "pvi/oracle.hpp"
#include "pvi/special.hpp"
#include "pvi/stats.hpp"

namespace pvi {

namespace {

void require_samples(const EstimatorConfig& cfg) {
  if (cfg.samples < 1) {
    throw std::invalid_argument("EstimatorConfig: sample count L must be >= 1");
  }
}

void require_closed_form_args(double alpha, double beta, double x, double sigma) {
  if (!(alpha > 0.0) || !(beta > 0.0) || !(x >= 0.0) || !(sigma > 0.0) ||
      !std::isfinite(alpha) || !std::isfinite(beta) || !std::isfinite(x) ||
      !std::isfinite(sigma)) {
    throw std::invalid_argument(
        "elbo_closed_form: need alpha, beta, sigma > 0 and x >= 0");
  }
}

DrawFailure non_finite(std::size_t i, double z, double value) {
  std::ostringstream os;
  os.precision(17);
  os << "draw " << i << " at z=" << z << " gave a non-finite integrand (" << value
     << ")";
  return {i, z, os.str()};
}

}  // namespace

std::string_view to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::ScoreFunction:
      return "score";
    case EstimatorKind::Reparameterized:
      return "reparam";
    case EstimatorKind::ClosedForm:
      return "closed-form";
  }
  return "unknown";
}

NoiseDraw noise_for_sample(const EstimatorConfig& cfg, std::size_t i) {
  Rng rng(cfg.seed.substream(i));
  return {rng.standard_normal()};
}

ElboEstimate elbo_mc(const Model& m, const VariationalFamily& f,
                     const VariationalParams& theta, const EstimatorConfig& cfg) {
  require_samples(cfg);
  require_support_compatible(f, m);
  RunningStats stats;
  for (std::size_t i = 0; i < cfg.samples; ++i) {
    const double z = reparam_sample(f, theta, noise_for_sample(cfg, i));
    const double term = m.log_joint(z) - q_log_density(f, theta, z);
    if (!std::isfinite(term)) {
      return {0.0, 0.0, cfg.samples, non_finite(i, z, term)};
    }
    stats.push(term);
  }
  return {stats.mean(), stats.standard_error(), cfg.samples, std::nullopt};
}

double elbo_closed_form(double alpha, double beta, double x, double mu, double sigma) {
  require_closed_form_args(alpha, beta, x, sigma);
  if (!std::isfinite(mu)) throw std::invalid_argument("elbo_closed_form: mu must be finite");
  const double log_const =
      alpha * std::log(beta) + 0.5 * std::log(2.0 * std::numbers::pi) - log_gamma(alpha);
  return log_const + (alpha + 1.0) * mu -
         (beta + x) * std::exp(mu + 0.5 * sigma * sigma) + std::log(sigma) + 0.5;
}

Vec2 elbo_closed_form_grad(double alpha, double beta, double x, double mu,
                           double sigma) {
  require_closed_form_args(alpha, beta, x, sigma);
  if (!std::isfinite(mu)) throw std::invalid_argument("elbo_closed_form_grad: mu must be finite");
  const double mean_term = (beta + x) * std::exp(mu + 0.5 * sigma * sigma);
  return {(alpha + 1.0) - mean_term, -mean_term * sigma + 1.0 / sigma};
}

ScoreSample score_function_sample(const Model& m, const VariationalFamily& f,
                                  const VariationalParams& theta, NoiseDraw noise) {
  const double z = reparam_sample(f, theta, noise);
  const double integrand = m.log_joint(z) - q_log_density(f, theta, z);
  const Vec2 weight = f.support().contains(z)
                          ? q_score(f, theta, z)
                          : Vec2{std::nan(""), std::nan("")};
  return {z, integrand, weight};
}

GradientEstimate grad_score_function(const Model& m, const VariationalFamily& f,
                                     const VariationalParams& theta,
                                     const EstimatorConfig& cfg) {
  require_samples(cfg);
  require_support_compatible(f, m);
  RunningStats mu_stats;
  RunningStats sigma_stats;
  RunningStats elbo_stats;
  GradientEstimate out;
  out.kind = EstimatorKind::ScoreFunction;
  out.samples = cfg.samples;
  for (std::size_t i = 0; i < cfg.samples; ++i) {
    const ScoreSample s = score_function_sample(m, f, theta, noise_for_sample(cfg, i));
    if (!std::isfinite(s.integrand)) {
      out.failure = non_finite(i, s.z, s.integrand);
      return out;
    }
    mu_stats.push(s.integrand * s.weight[0]);
    sigma_stats.push(s.integrand * s.weight[1]);
    elbo_stats.push(s.integrand);
  }
  out.grad = {mu_stats.mean(), sigma_stats.mean()};
  out.standard_error = {mu_stats.standard_error(), sigma_stats.standard_error()};
  out.elbo = elbo_stats.mean();
  return out;
}

Vec2 reparam_gradient_sample(const Model& m, const VariationalFamily& f,
                             const VariationalParams& theta, NoiseDraw noise,
                             bool retain_score_term) {
  const double z = reparam_sample(f, theta, noise);
  const double dz = m.log_joint_grad_z(z) - q_log_density_grad_z(f, theta, z);
  const Vec2 jac = reparam_jacobian(f, theta, noise);
  Vec2 g{dz * jac[0], dz * jac[1]};
  if (retain_score_term) {
    const Vec2 score = q_score(f, theta, z);
    g[0] -= score[0];
    g[1] -= score[1];
  }
  return g;
}

GradientEstimate grad_reparam(const Model& m, const VariationalFamily& f,
                              const VariationalParams& theta,
                              const EstimatorConfig& cfg) {
  require_samples(cfg);
  if (!f.reparameterizable()) {
    throw std::invalid_argument("grad_reparam: family has no reparameterization path");
  }
  require_support_compatible(f, m);
  RunningStats mu_stats;
  RunningStats sigma_stats;
  RunningStats elbo_stats;
  GradientEstimate out;
  out.kind = EstimatorKind::Reparameterized;
  out.samples = cfg.samples;
  for (std::size_t i = 0; i < cfg.samples; ++i) {
    const NoiseDraw noise = noise_for_sample(cfg, i);
    const double z = reparam_sample(f, theta, noise);
    const double integrand = m.log_joint(z) - q_log_density(f, theta, z);
    if (!std::isfinite(integrand)) {
      out.failure = non_finite(i, z, integrand);
      return out;
    }
    const Vec2 g = reparam_gradient_sample(m, f, theta, noise, cfg.retain_score_term);
    mu_stats.push(g[0]);
    sigma_stats.push(g[1]);
    elbo_stats.push(integrand);
  }
  out.grad = {mu_stats.mean(), sigma_stats.mean()};
  out.standard_error = {mu_stats.standard_error(), sigma_stats.standard_error()};
  out.elbo = elbo_stats.mean();
  return out;
}

GradientEstimate pathwise_gradient(const std::function<double(double)>& f_grad_z,
                                   const VariationalFamily& f, const VariationalParams& theta,
                                   const EstimatorConfig& cfg) {
  require_samples(cfg);
  RunningStats mu_stats;
  RunningStats sigma_stats;
  GradientEstimate out;
  out.kind = EstimatorKind::Reparameterized;
  out.samples = cfg.samples;
  for (std::size_t i = 0; i < cfg.samples; ++i) {
    const NoiseDraw noise = noise_for_sample(cfg, i);
    const double z = reparam_sample(f, theta, noise);
    const double dz = f_grad_z(z);
    if (!std::isfinite(dz)) {
      out.failure = non_finite(i, z, dz);
      return out;
    }
    const Vec2 jac = reparam_jacobian(f, theta, noise);
    mu_stats.push(dz * jac[0]);
    sigma_stats.push(dz * jac[1]);
  }
  out.grad = {mu_stats.mean(), sigma_stats.mean()};
  out.standard_error = {mu_stats.standard_error(), sigma_stats.standard_error()};
  out.elbo = std::nan("");
  return out;
}

GradientEstimate grad_closed_form(const GammaExpModel& m, const VariationalParams& theta) {
  GradientEstimate out;
  out.kind = EstimatorKind::ClosedForm;
  out.grad = elbo_closed_form_grad(m.alpha(), m.beta(), m.x(), theta.loc(), theta.scale());
  out.elbo = elbo_closed_form(m.alpha(), m.beta(), m.x(), theta.loc(), theta.scale());
  return out;
}

EvidenceGap evidence_gap(const GammaExpModel& m, const VariationalFamily& f,
                         const VariationalParams& theta) {
  if (f.kind() != FamilyKind::Lognormal) {
    require_support_compatible(f, m);
    throw std::invalid_argument("evidence_gap: closed-form ELBO needs the lognormal family");
  }
  return {elbo_closed_form(m.alpha(), m.beta(), m.x(), theta.loc(), theta.scale()),
          oracle::quad_kl(f.distribution(theta), m.analytic_posterior()),
          m.log_evidence()};
}

}  // namespace pvi
