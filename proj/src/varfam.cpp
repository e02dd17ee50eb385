#include "pvi/varfam.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace pvi {

namespace {
const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);
}

VariationalParams VariationalParams::from_loc_scale(double loc, double scale) {
  if (!std::isfinite(loc)) {
    throw std::invalid_argument("VariationalParams: loc must be finite");
  }
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw std::invalid_argument("VariationalParams: scale must be positive");
  }
  return {loc, scale, std::log(scale)};
}

VariationalParams VariationalParams::from_unconstrained(const Vec2& u) {
  if (!std::isfinite(u[0]) || !std::isfinite(u[1])) {
    throw std::invalid_argument("VariationalParams: non-finite unconstrained value");
  }
  const double scale = std::exp(u[1]);
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw std::invalid_argument("VariationalParams: log scale out of range");
  }
  return {u[0], scale, u[1]};
}

Vec2 to_unconstrained_gradient(const VariationalParams& theta, const Vec2& grad) {
  return {grad[0], grad[1] * theta.scale()};
}

Interval VariationalFamily::support() const {
  return kind_ == FamilyKind::Normal ? Interval::real_line() : Interval::positive();
}

std::string_view VariationalFamily::name() const {
  return kind_ == FamilyKind::Normal ? "normal" : "lognormal";
}

Distribution VariationalFamily::distribution(const VariationalParams& theta) const {
  if (kind_ == FamilyKind::Normal) {
    return Distribution(Normal{theta.loc(), theta.scale()});
  }
  return Distribution(Lognormal{theta.loc(), theta.scale()});
}

double q_log_density(const VariationalFamily& f, const VariationalParams& theta,
                     double z) {
  return log_pdf(f.distribution(theta), z);
}

double q_log_density_grad_z(const VariationalFamily& f,
                            const VariationalParams& theta, double z) {
  const double s2 = theta.scale() * theta.scale();
  if (f.kind() == FamilyKind::Normal) return -(z - theta.loc()) / s2;
  if (!(z > 0.0)) {
    throw std::domain_error("q_log_density_grad_z: z outside lognormal support");
  }
  return -(1.0 + (std::log(z) - theta.loc()) / s2) / z;
}

Vec2 q_score(const VariationalFamily& f, const VariationalParams& theta, double z) {
  if (!std::isfinite(z) || !f.support().contains(z)) {
    throw std::domain_error("q_score: z outside the family support " +
                            f.support().to_string());
  }
  // Lognormal is the Normal form in log z; the -log z term has no θ dependence.
  const double y = f.kind() == FamilyKind::Normal ? z : std::log(z);
  const double sigma = theta.scale();
  const double d = y - theta.loc();
  const double s2 = sigma * sigma;
  return {d / s2, (d * d / s2 - 1.0) / sigma};
}

double reparam_sample(const VariationalFamily& f, const VariationalParams& theta,
                      NoiseDraw noise) {
  const double y = theta.loc() + theta.scale() * noise.eps;
  return f.kind() == FamilyKind::Normal ? y : std::exp(y);
}

Vec2 reparam_jacobian(const VariationalFamily& f, const VariationalParams& theta,
                      NoiseDraw noise) {
  if (f.kind() == FamilyKind::Normal) return {1.0, noise.eps};
  const double z = reparam_sample(f, theta, noise);
  return {z, noise.eps * z};
}

SupportCheck support_compatible(const VariationalFamily& f, const Model& m) {
  const Interval fs = f.support();
  const Interval ms = m.latent_support();
  if (fs.subset_of(ms)) return {};
  return {false, std::string(f.name()) + " family support " + fs.to_string() +
                     " is not contained in the latent support " + ms.to_string() +
                     " of " + m.describe() + ": " + std::string(kSupportRule)};
}

void require_support_compatible(const VariationalFamily& f, const Model& m) {
  if (auto check = support_compatible(f, m); !check) {
    throw SupportMismatch(check.report);
  }
}

}  // namespace pvi
