#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <string_view>

#include "pvi/distribution.hpp"
#include "pvi/interval.hpp"
#include "pvi/model.hpp"

namespace pvi {

using Vec2 = std::array<double, 2>;

/// Location/scale pair θ = (μ, σ). The optimizer works on the unconstrained
/// view (μ, log σ); everything else reports in (μ, σ).
class VariationalParams {
 public:
  static VariationalParams from_loc_scale(double loc, double scale);
  static VariationalParams from_unconstrained(const Vec2& u);

  [[nodiscard]] double loc() const { return loc_; }
  [[nodiscard]] double scale() const { return scale_; }
  [[nodiscard]] double log_scale() const { return log_scale_; }
  [[nodiscard]] Vec2 unconstrained() const { return {loc_, log_scale_}; }

 private:
  VariationalParams(double loc, double scale, double log_scale)
      : loc_(loc), scale_(scale), log_scale_(log_scale) {}

  double loc_;
  double scale_;
  double log_scale_;
};

/// Maps a (∂μ, ∂σ) gradient to (∂μ, ∂log σ).
Vec2 to_unconstrained_gradient(const VariationalParams& theta, const Vec2& grad);

enum class FamilyKind { Lognormal, Normal };

class VariationalFamily {
 public:
  explicit VariationalFamily(FamilyKind kind) : kind_(kind) {}

  static VariationalFamily lognormal() { return VariationalFamily(FamilyKind::Lognormal); }
  static VariationalFamily normal() { return VariationalFamily(FamilyKind::Normal); }

  [[nodiscard]] FamilyKind kind() const { return kind_; }
  [[nodiscard]] Interval support() const;
  [[nodiscard]] bool reparameterizable() const { return true; }
  [[nodiscard]] std::string_view name() const;
  [[nodiscard]] Distribution distribution(const VariationalParams& theta) const;

 private:
  FamilyKind kind_;
};

/// Base noise ε ~ N(0, 1) for the reparameterization path.
struct NoiseDraw {
  double eps;
};

double q_log_density(const VariationalFamily& f, const VariationalParams& theta,
                     double z);

/// ∂/∂z log q_θ(z), needed by the pathwise chain rule.
double q_log_density_grad_z(const VariationalFamily& f,
                            const VariationalParams& theta, double z);

/// (∂/∂μ, ∂/∂σ) log q_θ(z). Throws std::domain_error when z is outside
/// the family support.
Vec2 q_score(const VariationalFamily& f, const VariationalParams& theta, double z);

/// g_θ(ε): μ + σε for Normal, exp(μ + σε) for Lognormal.
double reparam_sample(const VariationalFamily& f, const VariationalParams& theta,
                      NoiseDraw noise);

/// (∂z/∂μ, ∂z/∂σ) of g_θ(ε) at fixed ε.
Vec2 reparam_jacobian(const VariationalFamily& f, const VariationalParams& theta,
                      NoiseDraw noise);

/// Message used whenever a family can put mass where the posterior cannot.
inline constexpr std::string_view kSupportRule =
    "q(z) needs to be zero whenever p(z|x) is zero";

struct SupportCheck {
  bool ok = true;
  std::string report;

  explicit operator bool() const { return ok; }
};

/// ok iff support(f) ⊆ latent_support(m); otherwise a report naming both.
SupportCheck support_compatible(const VariationalFamily& f, const Model& m);

class SupportMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Throws SupportMismatch carrying the support_compatible report.
void require_support_compatible(const VariationalFamily& f, const Model& m);

}  // namespace pvi
