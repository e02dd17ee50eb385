#pragma once

#include <functional>
#include <string>

#include "pvi/distribution.hpp"
#include "pvi/interval.hpp"

namespace pvi {

/// Joint density log p(x, z) over a scalar latent z with the observation
/// baked in. Implementations return -inf for z outside latent_support().
class Model {
 public:
  virtual ~Model() = default;

  virtual double log_joint(double z) const = 0;
  virtual double log_joint_grad_z(double z) const = 0;
  virtual Interval latent_support() const = 0;
  virtual std::string describe() const = 0;
};

/// Exponential(λ) likelihood for one observation x with a Gamma(α, β) prior
/// on λ. The posterior is Gamma(α + 1, β + x).
class GammaExpModel final : public Model {
 public:
  GammaExpModel(double alpha, double beta, double x);

  double log_joint(double lambda) const override;
  /// α/λ − (x + β); throws std::domain_error for λ <= 0.
  double log_joint_grad_z(double lambda) const override;
  Interval latent_support() const override { return Interval::positive(); }
  std::string describe() const override;

  [[nodiscard]] Distribution analytic_posterior() const;
  /// log(α β^α) − (α + 1) log(β + x)
  [[nodiscard]] double log_evidence() const;

  [[nodiscard]] double alpha() const { return alpha_; }
  [[nodiscard]] double beta() const { return beta_; }
  [[nodiscard]] double x() const { return x_; }

 private:
  double alpha_;
  double beta_;
  double x_;
};

/// Adapter for ad-hoc models given as callables; used for targets other
/// than the conjugate example.
class FunctionModel final : public Model {
 public:
  using Fn = std::function<double(double)>;

  FunctionModel(Fn log_joint, Fn grad_z, Interval support, std::string name);

  double log_joint(double z) const override;
  double log_joint_grad_z(double z) const override;
  Interval latent_support() const override { return support_; }
  std::string describe() const override { return name_; }

 private:
  Fn log_joint_;
  Fn grad_z_;
  Interval support_;
  std::string name_;
};

}  // namespace pvi
