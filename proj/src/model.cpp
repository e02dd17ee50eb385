#include "pvi/model.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace pvi {

GammaExpModel::GammaExpModel(double alpha, double beta, double x)
    : alpha_(alpha), beta_(beta), x_(x) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw std::invalid_argument("GammaExpModel: alpha must be positive");
  }
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw std::invalid_argument("GammaExpModel: beta must be positive");
  }
  if (!(x >= 0.0) || !std::isfinite(x)) {
    throw std::invalid_argument("GammaExpModel: observation must be >= 0");
  }
}

double GammaExpModel::log_joint(double lambda) const {
  if (!std::isfinite(lambda)) {
    throw std::domain_error("GammaExpModel::log_joint: non-finite latent");
  }
  if (lambda <= 0.0) return -std::numeric_limits<double>::infinity();
  const double log_lik = std::log(lambda) - lambda * x_;
  return log_lik + log_pdf(Distribution(Gamma{alpha_, beta_}), lambda);
}

double GammaExpModel::log_joint_grad_z(double lambda) const {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw std::domain_error(
        "GammaExpModel::log_joint_grad_z: latent must be positive");
  }
  return alpha_ / lambda - (x_ + beta_);
}

std::string GammaExpModel::describe() const {
  std::ostringstream os;
  os << "GammaExp(alpha=" << alpha_ << ", beta=" << beta_ << ", x=" << x_
     << ")";
  return os.str();
}

Distribution GammaExpModel::analytic_posterior() const {
  return Distribution(Gamma{alpha_ + 1.0, beta_ + x_});
}

double GammaExpModel::log_evidence() const {
  return std::log(alpha_) + alpha_ * std::log(beta_) -
         (alpha_ + 1.0) * std::log(beta_ + x_);
}

FunctionModel::FunctionModel(Fn log_joint, Fn grad_z, Interval support,
                             std::string name)
    : log_joint_(std::move(log_joint)),
      grad_z_(std::move(grad_z)),
      support_(support),
      name_(std::move(name)) {}

double FunctionModel::log_joint(double z) const {
  if (!std::isfinite(z)) {
    throw std::domain_error("FunctionModel::log_joint: non-finite latent");
  }
  if (!support_.contains(z)) return -std::numeric_limits<double>::infinity();
  return log_joint_(z);
}

double FunctionModel::log_joint_grad_z(double z) const {
  if (!support_.contains(z)) {
    throw std::domain_error("FunctionModel::log_joint_grad_z: latent outside support");
  }
  return grad_z_(z);
}

}  // namespace pvi
