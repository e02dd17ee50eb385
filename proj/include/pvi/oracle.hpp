#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "pvi/distribution.hpp"
#include "pvi/interval.hpp"
#include "pvi/model.hpp"

namespace pvi::oracle {

enum class QuadTransform {
  /// y = log z, maps (0, inf) onto the real line.
  Log,
  Identity,
};

/// Composite Simpson quadrature with node doubling. The integration window
/// in the transformed variable is located automatically: at least 12
/// curvature-based standard deviations either side of the mode, widened
/// until the log-integrand has dropped by `tail_drop`.
struct QuadratureSpec {
  QuadTransform transform = QuadTransform::Log;
  std::size_t nodes = 64;
  std::size_t max_nodes = std::size_t{1} << 22;
  double tolerance = 1e-10;
  double tail_drop = 50.0;

  static QuadratureSpec for_support(const Interval& support);
};

/// log ∫ exp(log_joint(z)) dz. Throws std::runtime_error if refinement
/// fails to converge, reporting the last two values.
double quad_log_evidence(const Model& m);
double quad_log_evidence(const Model& m, const QuadratureSpec& spec);

/// KL(q ‖ p) = ∫ q log(q / p). Throws SupportMismatch when q can put mass
/// outside support(p).
double quad_kl(const Distribution& q, const Distribution& p);
double quad_kl(const Distribution& q, const Distribution& p,
               const QuadratureSpec& spec);

/// ∫ q(z) [log p(x, z) − log q(z)] dz
double quad_elbo(const Model& m, const Distribution& q);
double quad_elbo(const Model& m, const Distribution& q, const QuadratureSpec& spec);

using ScalarFn = std::function<double(std::span<const double>)>;

/// Central differences with h_j = rel_step · max(1, |θ_j|).
std::vector<double> finite_diff_grad(const ScalarFn& f, std::span<const double> theta,
                                     double rel_step = 1e-5);

}  // namespace pvi::oracle
