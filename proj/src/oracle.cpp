#include "pvi/oracle.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "pvi/varfam.hpp"

namespace pvi::oracle {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kScanLo = -60.0;
constexpr double kScanHi = 60.0;
constexpr int kScanPoints = 2401;

using LogWeight = std::function<double(double)>;
using Integrand = std::function<double(double)>;

struct Window {
  double lo;
  double hi;
  double peak;
};

Window locate(const LogWeight& log_w, const QuadratureSpec& spec) {
  const double step = (kScanHi - kScanLo) / (kScanPoints - 1);
  int best = -1;
  double best_val = -kInf;
  for (int i = 0; i < kScanPoints; ++i) {
    const double v = log_w(kScanLo + step * i);
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  if (best < 0 || !std::isfinite(best_val)) {
    throw std::runtime_error("quadrature: integrand has no finite mass in the scan range");
  }

  // Golden-section refinement of the mode inside the neighbouring cells.
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = kScanLo + step * (best - 1);
  double b = kScanLo + step * (best + 1);
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = log_w(c);
  double fd = log_w(d);
  for (int it = 0; it < 80; ++it) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = log_w(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = log_w(d);
    }
  }
  double mode = 0.5 * (a + b);
  double peak = log_w(mode);
  if (!(peak >= best_val)) {
    mode = kScanLo + step * best;
    peak = best_val;
  }

  const double h = 1e-3;
  const double curv = (log_w(mode + h) - 2.0 * peak + log_w(mode - h)) / (h * h);
  const double sd = (std::isfinite(curv) && curv < 0.0) ? 1.0 / std::sqrt(-curv) : 1.0;

  double lo = mode - 12.0 * sd;
  double hi = mode + 12.0 * sd;
  for (int it = 0; it < 100000 && log_w(lo) > peak - spec.tail_drop; ++it) lo -= sd;
  for (int it = 0; it < 100000 && log_w(hi) > peak - spec.tail_drop; ++it) hi += sd;
  return {lo, hi, peak};
}

/// Simpson sums of exp(log_w − peak) and exp(log_w − peak)·g over the window.
struct SimpsonSums {
  double mass;
  double weighted;
};

SimpsonSums simpson(const LogWeight& log_w, const Integrand* g, const Window& w,
                    std::size_t n) {
  const double h = (w.hi - w.lo) / static_cast<double>(n);
  SimpsonSums s{0.0, 0.0};
  for (std::size_t i = 0; i <= n; ++i) {
    const double y = w.lo + h * static_cast<double>(i);
    const double lw = log_w(y);
    if (lw == -kInf) continue;
    const double coef = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    const double e = std::exp(lw - w.peak);
    s.mass += coef * e;
    if (g != nullptr && e > 0.0) s.weighted += coef * e * (*g)(y);
  }
  s.mass *= h / 3.0;
  s.weighted *= h / 3.0;
  return s;
}

void check_spec(const QuadratureSpec& spec) {
  if (spec.nodes < 64 || spec.nodes % 2 != 0) {
    throw std::invalid_argument("QuadratureSpec: nodes must be even and >= 64");
  }
}

[[noreturn]] void not_converged(const char* what, double prev, double cur) {
  std::ostringstream os;
  os.precision(17);
  os << what << ": node doubling did not converge (last values " << prev << ", "
     << cur << ")";
  throw std::runtime_error(os.str());
}

/// log ∫ exp(log_w) with relative convergence on the mass.
double log_mass(const LogWeight& log_w, const QuadratureSpec& spec) {
  check_spec(spec);
  const Window w = locate(log_w, spec);
  double prev = simpson(log_w, nullptr, w, spec.nodes).mass;
  for (std::size_t n = spec.nodes * 2; n <= spec.max_nodes; n *= 2) {
    const double cur = simpson(log_w, nullptr, w, n).mass;
    if (std::abs(cur - prev) < spec.tolerance * std::abs(cur)) {
      return w.peak + std::log(cur);
    }
    prev = cur;
  }
  not_converged("quad_log_evidence", prev, simpson(log_w, nullptr, w, spec.max_nodes).mass);
}

/// ∫ e^{log_w} g / ∫ e^{log_w}, absolute convergence on the ratio.
double expectation(const LogWeight& log_w, const Integrand& g,
                   const QuadratureSpec& spec, const char* what) {
  check_spec(spec);
  const Window w = locate(log_w, spec);
  auto ratio = [&](std::size_t n) {
    const SimpsonSums s = simpson(log_w, &g, w, n);
    return s.weighted / s.mass;
  };
  double prev = ratio(spec.nodes);
  for (std::size_t n = spec.nodes * 2; n <= spec.max_nodes; n *= 2) {
    const double cur = ratio(n);
    if (std::abs(cur - prev) < spec.tolerance * std::max(1.0, std::abs(cur))) {
      return cur;
    }
    prev = cur;
  }
  not_converged(what, prev, ratio(spec.max_nodes));
}

/// Change of variables z = z(y) with log |dz/dy|.
struct Transform {
  QuadTransform kind;

  [[nodiscard]] double z(double y) const {
    return kind == QuadTransform::Log ? std::exp(y) : y;
  }
  [[nodiscard]] double log_jacobian(double y) const {
    return kind == QuadTransform::Log ? y : 0.0;
  }
};

}  // namespace

QuadratureSpec QuadratureSpec::for_support(const Interval& support) {
  QuadratureSpec spec;
  spec.transform = support == Interval::positive() ? QuadTransform::Log
                                                   : QuadTransform::Identity;
  return spec;
}

double quad_log_evidence(const Model& m) {
  return quad_log_evidence(m, QuadratureSpec::for_support(m.latent_support()));
}

double quad_log_evidence(const Model& m, const QuadratureSpec& spec) {
  const Transform t{spec.transform};
  const LogWeight log_w = [&](double y) {
    const double z = t.z(y);
    if (!std::isfinite(z)) return -kInf;
    return m.log_joint(z) + t.log_jacobian(y);
  };
  return log_mass(log_w, spec);
}

double quad_kl(const Distribution& q, const Distribution& p) {
  return quad_kl(q, p, QuadratureSpec::for_support(q.support()));
}

double quad_kl(const Distribution& q, const Distribution& p,
               const QuadratureSpec& spec) {
  if (!q.support().subset_of(p.support())) {
    throw SupportMismatch(std::string(q.name()) + " support " +
                          q.support().to_string() + " is not contained in " +
                          std::string(p.name()) + " support " +
                          p.support().to_string() + ": " +
                          std::string(kSupportRule));
  }
  const Transform t{spec.transform};
  const LogWeight log_w = [&](double y) {
    const double z = t.z(y);
    if (!std::isfinite(z)) return -kInf;
    return log_pdf(q, z) + t.log_jacobian(y);
  };
  const Integrand log_ratio = [&](double y) {
    const double z = t.z(y);
    return log_pdf(q, z) - log_pdf(p, z);
  };
  return expectation(log_w, log_ratio, spec, "quad_kl");
}

double quad_elbo(const Model& m, const Distribution& q) {
  return quad_elbo(m, q, QuadratureSpec::for_support(q.support()));
}

double quad_elbo(const Model& m, const Distribution& q, const QuadratureSpec& spec) {
  const Transform t{spec.transform};
  const LogWeight log_w = [&](double y) {
    const double z = t.z(y);
    if (!std::isfinite(z)) return -kInf;
    return log_pdf(q, z) + t.log_jacobian(y);
  };
  const Integrand integrand = [&](double y) {
    const double z = t.z(y);
    return m.log_joint(z) - log_pdf(q, z);
  };
  return expectation(log_w, integrand, spec, "quad_elbo");
}

std::vector<double> finite_diff_grad(const ScalarFn& f, std::span<const double> theta,
                                     double rel_step) {
  std::vector<double> point(theta.begin(), theta.end());
  std::vector<double> grad(point.size());
  for (std::size_t j = 0; j < point.size(); ++j) {
    const double h = rel_step * std::max(1.0, std::abs(theta[j]));
    point[j] = theta[j] + h;
    const double up = f(point);
    point[j] = theta[j] - h;
    const double down = f(point);
    point[j] = theta[j];
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw std::domain_error("finite_diff_grad: non-finite evaluation near theta");
    }
    grad[j] = (up - down) / (2.0 * h);
  }
  return grad;
}

}  // namespace pvi::oracle
