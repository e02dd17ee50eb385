#include "pvi/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>

#include "pvi/special.hpp"

namespace pvi {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw std::invalid_argument(std::string(what) +
                                " must be positive and finite, got " +
                                std::to_string(v));
  }
}

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) {
    throw std::invalid_argument(std::string(what) + " must be finite");
  }
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

double normal_log_pdf(double mean, double stddev, double v) {
  const double r = (v - mean) / stddev;
  return -0.5 * r * r - std::log(stddev) - kHalfLog2Pi;
}

}  // namespace

std::string Interval::to_string() const {
  auto end = [](double v) -> std::string {
    if (v == kInf) return "inf";
    if (v == -kInf) return "-inf";
    std::ostringstream os;
    os << v;
    return os.str();
  };
  return "(" + end(lo) + ", " + end(hi) + ")";
}

Distribution::Distribution(Exponential p) : params_(p) {
  require_positive(p.rate, "Exponential rate");
}

Distribution::Distribution(Gamma p) : params_(p) {
  require_positive(p.shape, "Gamma shape");
  require_positive(p.rate, "Gamma rate");
}

Distribution::Distribution(Normal p) : params_(p) {
  require_finite(p.mean, "Normal mean");
  require_positive(p.stddev, "Normal stddev");
}

Distribution::Distribution(Lognormal p) : params_(p) {
  require_finite(p.logmean, "Lognormal logmean");
  require_positive(p.logstddev, "Lognormal logstddev");
}

Interval Distribution::support() const {
  return std::holds_alternative<Normal>(params_) ? Interval::real_line()
                                                 : Interval::positive();
}

std::string_view Distribution::name() const {
  return std::visit(
      overloaded{[](const Exponential&) { return std::string_view("Exponential"); },
                 [](const Gamma&) { return std::string_view("Gamma"); },
                 [](const Normal&) { return std::string_view("Normal"); },
                 [](const Lognormal&) { return std::string_view("Lognormal"); }},
      params_);
}

double log_pdf(const Distribution& d, double v) {
  if (!std::isfinite(v)) {
    throw std::domain_error("log_pdf: evaluation point must be finite");
  }
  if (!d.support().contains(v)) return -kInf;
  return std::visit(
      overloaded{
          [v](const Exponential& p) { return std::log(p.rate) - p.rate * v; },
          [v](const Gamma& p) {
            return p.shape * std::log(p.rate) - log_gamma(p.shape) +
                   (p.shape - 1.0) * std::log(v) - p.rate * v;
          },
          [v](const Normal& p) { return normal_log_pdf(p.mean, p.stddev, v); },
          [v](const Lognormal& p) {
            const double lv = std::log(v);
            return normal_log_pdf(p.logmean, p.logstddev, lv) - lv;
          }},
      d.params());
}

double draw_gamma(double shape, double rate, Rng& rng) {
  if (shape < 1.0) {
    const double boosted = draw_gamma(shape + 1.0, 1.0, rng);
    const double v = boosted * std::pow(rng.uniform(), 1.0 / shape) / rate;
    // Tiny shapes can underflow; keep the draw inside (0, inf).
    return std::max(v, std::numeric_limits<double>::denorm_min());
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x;
    double v;
    do {
      x = rng.standard_normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v / rate;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v / rate;
  }
}

double draw(const Distribution& d, Rng& rng) {
  return std::visit(
      overloaded{
          [&rng](const Exponential& p) { return -std::log(rng.uniform()) / p.rate; },
          [&rng](const Gamma& p) { return draw_gamma(p.shape, p.rate, rng); },
          [&rng](const Normal& p) {
            return p.mean + p.stddev * rng.standard_normal();
          },
          [&rng](const Lognormal& p) {
            return std::exp(p.logmean + p.logstddev * rng.standard_normal());
          }},
      d.params());
}

std::vector<double> sample(const Distribution& d, RngState state, std::size_t n) {
  if (n == 0) throw std::invalid_argument("sample: n must be at least 1");
  Rng rng(state);
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(draw(d, rng));
  return out;
}

double mean(const Distribution& d) {
  return std::visit(
      overloaded{[](const Exponential& p) { return 1.0 / p.rate; },
                 [](const Gamma& p) { return p.shape / p.rate; },
                 [](const Normal& p) { return p.mean; },
                 [](const Lognormal& p) {
                   return std::exp(p.logmean + 0.5 * p.logstddev * p.logstddev);
                 }},
      d.params());
}

}  // namespace pvi
