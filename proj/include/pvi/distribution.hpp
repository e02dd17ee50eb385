#pragma once

#include <string_view>
#include <variant>
#include <vector>

#include "pvi/interval.hpp"
#include "pvi/rng.hpp"

namespace pvi {

struct Exponential {
  double rate;
};

struct Gamma {
  double shape;
  double rate;
};

struct Normal {
  double mean;
  double stddev;
};

/// log X ~ Normal(logmean, logstddev²).
struct Lognormal {
  double logmean;
  double logstddev;
};

/// Univariate density with validated parameters. Construction throws
/// std::invalid_argument for non-positive rate/shape/stddev or non-finite
/// parameters.
class Distribution {
 public:
  using Params = std::variant<Exponential, Gamma, Normal, Lognormal>;

  Distribution(Exponential p);
  Distribution(Gamma p);
  Distribution(Normal p);
  Distribution(Lognormal p);

  [[nodiscard]] const Params& params() const { return params_; }
  [[nodiscard]] Interval support() const;
  [[nodiscard]] std::string_view name() const;

  template <class T>
  [[nodiscard]] const T* as() const {
    return std::get_if<T>(&params_);
  }

 private:
  Params params_;
};

/// Natural-log density. Returns -inf outside the support; throws
/// std::domain_error for non-finite v.
double log_pdf(const Distribution& d, double v);

/// One draw using the caller's generator.
double draw(const Distribution& d, Rng& rng);

/// n i.i.d. draws from the stream identified by `state`.
std::vector<double> sample(const Distribution& d, RngState state, std::size_t n);

double mean(const Distribution& d);

/// Marsaglia-Tsang squeeze method for shape >= 1; for shape < 1 a draw at
/// shape + 1 is boosted by U^(1/shape). Rate scaling applied last.
double draw_gamma(double shape, double rate, Rng& rng);

}  // namespace pvi
