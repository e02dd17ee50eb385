#include "pvi/amortize.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "pvi/distribution.hpp"
#include "pvi/stats.hpp"

namespace pvi {

namespace {

// Independent streams derived from the training seed.
constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kShuffleStream = 2;
constexpr std::uint64_t kStepStream = 3;
constexpr std::uint64_t kReportStream = 4;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

/// Fisher-Yates with our own generator so the permutation is portable.
void shuffle(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace

Dataset::Dataset(std::vector<double> observations) : x_(std::move(observations)) {
  if (x_.empty()) throw DatasetError("dataset must contain at least one observation");
  for (std::size_t i = 0; i < x_.size(); ++i) {
    if (!(x_[i] > 0.0) || !std::isfinite(x_[i])) {
      throw DatasetError("observation " + std::to_string(i + 1) +
                         " must be positive and finite");
    }
  }
}

Dataset read_dataset(std::istream& in, const std::string& source) {
  std::vector<double> xs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty()) continue;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size()) {
      throw DatasetError(source + ":" + std::to_string(lineno) + ": not a decimal number: '" +
                         t + "'");
    }
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw DatasetError(source + ":" + std::to_string(lineno) +
                         ": observation must be positive, got '" + t + "'");
    }
    xs.push_back(v);
  }
  if (xs.empty()) throw DatasetError(source + ": no observations");
  return Dataset(std::move(xs));
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open dataset file " + path.string());
  return read_dataset(in, path.string());
}

Dataset generate_dataset(double alpha, double beta, std::size_t n, RngState seed) {
  if (n == 0) throw DatasetError("generate_dataset: n must be at least 1");
  const Distribution prior(Gamma{alpha, beta});
  Rng rng(seed);
  std::vector<double> xs;
  xs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double lambda = draw(prior, rng);
    double x = draw(Distribution(Exponential{lambda}), rng);
    xs.push_back(std::max(x, std::numeric_limits<double>::denorm_min()));
  }
  return Dataset(std::move(xs));
}

Encoder::Encoder(std::size_t hidden) : hidden_(hidden), phi_(4 * hidden + 2, 0.0) {
  if (hidden < 1) throw std::invalid_argument("Encoder: hidden width must be >= 1");
}

Encoder Encoder::initialized(std::size_t hidden, RngState seed) {
  Encoder e(hidden);
  Rng rng(seed);
  // fan-in of the hidden layer is the scalar input
  for (std::size_t j = 0; j < hidden; ++j) e.w1(j) = 2.0 * rng.uniform() - 1.0;
  for (std::size_t j = 0; j < hidden; ++j) e.b1(j) = 2.0 * rng.uniform() - 1.0;
  return e;
}

VariationalParams Encoder::forward(double x) const {
  if (!std::isfinite(x)) throw std::domain_error("Encoder::forward: non-finite input");
  Vec2 out{b2(0), b2(1)};
  for (std::size_t j = 0; j < hidden_; ++j) {
    const double h = std::tanh(w1(j) * x + b1(j));
    out[0] += w2(0, j) * h;
    out[1] += w2(1, j) * h;
  }
  return VariationalParams::from_unconstrained(out);
}

void Encoder::backward(double x, const Vec2& d_out, std::span<double> grad) const {
  const std::size_t H = hidden_;
  for (std::size_t j = 0; j < H; ++j) {
    const double h = std::tanh(w1(j) * x + b1(j));
    grad[2 * H + j] += d_out[0] * h;
    grad[3 * H + j] += d_out[1] * h;
    const double dh = d_out[0] * w2(0, j) + d_out[1] * w2(1, j);
    const double da = dh * (1.0 - h * h);
    grad[j] += da * x;
    grad[H + j] += da;
  }
  grad[4 * H] += d_out[0];
  grad[4 * H + 1] += d_out[1];
}

LocalObjective local_elbo_objective(const Dataset& ds, const Encoder& e, double alpha,
                                    double beta, std::span<const std::size_t> batch,
                                    std::size_t samples, RngState draw_key) {
  if (samples < 1) throw std::invalid_argument("local_elbo_objective: L must be >= 1");
  const VariationalFamily family = VariationalFamily::lognormal();
  LocalObjective out;
  out.grad.assign(e.parameters().size(), 0.0);
  out.local.reserve(batch.size());
  for (std::size_t i : batch) {
    if (i >= ds.size()) throw std::out_of_range("local_elbo_objective: batch index out of range");
    const double x = ds[i];
    const GammaExpModel model(alpha, beta, x);
    const VariationalParams theta = e.forward(x);
    const EstimatorConfig cfg{samples, draw_key.substream(i), true};

    RunningStats elbo;
    Vec2 g{0.0, 0.0};
    for (std::size_t s = 0; s < samples; ++s) {
      const NoiseDraw noise = noise_for_sample(cfg, s);
      const double z = reparam_sample(family, theta, noise);
      const double term = model.log_joint(z) - q_log_density(family, theta, z);
      if (!std::isfinite(term)) {
        out.failure = DrawFailure{i, z,
                                  "local ELBO of point " + std::to_string(i) +
                                      " is not finite at draw " + std::to_string(s)};
        return out;
      }
      elbo.push(term);
      const Vec2 gs = reparam_gradient_sample(model, family, theta, noise, true);
      g[0] += gs[0];
      g[1] += gs[1];
    }
    const double inv_l = 1.0 / static_cast<double>(samples);
    const Vec2 gu = to_unconstrained_gradient(theta, {g[0] * inv_l, g[1] * inv_l});
    e.backward(x, {-gu[0], -gu[1]}, out.grad);
    out.loss -= elbo.mean();
    out.local.push_back({elbo.mean(), elbo.standard_error(), samples, std::nullopt});
  }
  return out;
}

VariationalParams local_optimum(double alpha, double beta, double x) {
  const double sigma = 1.0 / std::sqrt(alpha + 1.0);
  return VariationalParams::from_loc_scale(
      std::log((alpha + 1.0) / (beta + x)) - 0.5 * sigma * sigma, sigma);
}

AmortizationReport amortization_report(const Dataset& ds, const Encoder& e, double alpha,
                                       double beta, std::size_t samples, RngState seed) {
  const VariationalFamily family = VariationalFamily::lognormal();
  AmortizationReport r{{}, 0.0, 0.0, 0.0, 0.0};
  double var = 0.0;
  std::vector<double> abs_err;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const double x = ds[i];
    const GammaExpModel model(alpha, beta, x);
    const VariationalParams pred = e.forward(x);
    const VariationalParams opt = local_optimum(alpha, beta, x);
    r.points.push_back({x, pred.loc(), pred.scale(), opt.loc(), opt.scale()});
    abs_err.push_back(std::abs(pred.loc() - opt.loc()));

    r.gap_closed_form += elbo_closed_form(alpha, beta, x, opt.loc(), opt.scale()) -
                         elbo_closed_form(alpha, beta, x, pred.loc(), pred.scale());
    const RngState point = seed.substream(i);
    const ElboEstimate at_opt = elbo_mc(model, family, opt, {samples, point.substream(0)});
    const ElboEstimate at_pred = elbo_mc(model, family, pred, {samples, point.substream(1)});
    r.gap_mc += at_opt.value - at_pred.value;
    var += at_opt.standard_error * at_opt.standard_error +
           at_pred.standard_error * at_pred.standard_error;
  }
  r.gap_mc_se = std::sqrt(var);
  const auto mid = abs_err.begin() + static_cast<std::ptrdiff_t>(abs_err.size() / 2);
  std::nth_element(abs_err.begin(), mid, abs_err.end());
  if (abs_err.size() % 2 == 1) {
    r.median_abs_mu_error = *mid;
  } else {
    const double upper = *mid;
    const double lower = *std::max_element(abs_err.begin(), mid);
    r.median_abs_mu_error = 0.5 * (lower + upper);
  }
  return r;
}

TrainResult train_amortized(const Dataset& ds, double alpha, double beta,
                            const AmortizeConfig& cfg) {
  if (cfg.hidden < 1) throw std::invalid_argument("train_amortized: hidden width must be >= 1");
  if (cfg.batch_size < 1 || cfg.batch_size > ds.size()) {
    throw std::invalid_argument("train_amortized: batch size must be in [1, N]");
  }
  if (cfg.samples < 1) throw std::invalid_argument("train_amortized: L must be >= 1");
  if (!(cfg.step_size > 0.0)) throw std::invalid_argument("train_amortized: step size must be positive");

  TrainResult result{Encoder::initialized(cfg.hidden, {cfg.seed, kInitStream}), {}, false, {}, {}};
  Encoder& enc = result.encoder;
  Rng shuffle_rng({cfg.seed, kShuffleStream});
  const RngState step_root{cfg.seed, kStepStream};

  std::vector<std::size_t> order(ds.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs && !result.diverged; ++epoch) {
    shuffle(order, shuffle_rng);
    double loss_sum = 0.0;
    double loss_var = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const std::span<const std::size_t> batch(order.data() + start, end - start);
      LocalObjective obj;
      try {
        obj = local_elbo_objective(ds, enc, alpha, beta, batch, cfg.samples,
                                   step_root.substream(step++));
      } catch (const std::exception& e) {
        result.diverged = true;
        result.message = e.what();
        break;
      }
      const double scale = 1.0 / static_cast<double>(batch.size());
      if (!obj.ok() || !std::isfinite(obj.loss)) {
        result.diverged = true;
        result.message = obj.failure ? obj.failure->message : "loss is not finite";
        break;
      }
      auto phi = enc.parameters();
      bool finite = true;
      for (std::size_t k = 0; k < phi.size(); ++k) {
        phi[k] -= cfg.step_size * scale * obj.grad[k];
        finite = finite && std::isfinite(phi[k]);
      }
      if (!finite) {
        result.diverged = true;
        result.message = "encoder parameters became non-finite at step " + std::to_string(step);
        break;
      }
      loss_sum += obj.loss * scale;
      for (const auto& l : obj.local) {
        loss_var += l.standard_error * l.standard_error * scale * scale;
      }
      ++batches;
    }
    if (batches > 0) {
      const double nb = static_cast<double>(batches);
      result.trace.push_back({epoch, loss_sum / nb, std::sqrt(loss_var) / nb});
    }
  }
  if (!result.diverged) {
    result.report = amortization_report(ds, enc, alpha, beta, cfg.report_samples,
                                        {cfg.seed, kReportStream});
  }
  return result;
}

}  // namespace pvi
