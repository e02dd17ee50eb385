// pvi: command-line front end for the variational inference engine.
//
//   pvi elbo-curve -o curve.csv
//   pvi fit --estimator reparam -o trace.csv
//   pvi gradcheck -o grads.csv
//   pvi amortize --generate 200 -o points.csv --curve loss.csv

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "output.hpp"
#include "pvi/amortize.hpp"
#include "pvi/estimators.hpp"
#include "pvi/model.hpp"
#include "pvi/optimize.hpp"
#include "pvi/stats.hpp"
#include "pvi/varfam.hpp"

namespace {

using nlohmann::json;
using pvi::cli::Format;
using pvi::cli::TableWriter;

struct Common {
  double alpha = 3.0;
  double beta = 1.0;
  double x_obs = 1.0;
  std::uint64_t seed = 0;
  std::string output;
  Format format = Format::Csv;
};

struct CurveOpts {
  double sigma = 0.5;
  double mu_min = -0.5;
  double mu_max = 1.5;
  double mu_step = 0.05;
  std::vector<double> mu;
};

struct FitOpts {
  std::string family = "lognormal";
  std::string estimator = "reparam";
  double mu0 = 0.0;
  double sigma0 = 1.0;
  double step_size = 0.05;
  std::size_t max_steps = 5000;
  std::size_t samples = 256;
  double tolerance = 1e-8;
  std::string schedule;
  bool drop_score_term = false;
};

struct GradOpts {
  std::vector<double> mu{0.0};
  std::vector<double> sigma{0.5};
  std::size_t samples = 1000;
  std::size_t reps = 100;
};

struct AmortizeOpts {
  std::string data;
  std::size_t generate = 0;
  pvi::AmortizeConfig cfg;
  std::string curve;
};

class CliError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

const std::map<std::string, Format> kFormats{{"csv", Format::Csv},
                                             {"jsonl", Format::JsonLines},
                                             {"json-lines", Format::JsonLines}};

const std::map<std::string, pvi::EstimatorKind> kEstimators{
    {"score", pvi::EstimatorKind::ScoreFunction},
    {"reparam", pvi::EstimatorKind::Reparameterized},
    {"closed-form", pvi::EstimatorKind::ClosedForm}};

void add_common(CLI::App* sub, Common& c, bool with_model) {
  if (with_model) {
    sub->add_option("--alpha", c.alpha, "Gamma prior shape")->capture_default_str();
    sub->add_option("--beta", c.beta, "Gamma prior rate")->capture_default_str();
    sub->add_option("--x-obs", c.x_obs, "Exponential observation")->capture_default_str();
  } else {
    sub->add_option("--alpha", c.alpha, "Gamma prior shape")->capture_default_str();
    sub->add_option("--beta", c.beta, "Gamma prior rate")->capture_default_str();
  }
  sub->add_option("--seed", c.seed, "Random seed")->capture_default_str();
  sub->add_option("-o,--output", c.output, "Output file")->required();
  sub->add_option("--format", c.format, "csv or jsonl")
      ->transform(CLI::CheckedTransformer(kFormats, CLI::ignore_case))
      ->option_text("csv|jsonl [csv]");
}

json meta(const std::string& command, const Common& c, json config) {
  config["alpha"] = c.alpha;
  config["beta"] = c.beta;
  config["seed"] = c.seed;
  config["format"] = c.format == Format::Csv ? "csv" : "jsonl";
  return {{"command", command}, {"config", config}, {"seed", c.seed}, {"version", PVI_VERSION}};
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CliError("cannot open output file " + path);
  return out;
}

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw CliError(std::string(name) + " must be positive");
  }
}

pvi::VariationalFamily parse_family(const std::string& name) {
  if (name == "lognormal") return pvi::VariationalFamily::lognormal();
  if (name == "normal") return pvi::VariationalFamily::normal();
  throw CliError("unknown family " + name);
}

int run_elbo_curve(const Common& c, const CurveOpts& o) {
  require_positive(o.sigma, "--sigma");
  std::vector<double> grid = o.mu;
  if (grid.empty()) {
    require_positive(o.mu_step, "--mu-step");
    if (o.mu_max < o.mu_min) throw CliError("--mu-max must be >= --mu-min");
    const auto n = static_cast<std::size_t>(std::floor((o.mu_max - o.mu_min) / o.mu_step + 1e-9)) + 1;
    for (std::size_t k = 0; k < n; ++k) {
      // round away accumulation noise such as -0.19999999999999996
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.12g", o.mu_min + static_cast<double>(k) * o.mu_step);
      grid.push_back(std::strtod(buf, nullptr));
    }
  }
  const pvi::GammaExpModel model(c.alpha, c.beta, c.x_obs);
  const auto curve = pvi::elbo_curve(model, pvi::VariationalFamily::lognormal(), o.sigma, grid);

  auto out = open_output(c.output);
  json cfg{{"x_obs", c.x_obs}, {"sigma", o.sigma}, {"mu", grid}};
  TableWriter w(out, c.format, {"mu", "elbo", "kl", "log_evidence"}, meta("elbo-curve", c, cfg));
  for (const auto& p : curve) w.row({p.mu, p.elbo, p.kl, p.log_evidence});
  std::cout << "elbo-curve: " << curve.size() << " points, log_evidence="
            << pvi::cli::format_real(model.log_evidence()) << ", seed=" << c.seed << '\n';
  return 0;
}

int run_fit(const Common& c, const FitOpts& o) {
  const pvi::GammaExpModel model(c.alpha, c.beta, c.x_obs);
  const pvi::VariationalFamily family = parse_family(o.family);
  pvi::require_support_compatible(family, model);
  const pvi::EstimatorKind estimator = kEstimators.at(o.estimator);

  pvi::OptConfig cfg;
  cfg.step_size = o.step_size;
  cfg.max_steps = o.max_steps;
  cfg.tolerance = o.tolerance;
  cfg.grad_estimator = estimator;
  cfg.samples_per_step = o.samples;
  cfg.seed = {c.seed, 0};
  cfg.retain_score_term = !o.drop_score_term;
  if (o.schedule == "constant") {
    cfg.schedule = pvi::StepSchedule::Constant;
  } else if (o.schedule == "inverse-sqrt") {
    cfg.schedule = pvi::StepSchedule::InverseSqrt;
  } else if (!o.schedule.empty()) {
    throw CliError("unknown schedule " + o.schedule);
  }
  const auto theta0 = pvi::VariationalParams::from_loc_scale(o.mu0, o.sigma0);
  const pvi::OptResult res = pvi::ascend(model, family, theta0, cfg);

  auto out = open_output(c.output);
  json jcfg{{"x_obs", c.x_obs},
            {"family", o.family},
            {"estimator", o.estimator},
            {"mu0", o.mu0},
            {"sigma0", o.sigma0},
            {"step_size", o.step_size},
            {"max_steps", o.max_steps},
            {"samples", o.samples},
            {"tolerance", o.tolerance},
            {"schedule", cfg.schedule.value_or(pvi::default_schedule(estimator)) ==
                                 pvi::StepSchedule::Constant
                             ? "constant"
                             : "inverse-sqrt"},
            {"retain_score_term", !o.drop_score_term}};
  TableWriter w(out, c.format,
                {"step", "mu", "sigma", "elbo", "grad_mu", "grad_sigma", "se_mu", "se_sigma"},
                meta("fit", c, jcfg));
  for (const auto& r : res.trace) {
    w.row({static_cast<long long>(r.step), r.theta.loc(), r.theta.scale(), r.elbo,
           r.gradient.grad[0], r.gradient.grad[1], r.gradient.standard_error[0],
           r.gradient.standard_error[1]});
  }
  const double final_elbo =
      pvi::elbo_closed_form(c.alpha, c.beta, c.x_obs, res.theta.loc(), res.theta.scale());
  std::cout << "fit: status=" << pvi::to_string(res.status) << " steps=" << res.steps
            << " mu=" << pvi::cli::format_real(res.theta.loc())
            << " sigma=" << pvi::cli::format_real(res.theta.scale())
            << " elbo=" << pvi::cli::format_real(final_elbo) << " seed=" << c.seed << '\n';
  if (res.status == pvi::OptStatus::Failed) {
    std::cerr << "error: optimization failed: " << res.message << '\n';
    return 1;
  }
  return 0;
}

int run_gradcheck(const Common& c, const GradOpts& o) {
  if (o.reps < 2) throw CliError("--reps must be at least 2");
  if (o.samples < 1) throw CliError("--samples must be at least 1");
  const pvi::GammaExpModel model(c.alpha, c.beta, c.x_obs);
  const auto family = pvi::VariationalFamily::lognormal();

  auto out = open_output(c.output);
  json jcfg{{"x_obs", c.x_obs}, {"mu", o.mu}, {"sigma", o.sigma},
            {"samples", o.samples}, {"reps", o.reps}};
  TableWriter w(out, c.format,
                {"mu", "sigma", "component", "truth", "score_mean", "score_se", "score_var",
                 "reparam_mean", "reparam_se", "reparam_var"},
                meta("gradcheck", c, jcfg));
  for (double mu : o.mu) {
    for (double sigma : o.sigma) {
      const auto theta = pvi::VariationalParams::from_loc_scale(mu, sigma);
      const pvi::Vec2 truth = pvi::elbo_closed_form_grad(c.alpha, c.beta, c.x_obs, mu, sigma);
      std::array<pvi::RunningStats, 2> score;
      std::array<pvi::RunningStats, 2> reparam;
      for (std::size_t r = 0; r < o.reps; ++r) {
        // paired: both estimators see the same noise in repetition r
        const pvi::EstimatorConfig ec{o.samples, {c.seed, r}};
        const auto gs = pvi::grad_score_function(model, family, theta, ec);
        const auto gr = pvi::grad_reparam(model, family, theta, ec);
        if (!gs.ok() || !gr.ok()) throw CliError("gradient estimate failed");
        for (int k = 0; k < 2; ++k) {
          score[k].push(gs.grad[k]);
          reparam[k].push(gr.grad[k]);
        }
      }
      for (int k = 0; k < 2; ++k) {
        w.row({mu, sigma, std::string(k == 0 ? "mu" : "sigma"), truth[k], score[k].mean(),
               score[k].standard_error(), score[k].variance(), reparam[k].mean(),
               reparam[k].standard_error(), reparam[k].variance()});
      }
    }
  }
  std::cout << "gradcheck: " << o.mu.size() * o.sigma.size() << " parameter points, "
            << o.reps << " repetitions of L=" << o.samples << ", seed=" << c.seed << '\n';
  return 0;
}

int run_amortize(const Common& c, AmortizeOpts o) {
  if (o.data.empty() == (o.generate == 0)) {
    throw CliError("give exactly one of --data FILE or --generate N");
  }
  const pvi::Dataset ds = o.data.empty()
                              ? pvi::generate_dataset(c.alpha, c.beta, o.generate, {c.seed, 100})
                              : pvi::load_dataset(o.data);
  o.cfg.seed = c.seed;
  o.cfg.batch_size = std::min(o.cfg.batch_size, ds.size());
  const pvi::TrainResult res = pvi::train_amortized(ds, c.alpha, c.beta, o.cfg);
  if (res.diverged) throw CliError("training diverged: " + res.message);

  json jcfg{{"data", o.data.empty() ? json(nullptr) : json(o.data)},
            {"generate", o.generate},
            {"n", ds.size()},
            {"hidden", o.cfg.hidden},
            {"batch", o.cfg.batch_size},
            {"samples", o.cfg.samples},
            {"epochs", o.cfg.epochs},
            {"step_size", o.cfg.step_size},
            {"report_samples", o.cfg.report_samples}};
  {
    auto out = open_output(c.output);
    TableWriter w(out, c.format, {"x", "mu_pred", "sigma_pred", "mu_opt", "sigma_opt"},
                  meta("amortize", c, jcfg));
    for (const auto& p : res.report.points) {
      w.row({p.x, p.mu_pred, p.sigma_pred, p.mu_opt, p.sigma_opt});
    }
  }
  if (!o.curve.empty()) {
    auto out = open_output(o.curve);
    TableWriter w(out, c.format, {"epoch", "mean_loss", "se"}, meta("amortize", c, jcfg));
    for (const auto& e : res.trace) {
      w.row({static_cast<long long>(e.epoch), e.mean_loss, e.standard_error});
    }
  }
  const auto& r = res.report;
  std::cout << "amortize: n=" << ds.size() << " epochs=" << res.trace.size()
            << " median_abs_mu_error=" << pvi::cli::format_real(r.median_abs_mu_error)
            << " gap=" << pvi::cli::format_real(r.gap_mc)
            << " gap_se=" << pvi::cli::format_real(r.gap_mc_se)
            << " gap_closed_form=" << pvi::cli::format_real(r.gap_closed_form)
            << " seed=" << c.seed << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parametric variational inference: ELBO curves, fitting, gradient checks, "
               "amortized inference"};
  app.require_subcommand(1);

  Common common;
  CurveOpts curve;
  FitOpts fit;
  GradOpts grad;
  AmortizeOpts amort;

  auto* c_curve = app.add_subcommand("elbo-curve", "ELBO, KL and log evidence over a mu grid");
  add_common(c_curve, common, true);
  c_curve->add_option("--sigma", curve.sigma, "Fixed lognormal sigma")->capture_default_str();
  c_curve->add_option("--mu-min", curve.mu_min)->capture_default_str();
  c_curve->add_option("--mu-max", curve.mu_max)->capture_default_str();
  c_curve->add_option("--mu-step", curve.mu_step)->capture_default_str();
  c_curve->add_option("--mu", curve.mu, "Explicit mu values (overrides the grid)");

  auto* c_fit = app.add_subcommand("fit", "Maximize the ELBO by gradient ascent");
  add_common(c_fit, common, true);
  c_fit->add_option("--family", fit.family, "lognormal or normal")->capture_default_str();
  c_fit->add_option("--estimator", fit.estimator, "score, reparam or closed-form")
      ->check(CLI::IsMember(kEstimators))
      ->capture_default_str();
  c_fit->add_option("--mu0", fit.mu0)->capture_default_str();
  c_fit->add_option("--sigma0", fit.sigma0)->capture_default_str();
  c_fit->add_option("--step-size", fit.step_size)->capture_default_str();
  c_fit->add_option("--max-steps", fit.max_steps)->capture_default_str();
  c_fit->add_option("--samples", fit.samples, "Samples L per gradient")->capture_default_str();
  c_fit->add_option("--tolerance", fit.tolerance)->capture_default_str();
  c_fit->add_option("--schedule", fit.schedule, "constant or inverse-sqrt");
  c_fit->add_flag("--drop-score-term", fit.drop_score_term,
                  "Drop the zero-mean score term from the pathwise estimator");

  auto* c_grad = app.add_subcommand("gradcheck", "Compare gradient estimators to the exact gradient");
  add_common(c_grad, common, true);
  c_grad->add_option("--mu", grad.mu)->capture_default_str();
  c_grad->add_option("--sigma", grad.sigma)->capture_default_str();
  c_grad->add_option("--samples", grad.samples, "Samples L per estimate")->capture_default_str();
  c_grad->add_option("--reps", grad.reps, "Repetitions R")->capture_default_str();

  auto* c_am = app.add_subcommand("amortize", "Train an encoder on the factorized model");
  add_common(c_am, common, false);
  c_am->add_option("--data", amort.data, "Observations, one per line");
  c_am->add_option("--generate", amort.generate, "Simulate N observations instead");
  c_am->add_option("--hidden", amort.cfg.hidden)->capture_default_str();
  c_am->add_option("--batch", amort.cfg.batch_size)->capture_default_str();
  c_am->add_option("--samples", amort.cfg.samples)->capture_default_str();
  c_am->add_option("--epochs", amort.cfg.epochs)->capture_default_str();
  c_am->add_option("--step-size", amort.cfg.step_size)->capture_default_str();
  c_am->add_option("--report-samples", amort.cfg.report_samples)->capture_default_str();
  c_am->add_option("--curve", amort.curve, "Write the training curve here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (c_curve->parsed()) return run_elbo_curve(common, curve);
    if (c_fit->parsed()) return run_fit(common, fit);
    if (c_grad->parsed()) return run_gradcheck(common, grad);
    if (c_am->parsed()) return run_amortize(common, amort);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
