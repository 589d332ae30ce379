#include "dpl/curve_models.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "dpl/errors.hpp"
#include "dpl/rng.hpp"

namespace dpl {

namespace {

constexpr double kBreakBaseFloor = 1e-12;

void require_positive_budget(double b) {
  if (!(b > 0.0)) {
    throw DomainError("budget must be > 0, got " + std::to_string(b));
  }
}

}  // namespace

std::string_view to_string(Formulation formulation) {
  switch (formulation) {
    case Formulation::power_law: return "power_law";
    case Formulation::candidate1: return "candidate1";
    case Formulation::candidate2: return "candidate2";
    case Formulation::broken_law: return "broken_law";
  }
  return "unknown";
}

Formulation parse_formulation(std::string_view name) {
  if (name == "power_law" || name == "pl" || name == "dpl") return Formulation::power_law;
  if (name == "candidate1") return Formulation::candidate1;
  if (name == "candidate2") return Formulation::candidate2;
  if (name == "broken_law") return Formulation::broken_law;
  throw std::invalid_argument("unknown formulation '" + std::string(name) + "'");
}

double eval_power_law(const PowerLawCoefficients& c, double b) {
  require_positive_budget(b);
  return c.alpha + c.beta * std::pow(b, -c.gamma);
}

double eval_candidate1(const ExtendedCoefficients& c, double b) {
  const double base = b + c.d;
  if (!(base > 0.0)) throw DomainError("candidate1: b + d must be > 0");
  return c.alpha - c.beta * std::pow(base, -c.gamma);
}

double eval_candidate2(const ExtendedCoefficients& c, double b) {
  const double base = c.e * b + c.d;
  if (!(base > 0.0)) throw DomainError("candidate2: e*b + d must be > 0");
  return c.alpha - c.beta * std::pow(base, -c.gamma);
}

double eval_broken_law(const ExtendedCoefficients& c, double b) {
  require_positive_budget(b);
  if (c.d == 0.0) throw DomainError("broken_law: division by zero (d == 0)");
  if (c.f == 0.0) throw DomainError("broken_law: division by zero (f == 0)");
  const double ratio = b / c.d;
  if (!(ratio > 0.0)) throw DomainError("broken_law: b/d must be > 0");
  const double base = std::max(1.0 + std::pow(ratio, 1.0 / c.f), kBreakBaseFloor);
  return c.alpha + c.beta * std::pow(b, -c.gamma) * std::pow(base, -c.c * c.f);
}

double evaluate(Formulation formulation, const ExtendedCoefficients& c, double b) {
  switch (formulation) {
    case Formulation::power_law: return eval_power_law(c.power_law(), b);
    case Formulation::candidate1: return eval_candidate1(c, b);
    case Formulation::candidate2: return eval_candidate2(c, b);
    case Formulation::broken_law: return eval_broken_law(c, b);
  }
  throw std::invalid_argument("unknown formulation");
}

std::vector<double> min_smooth(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("min_smooth: empty curve");
  std::vector<double> out(values.begin(), values.end());
  for (std::size_t i = 1; i < out.size(); ++i) out[i] = std::min(out[i - 1], out[i]);
  return out;
}

LearningCurve min_smooth(const LearningCurve& curve) {
  return LearningCurve{min_smooth(std::span<const double>(curve.values))};
}

// ---------------------------------------------------------------------------
// Per-curve fitting
//
// The optimizer works in a rescaled space: budgets are divided by the smallest
// observed budget and values by the largest |value|. Both maps are exact
// reparametrizations of every formulation (beta and d absorb the budget
// scale, alpha and beta the value scale), and they keep Adam's per-parameter
// step size meaningful whatever the curve length or loss magnitude.

namespace {

enum Param { kAlpha, kBeta, kGamma, kD, kE, kC, kF, kNumParams };
using Params = std::array<double, kNumParams>;

std::array<bool, kNumParams> active_params(Formulation formulation) {
  switch (formulation) {
    case Formulation::power_law: return {true, true, true, false, false, false, false};
    case Formulation::candidate1: return {true, true, true, true, false, false, false};
    case Formulation::candidate2: return {true, true, true, true, true, false, false};
    case Formulation::broken_law: return {true, true, true, true, false, true, true};
  }
  return {};
}

/// Value and gradient w.r.t. all seven parameters; NaN outside the domain.
double value_and_gradient(Formulation formulation, const Params& p, double b, Params& grad) {
  grad.fill(0.0);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  switch (formulation) {
    case Formulation::power_law: {
      const double u = std::pow(b, -p[kGamma]);
      grad[kAlpha] = 1.0;
      grad[kBeta] = u;
      grad[kGamma] = -p[kBeta] * std::log(b) * u;
      return p[kAlpha] + p[kBeta] * u;
    }
    case Formulation::candidate1:
    case Formulation::candidate2: {
      const double e = formulation == Formulation::candidate2 ? p[kE] : 1.0;
      const double q = e * b + p[kD];
      if (!(q > 0.0)) return nan;
      const double w = std::pow(q, -p[kGamma]);
      const double dq = p[kBeta] * p[kGamma] * w / q;  // d(value)/dq
      grad[kAlpha] = 1.0;
      grad[kBeta] = -w;
      grad[kGamma] = p[kBeta] * std::log(q) * w;
      grad[kD] = dq;
      if (formulation == Formulation::candidate2) grad[kE] = dq * b;
      return p[kAlpha] - p[kBeta] * w;
    }
    case Formulation::broken_law: {
      const double d = p[kD];
      const double f = p[kF];
      if (d == 0.0 || f == 0.0 || !(b / d > 0.0)) return nan;
      const double log_ratio = std::log(b / d);
      const double r = std::exp(log_ratio / f);
      const double t = std::max(1.0 + r, kBreakBaseFloor);
      const double log_t = std::log(t);
      const double brk = std::exp(-p[kC] * f * log_t);
      const double u = std::pow(b, -p[kGamma]);
      const double power_term = p[kBeta] * u * brk;
      grad[kAlpha] = 1.0;
      grad[kBeta] = u * brk;
      grad[kGamma] = -std::log(b) * power_term;
      grad[kC] = power_term * (-f * log_t);
      grad[kF] = power_term * (-p[kC] * log_t + p[kC] * r * log_ratio / (f * t));
      grad[kD] = power_term * (p[kC] * r / (t * d));
      return p[kAlpha] + power_term;
    }
  }
  return nan;
}

Params initial_params(Formulation formulation, Rng& rng) {
  Params p{};
  p[kAlpha] = uniform(rng, 0.0, 1.0);
  p[kBeta] = uniform(rng, 0.0, 1.0);
  p[kGamma] = uniform(rng, 0.0, 2.0);
  p[kD] = 0.0;
  p[kE] = 1.0;
  p[kC] = 0.0;
  p[kF] = 1.0;
  switch (formulation) {
    case Formulation::power_law:
      break;
    case Formulation::candidate1:
    case Formulation::candidate2:
      // alpha - beta * (.)^-gamma only decreases in b for beta < 0.
      p[kBeta] = -p[kBeta];
      p[kD] = uniform(rng, 0.0, 1.0);
      break;
    case Formulation::broken_law:
      p[kD] = uniform(rng, 0.5, 1.5);
      p[kC] = uniform(rng, 0.0, 0.5);
      break;
  }
  return p;
}

struct SingleFit {
  Params params{};
  double mae = std::numeric_limits<double>::infinity();
  int epochs = 0;
  bool converged = true;
};

SingleFit fit_once(std::span<const double> budgets, std::span<const double> values,
                   Formulation formulation, const FitConfig& config, std::uint64_t seed) {
  Rng rng(seed);
  Params p = initial_params(formulation, rng);
  const auto active = active_params(formulation);
  Params m{}, v{}, grad{}, point_grad{};
  const double n = static_cast<double>(values.size());

  SingleFit best;
  best.params = p;
  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    grad.fill(0.0);
    double loss = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double pred = value_and_gradient(formulation, p, budgets[i], point_grad);
      const double residual = pred - values[i];
      loss += std::abs(residual);
      const double sign = residual > 0.0 ? 1.0 : (residual < 0.0 ? -1.0 : 0.0);
      for (int k = 0; k < kNumParams; ++k) grad[k] += sign * point_grad[k] / n;
    }
    loss /= n;
    best.epochs = epoch + 1;
    if (!std::isfinite(loss)) {
      best.converged = false;
      break;
    }
    if (loss < best.mae) {
      best.mae = loss;
      best.params = p;
    }

    // cosine decay from learning_rate to final_learning_rate
    const double progress = config.max_epochs > 1 ? epoch / double(config.max_epochs - 1) : 1.0;
    const double lr = config.final_learning_rate +
                      0.5 * (config.learning_rate - config.final_learning_rate) *
                          (1.0 + std::cos(std::numbers::pi * progress));
    const double t = epoch + 1.0;
    const double c1 = 1.0 - std::pow(config.beta1, t);
    const double c2 = 1.0 - std::pow(config.beta2, t);
    for (int k = 0; k < kNumParams; ++k) {
      if (!active[k]) continue;
      m[k] = config.beta1 * m[k] + (1.0 - config.beta1) * grad[k];
      v[k] = config.beta2 * v[k] + (1.0 - config.beta2) * grad[k] * grad[k];
      p[k] -= lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + config.epsilon);
    }
  }
  // the last update is never scored inside the loop
  if (best.converged) {
    double loss = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      loss += std::abs(value_and_gradient(formulation, p, budgets[i], point_grad) - values[i]);
    }
    loss /= n;
    if (std::isfinite(loss) && loss < best.mae) {
      best.mae = loss;
      best.params = p;
    }
  }
  return best;
}

}  // namespace

FitResult fit_single_curve(std::span<const double> budgets, std::span<const double> values,
                           Formulation formulation, const FitConfig& config) {
  if (budgets.size() != values.size()) {
    throw ShapeError("fit_single_curve: budgets and values differ in length");
  }
  if (values.size() < 2) throw std::invalid_argument("fit_single_curve: need >= 2 points");
  for (double b : budgets) require_positive_budget(b);

  const double budget_scale = *std::min_element(budgets.begin(), budgets.end());
  double value_scale = 0.0;
  for (double y : values) value_scale = std::max(value_scale, std::abs(y));
  if (value_scale == 0.0 || !std::isfinite(value_scale)) value_scale = 1.0;

  std::vector<double> scaled_b(budgets.size());
  std::vector<double> scaled_y(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    scaled_b[i] = budgets[i] / budget_scale;
    scaled_y[i] = values[i] / value_scale;
  }

  SingleFit best;
  bool any_converged = false;
  const int attempts = std::max(1, config.restarts);
  for (int attempt = 0; attempt < attempts; ++attempt) {
    SingleFit fit = fit_once(scaled_b, scaled_y, formulation, config,
                             derive_seed(config.seed, static_cast<std::uint64_t>(attempt)));
    if (fit.mae < best.mae || attempt == 0) {
      best = fit;
    }
    any_converged = any_converged || fit.converged;
  }

  const Params& p = best.params;
  ExtendedCoefficients out;
  out.gamma = p[kGamma];
  out.alpha = p[kAlpha] * value_scale;
  out.beta = p[kBeta] * value_scale;
  out.d = p[kD];
  out.e = p[kE];
  out.c = p[kC];
  out.f = p[kF];
  // undo the budget rescale: b^-g = s^-g (b/s)^-g, b/s + d~ = (b + s d~)/s
  switch (formulation) {
    case Formulation::power_law:
      out.beta *= std::pow(budget_scale, p[kGamma]);
      out.d = 0.0;
      out.e = 1.0;
      out.c = 0.0;
      out.f = 1.0;
      break;
    case Formulation::candidate1:
    case Formulation::candidate2:
    case Formulation::broken_law:
      out.beta *= std::pow(budget_scale, p[kGamma]);
      out.d = p[kD] * budget_scale;
      break;
  }

  FitResult result;
  result.coefficients = out;
  result.train_mae = best.mae * value_scale;
  result.epochs = best.epochs;
  result.converged = best.converged && any_converged && std::isfinite(best.mae);
  return result;
}

FitResult fit_single_curve(std::span<const double> observed, std::size_t max_budget,
                           Formulation formulation, const FitConfig& config) {
  if (max_budget == 0) throw std::invalid_argument("fit_single_curve: max_budget must be > 0");
  if (observed.size() > max_budget) {
    throw ShapeError("fit_single_curve: more observations than max_budget");
  }
  std::vector<double> budgets(observed.size());
  for (std::size_t i = 0; i < observed.size(); ++i) {
    budgets[i] = static_cast<double>(i + 1) / static_cast<double>(max_budget);
  }
  return fit_single_curve(budgets, observed, formulation, config);
}

void to_json(nlohmann::json& j, const PowerLawCoefficients& c) {
  j = nlohmann::json{{"alpha", c.alpha}, {"beta", c.beta}, {"gamma", c.gamma}};
}

void from_json(const nlohmann::json& j, PowerLawCoefficients& c) {
  j.at("alpha").get_to(c.alpha);
  j.at("beta").get_to(c.beta);
  j.at("gamma").get_to(c.gamma);
}

void to_json(nlohmann::json& j, const ExtendedCoefficients& c) {
  j = nlohmann::json{{"alpha", c.alpha}, {"beta", c.beta}, {"gamma", c.gamma}, {"d", c.d},
                     {"e", c.e},         {"c", c.c},       {"f", c.f}};
}

void from_json(const nlohmann::json& j, ExtendedCoefficients& c) {
  j.at("alpha").get_to(c.alpha);
  j.at("beta").get_to(c.beta);
  j.at("gamma").get_to(c.gamma);
  c.d = j.value("d", 0.0);
  c.e = j.value("e", 1.0);
  c.c = j.value("c", 0.0);
  c.f = j.value("f", 1.0);
}

}  // namespace dpl
