#pragma once

// Parametric learning-curve formulations.
//
// Every function here takes a *normalized* budget b = step / b_max in (0, 1].
// Curves are loss-oriented: lower is better.

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace dpl {

struct PowerLawCoefficients {
  double alpha = 0.0;  // asymptotic loss
  double beta = 0.0;   // scale
  double gamma = 0.0;  // decay exponent
};

/// Coefficients for the shifted / scaled / broken variants. Defaults make
/// every variant well-defined: d = 0 (no shift), e = 1 (no budget scale),
/// c = 0 (no break), f = 1.
struct ExtendedCoefficients {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double d = 0.0;  // shift, or break point for the broken law
  double e = 1.0;  // budget scale
  double c = 0.0;  // break strength
  double f = 1.0;  // break sharpness

  PowerLawCoefficients power_law() const { return {alpha, beta, gamma}; }
};

enum class Formulation {
  power_law,   // alpha + beta * b^-gamma
  candidate1,  // alpha - beta * (b + d)^-gamma
  candidate2,  // alpha - beta * (e*b + d)^-gamma
  broken_law,  // alpha + beta * b^-gamma * (1 + (b/d)^(1/f))^(-c*f)
};

std::string_view to_string(Formulation formulation);
Formulation parse_formulation(std::string_view name);

double eval_power_law(const PowerLawCoefficients& c, double b);
double eval_candidate1(const ExtendedCoefficients& c, double b);
double eval_candidate2(const ExtendedCoefficients& c, double b);
double eval_broken_law(const ExtendedCoefficients& c, double b);

/// Dispatches on `formulation`; power_law ignores the extended fields.
double evaluate(Formulation formulation, const ExtendedCoefficients& c, double b);

/// Loss per budget step; values[i] is the loss after step i + 1.
struct LearningCurve {
  std::vector<double> values;

  std::size_t max_budget() const { return values.size(); }
  double at_step(std::size_t step) const { return values.at(step - 1); }
  double final_value() const { return values.back(); }
};

/// Prefix minimum. Throws std::invalid_argument on an empty curve.
LearningCurve min_smooth(const LearningCurve& curve);
std::vector<double> min_smooth(std::span<const double> values);

struct FitConfig {
  double learning_rate = 1e-2;
  double final_learning_rate = 1e-5;  // end of the cosine decay
  int max_epochs = 4000;
  int restarts = 2;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct FitResult {
  ExtendedCoefficients coefficients;
  double train_mae = 0.0;
  int epochs = 0;
  /// False when the loss went non-finite (diverged parameters); the
  /// coefficients are then the best finite iterate seen.
  bool converged = true;
};

/// Fits `formulation` to the observed prefix `observed` of a curve whose full
/// length is `max_budget` (observed[i] sits at budget (i + 1) / max_budget).
/// Full-batch Adam on mean absolute error; deterministic in config.seed.
FitResult fit_single_curve(std::span<const double> observed, std::size_t max_budget,
                           Formulation formulation, const FitConfig& config = {});

/// General form: arbitrary normalized budgets.
FitResult fit_single_curve(std::span<const double> budgets, std::span<const double> values,
                           Formulation formulation, const FitConfig& config = {});

void to_json(nlohmann::json& j, const PowerLawCoefficients& c);
void from_json(const nlohmann::json& j, PowerLawCoefficients& c);
void to_json(nlohmann::json& j, const ExtendedCoefficients& c);
void from_json(const nlohmann::json& j, ExtendedCoefficients& c);

}  // namespace dpl
