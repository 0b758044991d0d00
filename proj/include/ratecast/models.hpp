#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "ratecast/random.hpp"

namespace ratecast {

enum class ModelKind { Vasicek, Cir };

std::string_view to_string(ModelKind kind) noexcept;
ModelKind parse_model_kind(std::string_view text);

/// Mean-reverting short-rate parameters at a unit (one observation) time step.
struct ModelParams {
    ModelKind kind = ModelKind::Vasicek;
    double kappa = 0.0;  ///< reversion speed per step
    double theta = 0.0;  ///< long-term mean, percent
    double sigma = 0.0;  ///< volatility per sqrt(step)
};

enum class ShiftMode { None, AddP99, SubtractP1 };

std::string_view to_string(ShiftMode mode) noexcept;

/// Additive translation moving a sample to strictly positive values.
struct ShiftSpec {
    double alpha = 0.0;
    ShiftMode mode = ShiftMode::None;
};

struct CalibrationResult {
    ModelParams params;
    ShiftSpec shift;
    std::size_t n_used = 0;
    bool valid = false;
};

/// No shift for strictly positive samples; otherwise alpha is the empirical
/// 99th percentile (added), falling back to the 1st percentile (subtracted).
/// Throws ShiftError when neither leaves every value strictly positive.
ShiftSpec make_shift(std::span<const double> sample);

double apply_shift(double value, const ShiftSpec& spec) noexcept;
double unapply_shift(double value, const ShiftSpec& spec) noexcept;
std::vector<double> apply_shift(std::span<const double> sample, const ShiftSpec& spec);

/// Closed-form estimating-function estimators for the CIR model. Requires
/// strictly positive values (DomainError otherwise) and n >= 2.
CalibrationResult calibrate_cir(std::span<const double> sample);

/// Closed-form estimators for the Vasicek model; negative values allowed.
CalibrationResult calibrate_vasicek(std::span<const double> sample);

CalibrationResult calibrate(ModelKind kind, std::span<const double> sample);

/// E[r(s + steps) | r(s)] = theta + (r_s - theta) exp(-kappa * steps).
double forecast_expected(const ModelParams& params, double r_s, std::size_t steps = 1);

/// Throws DomainError for parameters that cannot be simulated.
void validate_for_simulation(const ModelParams& params, double r0);

/// One exact transition over a unit step.
double exact_step(const ModelParams& params, double r, Engine& engine);

/// Path of length steps + 1 starting at r0.
std::vector<double> simulate_exact(const ModelParams& params, double r0, std::size_t steps,
                                   std::uint64_t seed);

/// Piecewise-constant parameter schedule: regime i applies to transitions
/// starting at step >= start_step (first regime must start at 0).
struct Regime {
    std::size_t start_step = 0;
    ModelParams params;
};

std::vector<double> simulate_regimes(std::span<const Regime> schedule, double r0, std::size_t steps,
                                     std::uint64_t seed);

}  // namespace ratecast
