#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ratecast/gof.hpp"
#include "ratecast/market_data.hpp"
#include "ratecast/models.hpp"
#include "ratecast/partition.hpp"

namespace ratecast {

inline constexpr std::size_t kMinCalibrationSize = 12;

struct EwmaConfig {
    double lambda = 0.94;
    std::size_t window = 52;

    void validate() const;
};

/// Normalised lambda^i weighting, i = 0 for the last element of the window.
double ewma_forecast(std::span<const double> window, const EwmaConfig& config);

double rmse(std::span<const double> residuals);

/// sqrt(sum_k (n_k / n) sum_h e_h^2) with n_k the size of group k.
double total_rmse(std::span<const std::vector<double>> groups, std::size_t n);

struct GroupFit {
    IndexRange range;
    CalibrationResult calibration;
    double epsilon = 0.0;
    std::vector<double> residuals;  ///< market minus fitted, one per index in range
    std::size_t merged_groups = 1;  ///< partition groups joined into this one
    bool johnson_applied = false;
};

struct FitConfig {
    GofConfig gof;
    std::size_t min_group_size = kMinCalibrationSize;
};

struct FitReport {
    std::string maturity;
    PartitionKind kind = PartitionKind::Normal;
    ModelKind model = ModelKind::Vasicek;
    ShiftSpec shift;
    Partition partition;           ///< before the merge rule
    std::vector<GroupFit> groups;  ///< after the merge rule
    double total_rmse = 0.0;
    std::size_t n_used = 0;
    bool valid = true;
    std::vector<Date> dates;
    std::vector<double> observed;
    std::vector<double> fitted;  ///< NaN outside every group (leftover)
};

/// Shift, partition, Johnson step, per-group calibration with the merge rule,
/// and the one-step expected path of every group.
FitReport fit_sample(const RateSeries& series, PartitionKind kind, ModelKind model,
                     const FitConfig& config = {});
FitReport fit_sample(std::span<const double> values, PartitionKind kind, ModelKind model,
                     const FitConfig& config = {});

struct ForecastConfig {
    std::size_t window = 52;
    double ewma_lambda = 0.94;
    GofConfig gof;
    std::size_t min_group_size = kMinCalibrationSize;
    bool partition = true;  ///< false calibrates on the whole trailing window
};

struct ForecastRecord {
    std::size_t index = 0;  ///< index of the forecast observation
    std::optional<Date> date;
    double model = 0.0;
    double ewma = 0.0;
    double realized = 0.0;
    std::size_t window_size = 0;
    std::size_t change_point = 0;  ///< series index where the calibration window starts
    bool fallback = false;         ///< last observed value used instead of the model
    bool johnson_applied = false;
    ModelParams params;
};

struct ForecastReport {
    std::string maturity;
    PartitionKind kind = PartitionKind::Normal;
    ModelKind model = ModelKind::Vasicek;
    ForecastConfig config;
    std::vector<ForecastRecord> forecasts;
    double rmse_model = 0.0;
    double rmse_ewma = 0.0;
    std::size_t fallbacks = 0;
};

ForecastReport forecast_rolling(const RateSeries& series, PartitionKind kind, ModelKind model,
                                const ForecastConfig& config = {});
ForecastReport forecast_rolling(std::span<const double> values, PartitionKind kind, ModelKind model,
                                const ForecastConfig& config = {});

}  // namespace ratecast
