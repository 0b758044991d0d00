#include "ratecast/backtest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "ratecast/error.hpp"

namespace ratecast {
namespace {

// CIR and the ncx2 partition need positive values; otherwise a shift is
// only a convenience and an impossible one is skipped.
ShiftSpec shift_for(std::span<const double> values, PartitionKind kind, ModelKind model) {
    if (model == ModelKind::Cir || kind == PartitionKind::Ncx2) return make_shift(values);
    try {
        return make_shift(values);
    } catch (const ShiftError&) {
        return {};
    }
}

CalibrationResult calibrate_or_invalid(ModelKind model, std::span<const double> values) {
    try {
        return calibrate(model, values);
    } catch (const DomainError&) {
        CalibrationResult res;
        res.params.kind = model;
        res.n_used = values.size();
        return res;
    }
}

struct Block {
    IndexRange range;
    std::size_t merged = 1;
    bool johnson = false;
    CalibrationResult calibration;
};

}  // namespace

void EwmaConfig::validate() const {
    if (!(lambda > 0.0 && lambda < 1.0)) throw DomainError("EWMA lambda must lie in (0, 1)");
    if (window < 2) throw DomainError("EWMA window must be >= 2");
}

double ewma_forecast(std::span<const double> window, const EwmaConfig& config) {
    if (window.empty()) throw DomainError("ewma_forecast: empty window");
    config.validate();
    if (window.size() != config.window) throw DomainError("ewma_forecast: window length differs from config");
    double weight = 1.0;
    double sum = 0.0;
    double norm = 0.0;
    for (auto it = window.rbegin(); it != window.rend(); ++it) {
        sum += weight * *it;
        norm += weight;
        weight *= config.lambda;
    }
    return sum / norm;
}

double rmse(std::span<const double> residuals) {
    if (residuals.empty()) throw DomainError("rmse: empty residuals");
    double ss = 0.0;
    for (double e : residuals) ss += e * e;
    return std::sqrt(ss / static_cast<double>(residuals.size()));
}

double total_rmse(std::span<const std::vector<double>> groups, std::size_t n) {
    if (groups.empty() || n == 0) throw DomainError("total_rmse: empty input");
    double acc = 0.0;
    for (const auto& g : groups) {
        if (g.empty()) throw DomainError("total_rmse: empty group");
        double ss = 0.0;
        for (double e : g) ss += e * e;
        acc += static_cast<double>(g.size()) / static_cast<double>(n) * ss;
    }
    return std::sqrt(acc);
}

FitReport fit_sample(std::span<const double> values, PartitionKind kind, ModelKind model, const FitConfig& config) {
    const std::size_t n = values.size();
    if (n < kMinGroupSize) throw DomainError("fit_sample: need at least 4 observations");

    FitReport report;
    report.kind = kind;
    report.model = model;
    report.observed.assign(values.begin(), values.end());
    report.shift = shift_for(values, kind, model);
    const auto x = apply_shift(values, report.shift);
    report.partition = forward_partition(x, kind, config.gof);
    const auto& calib_values = report.partition.values;

    auto calibrate_block = [&](Block& b) {
        b.calibration = calibrate_or_invalid(
            model, std::span<const double>(calib_values).subspan(b.range.start, b.range.size()));
        b.calibration.shift = report.shift;
    };

    std::vector<Block> blocks;
    for (const auto& g : report.partition.groups) {
        Block b{g.range, 1, g.johnson_applied, {}};
        calibrate_block(b);
        blocks.push_back(std::move(b));
    }
    if (blocks.empty()) throw FitError("fit_sample: partition produced no groups");

    // Merge rule: undersized or uncalibratable groups join their successor,
    // or their predecessor when last.
    while (blocks.size() > 1) {
        auto bad = std::find_if(blocks.begin(), blocks.end(), [&](const Block& b) {
            return b.range.size() < config.min_group_size || !b.calibration.valid;
        });
        if (bad == blocks.end()) break;
        const auto i = static_cast<std::size_t>(bad - blocks.begin());
        const std::size_t lo = i + 1 < blocks.size() ? i : i - 1;
        Block merged{IndexRange{blocks[lo].range.start, blocks[lo + 1].range.end},
                     blocks[lo].merged + blocks[lo + 1].merged, blocks[lo].johnson || blocks[lo + 1].johnson, {}};
        calibrate_block(merged);
        blocks[lo] = std::move(merged);
        blocks.erase(blocks.begin() + static_cast<std::ptrdiff_t>(lo) + 1);
    }

    report.fitted.assign(n, std::numeric_limits<double>::quiet_NaN());
    std::vector<std::vector<double>> residual_groups;
    for (const auto& b : blocks) {
        GroupFit g;
        g.range = b.range;
        g.calibration = b.calibration;
        g.merged_groups = b.merged;
        g.johnson_applied = b.johnson;
        report.valid = report.valid && b.calibration.valid;
        report.fitted[b.range.start] = values[b.range.start];
        for (std::size_t h = b.range.start + 1; h <= b.range.end; ++h) {
            report.fitted[h] = b.calibration.valid
                ? unapply_shift(forecast_expected(b.calibration.params, x[h - 1], 1), report.shift)
                : values[h - 1];
        }
        g.residuals.reserve(b.range.size());
        for (std::size_t h = b.range.start; h <= b.range.end; ++h) g.residuals.push_back(values[h] - report.fitted[h]);
        g.epsilon = rmse(g.residuals);
        report.n_used += b.range.size();
        residual_groups.push_back(g.residuals);
        report.groups.push_back(std::move(g));
    }
    report.total_rmse = total_rmse(residual_groups, report.n_used);
    return report;
}

FitReport fit_sample(const RateSeries& series, PartitionKind kind, ModelKind model, const FitConfig& config) {
    auto report = fit_sample(std::span<const double>(series.rates), kind, model, config);
    report.maturity = series.maturity;
    report.dates = series.dates;
    return report;
}

namespace {

struct WindowChoice {
    std::size_t start = 0;
    CalibrationResult calibration;
    bool johnson = false;
};

WindowChoice choose_window(std::span<const double> x, PartitionKind kind, ModelKind model,
                           const ForecastConfig& config) {
    const std::size_t m = x.size();
    WindowChoice choice;
    if (!config.partition) {
        choice.calibration = calibrate_or_invalid(model, x);
        return choice;
    }

    const auto sel = backward_window(x, kind, config.gof);
    choice.start = sel.window.start;
    if (kind == PartitionKind::Normal && sel.test.near_boundary) {
        if (auto normalized = johnson_normalize(x.subspan(choice.start), config.gof)) {
            choice.calibration = calibrate_or_invalid(model, normalized->second);
            choice.johnson = true;
        }
    }
    if (!choice.johnson) choice.calibration = calibrate_or_invalid(model, x.subspan(choice.start));

    // Merge rule: extend backward by the preceding homogeneous window.
    while ((m - choice.start < config.min_group_size || !choice.calibration.valid) && choice.start > 0) {
        if (choice.start >= kMinGroupSize) {
            choice.start = backward_window(x.first(choice.start), kind, config.gof).window.start;
        } else {
            choice.start = 0;
        }
        choice.johnson = false;
        choice.calibration = calibrate_or_invalid(model, x.subspan(choice.start));
    }
    return choice;
}

}  // namespace

ForecastReport forecast_rolling(std::span<const double> values, PartitionKind kind, ModelKind model,
                                const ForecastConfig& config) {
    const std::size_t n = values.size();
    const std::size_t m = config.window;
    if (m < kMinCalibrationSize) throw DomainError("forecast_rolling: window must be >= 12");
    if (n <= m) throw DomainError("forecast_rolling: series must be longer than the window");
    const EwmaConfig ewma{config.ewma_lambda, m};
    ewma.validate();

    ForecastReport report;
    report.kind = kind;
    report.model = model;
    report.config = config;
    report.forecasts.reserve(n - m);
    std::vector<double> model_err, ewma_err;
    model_err.reserve(n - m);
    ewma_err.reserve(n - m);

    for (std::size_t t = m; t < n; ++t) {
        const auto w = values.subspan(t - m, m);
        ForecastRecord rec;
        rec.index = t;
        rec.realized = values[t];
        rec.ewma = ewma_forecast(w, ewma);
        rec.model = w.back();
        rec.fallback = true;
        rec.window_size = m;
        rec.change_point = t - m;
        rec.params.kind = model;
        try {
            const auto shift = shift_for(w, kind, model);
            const auto x = apply_shift(w, shift);
            const auto choice = choose_window(x, kind, model, config);
            rec.window_size = m - choice.start;
            rec.change_point = t - m + choice.start;
            rec.johnson_applied = choice.johnson;
            if (choice.calibration.valid) {
                rec.params = choice.calibration.params;
                rec.model = unapply_shift(forecast_expected(rec.params, x.back(), 1), shift);
                rec.fallback = !std::isfinite(rec.model);
                if (rec.fallback) rec.model = w.back();
            }
        } catch (const Error&) {
            // recorded as a flagged last-value forecast
        }
        if (rec.fallback) ++report.fallbacks;
        model_err.push_back(rec.realized - rec.model);
        ewma_err.push_back(rec.realized - rec.ewma);
        report.forecasts.push_back(rec);
    }
    report.rmse_model = rmse(model_err);
    report.rmse_ewma = rmse(ewma_err);
    return report;
}

ForecastReport forecast_rolling(const RateSeries& series, PartitionKind kind, ModelKind model,
                                const ForecastConfig& config) {
    auto report = forecast_rolling(std::span<const double>(series.rates), kind, model, config);
    report.maturity = series.maturity;
    for (auto& rec : report.forecasts) rec.date = series.dates.at(rec.index);
    return report;
}

}  // namespace ratecast
