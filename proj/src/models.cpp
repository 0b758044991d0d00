#include "ratecast/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <boost/random/normal_distribution.hpp>

#include "ratecast/distributions.hpp"
#include "ratecast/error.hpp"

namespace ratecast {
namespace {

constexpr double kDenominatorGuard = 1e-14;

bool finite_all(std::initializer_list<double> values) {
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace

std::string_view to_string(ModelKind kind) noexcept { return kind == ModelKind::Vasicek ? "vasicek" : "cir"; }

ModelKind parse_model_kind(std::string_view text) {
    if (text == "vasicek") return ModelKind::Vasicek;
    if (text == "cir") return ModelKind::Cir;
    throw UsageError("unknown model '" + std::string(text) + "'");
}

std::string_view to_string(ShiftMode mode) noexcept {
    switch (mode) {
        case ShiftMode::None: return "none";
        case ShiftMode::AddP99: return "add_p99";
        case ShiftMode::SubtractP1: return "subtract_p1";
    }
    return "?";
}

ShiftSpec make_shift(std::span<const double> sample) {
    if (sample.empty()) throw ShiftError("make_shift: empty sample");
    std::vector<double> sorted(sample.begin(), sample.end());
    std::sort(sorted.begin(), sorted.end());
    const double min = sorted.front();
    if (min > 0.0) return {};

    const double p99 = sorted_quantile(sorted, 0.99);
    if (min + p99 > 0.0) return {p99, ShiftMode::AddP99};

    const double p1 = sorted_quantile(sorted, 0.01);
    if (min - p1 > 0.0) return {p1, ShiftMode::SubtractP1};

    throw ShiftError("make_shift: neither the 99th-percentile nor the 1st-percentile shift makes the sample "
                     "strictly positive (min " + std::to_string(min) + ", p99 " + std::to_string(p99) +
                     ", p1 " + std::to_string(p1) + ")");
}

double apply_shift(double value, const ShiftSpec& spec) noexcept {
    switch (spec.mode) {
        case ShiftMode::None: return value;
        case ShiftMode::AddP99: return value + spec.alpha;
        case ShiftMode::SubtractP1: return value - spec.alpha;
    }
    return value;
}

double unapply_shift(double value, const ShiftSpec& spec) noexcept {
    switch (spec.mode) {
        case ShiftMode::None: return value;
        case ShiftMode::AddP99: return value - spec.alpha;
        case ShiftMode::SubtractP1: return value + spec.alpha;
    }
    return value;
}

std::vector<double> apply_shift(std::span<const double> sample, const ShiftSpec& spec) {
    std::vector<double> out(sample.size());
    std::transform(sample.begin(), sample.end(), out.begin(), [&](double v) { return apply_shift(v, spec); });
    return out;
}

// The sums below are the printed estimators rewritten around sample means;
// e.g. (n-1) sum r_i/r_{i-1} - (sum r_i)(sum 1/r_{i-1}) equals
// (n-1) * sum (r_i - mean r_i)(1/r_{i-1} - mean 1/r_{i-1}).
CalibrationResult calibrate_cir(std::span<const double> sample) {
    if (sample.size() < 2) throw DomainError("calibrate_cir: need at least 2 observations");
    for (double v : sample) {
        if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("calibrate_cir: values must be > 0");
    }
    const std::size_t m = sample.size() - 1;
    const double dm = static_cast<double>(m);
    const auto prev = sample.first(m);
    const auto next = sample.last(m);

    double mean_next = 0.0, mean_inv = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        mean_next += next[i];
        mean_inv += 1.0 / prev[i];
    }
    mean_next /= dm;
    mean_inv /= dm;
    double mean_prev = 0.0;
    for (double v : prev) mean_prev += v;
    mean_prev /= dm;

    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double u = 1.0 / prev[i] - mean_inv;
        num += (next[i] - mean_next) * u;
        den += (prev[i] - mean_prev) * u;
    }
    num /= dm;
    den /= dm;

    CalibrationResult res;
    res.params.kind = ModelKind::Cir;
    res.n_used = sample.size();
    if (!(std::abs(den) >= kDenominatorGuard)) return res;
    const double ratio = num / den;  // estimate of exp(-kappa)
    if (!(ratio > 0.0) || !std::isfinite(ratio)) return res;

    const double kappa = -std::log(ratio);
    const double e1 = ratio;
    const double e2 = ratio * ratio;
    const double theta = mean_next + e1 / (dm * (1.0 - e1)) * (sample.back() - sample.front());

    double s_num = 0.0, s_den = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double inv = 1.0 / prev[i];
        const double resid = next[i] - prev[i] * e1 - theta * (1.0 - e1);
        s_num += inv * resid * resid;
        s_den += inv * ((0.5 * theta - prev[i]) * e2 - (theta - prev[i]) * e1 + 0.5 * theta);
    }
    s_den /= kappa;
    res.params.kappa = kappa;
    res.params.theta = theta;
    if (!(std::abs(s_den) >= kDenominatorGuard)) return res;
    const double sigma2 = s_num / s_den;
    res.params.sigma = sigma2 > 0.0 ? std::sqrt(sigma2) : 0.0;
    res.valid = sigma2 > 0.0 && finite_all({kappa, theta, sigma2});
    return res;
}

CalibrationResult calibrate_vasicek(std::span<const double> sample) {
    if (sample.size() < 2) throw DomainError("calibrate_vasicek: need at least 2 observations");
    const std::size_t m = sample.size() - 1;
    const double dm = static_cast<double>(m);
    const auto prev = sample.first(m);
    const auto next = sample.last(m);
    const double mean_prev = std::accumulate(prev.begin(), prev.end(), 0.0) / dm;
    const double mean_next = std::accumulate(next.begin(), next.end(), 0.0) / dm;

    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double dx = prev[i] - mean_prev;
        sxy += dx * (next[i] - mean_next);
        sxx += dx * dx;
    }
    sxy /= dm;
    sxx /= dm;

    CalibrationResult res;
    res.params.kind = ModelKind::Vasicek;
    res.n_used = sample.size();
    if (!(std::abs(sxx) >= kDenominatorGuard)) return res;
    const double ratio = sxy / sxx;  // estimate of exp(-kappa)
    if (!(ratio > 0.0) || !std::isfinite(ratio)) return res;

    const double kappa = -std::log(ratio);
    const double e1 = ratio;
    const double theta = (mean_next - e1 * mean_prev) / (1.0 - e1);
    double ss = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double resid = next[i] - prev[i] * e1 - theta * (1.0 - e1);
        ss += resid * resid;
    }
    const double factor_den = 1.0 - e1 * e1;
    res.params.kappa = kappa;
    res.params.theta = theta;
    if (!(std::abs(factor_den) >= kDenominatorGuard)) return res;
    const double sigma2 = 2.0 * kappa / factor_den * ss / dm;
    res.params.sigma = sigma2 > 0.0 ? std::sqrt(sigma2) : 0.0;
    res.valid = sigma2 > 0.0 && finite_all({kappa, theta, sigma2});
    return res;
}

CalibrationResult calibrate(ModelKind kind, std::span<const double> sample) {
    return kind == ModelKind::Cir ? calibrate_cir(sample) : calibrate_vasicek(sample);
}

double forecast_expected(const ModelParams& params, double r_s, std::size_t steps) {
    if (steps < 1) throw DomainError("forecast_expected: steps must be >= 1");
    return params.theta + (r_s - params.theta) * std::exp(-params.kappa * static_cast<double>(steps));
}

void validate_for_simulation(const ModelParams& p, double r0) {
    if (!(p.sigma > 0.0) || !std::isfinite(p.sigma)) throw DomainError("simulate: sigma must be > 0");
    if (!(p.kappa > 0.0) || !std::isfinite(p.kappa)) throw DomainError("simulate: kappa must be > 0");
    if (!std::isfinite(p.theta) || !std::isfinite(r0)) throw DomainError("simulate: non-finite theta or r0");
    if (p.kind == ModelKind::Cir) {
        if (!(p.theta > 0.0)) throw DomainError("simulate: CIR requires theta > 0");
        if (!(r0 > 0.0)) throw DomainError("simulate: CIR requires r0 > 0");
    }
}

double exact_step(const ModelParams& p, double r, Engine& engine) {
    const double e1 = std::exp(-p.kappa);
    if (p.kind == ModelKind::Vasicek) {
        const double sd = p.sigma * std::sqrt(-std::expm1(-2.0 * p.kappa) / (2.0 * p.kappa));
        boost::random::normal_distribution<double> normal;
        return p.theta + (r - p.theta) * e1 + sd * normal(engine);
    }
    // r(t+1) = Y / (2c), Y ~ ncx2(4 kappa theta / sigma^2, 2 c r e^-kappa).
    const double c = 2.0 * p.kappa / (p.sigma * p.sigma * -std::expm1(-p.kappa));
    const NoncentralChiSquareParams law{4.0 * p.kappa * p.theta / (p.sigma * p.sigma),
                                        2.0 * c * std::max(r, 0.0) * e1, 1.0 / (2.0 * c)};
    return draw_ncx2(law, engine);
}

std::vector<double> simulate_exact(const ModelParams& params, double r0, std::size_t steps,
                                   std::uint64_t seed) {
    const Regime single{0, params};
    return simulate_regimes(std::span<const Regime>(&single, 1), r0, steps, seed);
}

std::vector<double> simulate_regimes(std::span<const Regime> schedule, double r0, std::size_t steps,
                                     std::uint64_t seed) {
    if (schedule.empty() || schedule.front().start_step != 0) {
        throw DomainError("simulate: the first regime must start at step 0");
    }
    for (std::size_t i = 0; i < schedule.size(); ++i) {
        // Later regimes inherit the running state; theta stands in for it here.
        validate_for_simulation(schedule[i].params, i == 0 ? r0 : schedule[i].params.theta);
        if (i > 0 && schedule[i].start_step <= schedule[i - 1].start_step) {
            throw DomainError("simulate: regime start steps must be strictly increasing");
        }
    }

    auto engine = make_engine(seed);
    std::vector<double> path;
    path.reserve(steps + 1);
    path.push_back(r0);
    std::size_t regime = 0;
    for (std::size_t t = 0; t < steps; ++t) {
        while (regime + 1 < schedule.size() && schedule[regime + 1].start_step <= t) ++regime;
        path.push_back(exact_step(schedule[regime].params, path.back(), engine));
    }
    return path;
}

}  // namespace ratecast
