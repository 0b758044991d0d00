#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "ratecast/distributions.hpp"
#include "ratecast/error.hpp"
#include "ratecast/models.hpp"
#include "ratecast/random.hpp"

#include <boost/random/uniform_real_distribution.hpp>

using namespace ratecast;

namespace {

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double variance_of(const std::vector<double>& v) {
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

}  // namespace

TEST(MakeShift, PositiveSampleNeedsNoShift) {
    const auto s = make_shift(std::vector<double>{0.1, 2.0, 3.0});
    EXPECT_EQ(s.mode, ShiftMode::None);
    EXPECT_EQ(s.alpha, 0.0);
}

TEST(MakeShift, AddsNinetyNinthPercentile) {
    // 101 points from -0.5 to 2.0 where the 99th percentile is 1.9 after interpolation.
    std::vector<double> x{-0.5};
    for (int i = 0; i < 99; ++i) x.push_back(0.1 + 1.8 * i / 98.0);
    x.push_back(2.0);
    std::vector<double> sorted = x;
    std::sort(sorted.begin(), sorted.end());
    const double p99 = sorted_quantile(sorted, 0.99);
    const auto s = make_shift(x);
    EXPECT_EQ(s.mode, ShiftMode::AddP99);
    EXPECT_DOUBLE_EQ(s.alpha, p99);
    EXPECT_NEAR(apply_shift(-0.5, s), -0.5 + p99, 1e-15);
    EXPECT_GT(apply_shift(-0.5, s), 0.0);
}

TEST(MakeShift, FallbackEngagedWhenNinetyNinthPercentileTooSmall) {
    // Mostly negative sample: p99 <= |min|, so the 1st-percentile branch runs
    // and cannot yield strictly positive values because p1 >= min.
    const std::vector<double> x{-3.0, -2.5, -2.0, -1.0, -0.5, 0.2};
    EXPECT_THROW(make_shift(x), ShiftError);
    EXPECT_THROW(make_shift(std::vector<double>{}), ShiftError);
}

TEST(ApplyShift, ExamplesAndRoundTrip) {
    EXPECT_DOUBLE_EQ(apply_shift(-0.41, ShiftSpec{1.5, ShiftMode::AddP99}), 1.09);
    EXPECT_DOUBLE_EQ(apply_shift(-0.41, ShiftSpec{}), -0.41);
    EXPECT_DOUBLE_EQ(apply_shift(1.0, ShiftSpec{-2.0, ShiftMode::SubtractP1}), 3.0);
    auto engine = make_engine(1);
    boost::random::uniform_real_distribution<double> u(-5.0, 5.0);
    for (const ShiftSpec spec : {ShiftSpec{1.7, ShiftMode::AddP99}, ShiftSpec{-0.8, ShiftMode::SubtractP1}}) {
        for (int i = 0; i < 1000; ++i) {
            const double x = u(engine);
            EXPECT_NEAR(unapply_shift(apply_shift(x, spec), spec), x, 1e-14);
        }
    }
}

TEST(CalibrateVasicek, RecoversSimulatedParameters) {
    const ModelParams truth{ModelKind::Vasicek, 0.05, 5.0, 0.1};
    const auto path = simulate_exact(truth, 5.0, 4999, 2);
    const auto res = calibrate_vasicek(path);
    ASSERT_TRUE(res.valid);
    EXPECT_NEAR(res.params.theta, 5.0, 0.25);
    EXPECT_NEAR(res.params.sigma, 0.1, 0.005);
    EXPECT_NEAR(res.params.kappa, 0.05, 0.0125);
    EXPECT_EQ(res.n_used, 5000u);
}

TEST(CalibrateVasicek, ClosedFormMatchesRawSums) {
    const auto r = simulate_exact({ModelKind::Vasicek, 0.2, 4.0, 0.1}, 3.5, 40, 12);
    const double m = static_cast<double>(r.size() - 1);
    double sx = 0, sy = 0, sxy = 0, sxx = 0;
    for (std::size_t i = 1; i < r.size(); ++i) {
        sx += r[i - 1];
        sy += r[i];
        sxy += r[i - 1] * r[i];
        sxx += r[i - 1] * r[i - 1];
    }
    const double e = (sx * sy / m - sxy) / (sx * sx / m - sxx);
    const double kappa = -std::log(e);
    const double theta = (sy / m - e * sx / m) / (1 - e);
    double ss = 0;
    for (std::size_t i = 1; i < r.size(); ++i) {
        const double d = r[i] - r[i - 1] * e - theta * (1 - e);
        ss += d * d;
    }
    const double sigma2 = 2 * kappa / (1 - e * e) * ss / m;
    const auto res = calibrate_vasicek(r);
    ASSERT_TRUE(res.valid);
    EXPECT_NEAR(res.params.kappa, kappa, 1e-10);
    EXPECT_NEAR(res.params.theta, theta, 1e-10);
    EXPECT_NEAR(res.params.sigma * res.params.sigma, sigma2, 1e-12);
}

TEST(CalibrateVasicek, ShiftEquivariance) {
    const auto path = simulate_exact({ModelKind::Vasicek, 0.2, 1.0, 0.3}, 1.0, 300, 3);
    const auto base = calibrate_vasicek(path);
    ASSERT_TRUE(base.valid);
    for (double c : {-3.0, 0.7, 12.5}) {
        std::vector<double> shifted(path);
        for (auto& v : shifted) v += c;
        const auto res = calibrate_vasicek(shifted);
        EXPECT_NEAR(res.params.theta, base.params.theta + c, 1e-10);
        EXPECT_NEAR(res.params.kappa, base.params.kappa, 1e-10);
        EXPECT_NEAR(res.params.sigma, base.params.sigma, 1e-10);
    }
}

TEST(CalibrateVasicek, DegenerateInputs) {
    EXPECT_FALSE(calibrate_vasicek(std::vector<double>(20, 1.5)).valid);
    EXPECT_THROW(calibrate_vasicek(std::vector<double>{1.0}), DomainError);
    const auto neg = calibrate_vasicek(simulate_exact({ModelKind::Vasicek, 0.3, -0.4, 0.1}, -0.4, 200, 4));
    EXPECT_TRUE(std::isfinite(neg.params.theta));
    EXPECT_LT(neg.params.theta, 0.0);
}

TEST(CalibrateCir, RecoversSimulatedParameters) {
    const ModelParams truth{ModelKind::Cir, 0.05, 5.0, 0.1};
    const auto path = simulate_exact(truth, 5.0, 4999, 5);
    const auto res = calibrate_cir(path);
    ASSERT_TRUE(res.valid);
    EXPECT_NEAR(res.params.theta, 5.0, 0.25);
    EXPECT_NEAR(res.params.sigma, 0.1, 0.005);
    EXPECT_NEAR(res.params.kappa, 0.05, 0.0125);
}

TEST(CalibrateCir, ClosedFormMatchesRawSums) {
    const auto r = simulate_exact({ModelKind::Cir, 0.2, 4.0, 0.1}, 3.5, 40, 13);
    const double m = static_cast<double>(r.size() - 1);
    double s_ratio = 0, s_next = 0, s_inv = 0, s_prev = 0;
    for (std::size_t i = 1; i < r.size(); ++i) {
        s_ratio += r[i] / r[i - 1];
        s_next += r[i];
        s_inv += 1 / r[i - 1];
        s_prev += r[i - 1];
    }
    const double e = (m * s_ratio - s_next * s_inv) / (m * m - s_prev * s_inv);
    const double kappa = -std::log(e);
    const double theta = s_next / m + e / (m * (1 - e)) * (r.back() - r.front());
    double num = 0, den = 0;
    for (std::size_t i = 1; i < r.size(); ++i) {
        const double d = r[i] - r[i - 1] * e - theta * (1 - e);
        num += d * d / r[i - 1];
        den += ((theta / 2 - r[i - 1]) * e * e - (theta - r[i - 1]) * e + theta / 2) / r[i - 1];
    }
    const double sigma2 = num / (den / kappa);
    const auto res = calibrate_cir(r);
    ASSERT_TRUE(res.valid);
    EXPECT_NEAR(res.params.kappa, kappa, 1e-10);
    EXPECT_NEAR(res.params.theta, theta, 1e-10);
    EXPECT_NEAR(res.params.sigma * res.params.sigma, sigma2, 1e-12);
}

TEST(CalibrateCir, DegenerateInputs) {
    EXPECT_FALSE(calibrate_cir(std::vector<double>(20, 3.0)).valid);
    EXPECT_THROW(calibrate_cir(std::vector<double>{1.0, 2.0, 0.0, 1.5}), DomainError);
    EXPECT_THROW(calibrate_cir(std::vector<double>{1.0}), DomainError);
}

TEST(ForecastExpected, FixedPointAndLimit) {
    const ModelParams p{ModelKind::Cir, 0.3, 4.0, 0.2};
    EXPECT_DOUBLE_EQ(forecast_expected(p, 4.0, 1), 4.0);
    EXPECT_DOUBLE_EQ(forecast_expected(p, 4.0, 17), 4.0);
    EXPECT_NEAR(forecast_expected({ModelKind::Vasicek, 60.0, 4.0, 0.2}, 9.0, 1), 4.0, 1e-12);
    EXPECT_NEAR(forecast_expected(p, 5.0, 2), 4.0 + std::exp(-0.6), 1e-14);
    EXPECT_THROW(forecast_expected(p, 5.0, 0), DomainError);
}

TEST(ForecastExpected, MatchesMonteCarloMeanOfCirTransitions) {
    const ModelParams p{ModelKind::Cir, 0.1, 5.0, 0.2};
    auto engine = make_engine(6);
    std::vector<double> draws(100'000);
    for (auto& d : draws) d = exact_step(p, 4.0, engine);
    const double se = std::sqrt(variance_of(draws) / static_cast<double>(draws.size()));
    EXPECT_NEAR(mean_of(draws), forecast_expected(p, 4.0, 1), 3.0 * se);
}

TEST(SimulateExact, VanishingNoiseFollowsMeanCurve) {
    for (auto kind : {ModelKind::Vasicek, ModelKind::Cir}) {
        const ModelParams p{kind, 0.1, 5.0, 1e-8};
        const auto path = simulate_exact(p, 3.0, 200, 7);
        ASSERT_EQ(path.size(), 201u);
        double dev = 0.0;
        for (std::size_t t = 1; t < path.size(); ++t) dev = std::max(dev, std::abs(path[t] - forecast_expected(p, 3.0, t)));
        EXPECT_LT(dev, 1e-4);
    }
}

TEST(SimulateExact, ReproducibleForSeed) {
    const ModelParams p{ModelKind::Cir, 0.1, 5.0, 0.3};
    EXPECT_EQ(simulate_exact(p, 5.0, 100, 8), simulate_exact(p, 5.0, 100, 8));
    EXPECT_NE(simulate_exact(p, 5.0, 100, 8), simulate_exact(p, 5.0, 100, 9));
}

TEST(SimulateExact, CirStaysPositiveUnderFeller) {
    const ModelParams p{ModelKind::Cir, 0.05, 0.5, 0.2};
    ASSERT_GT(2 * p.kappa * p.theta, p.sigma * p.sigma);
    const auto path = simulate_exact(p, 0.1, 20'000, 10);
    EXPECT_GT(*std::min_element(path.begin(), path.end()), 0.0);
}

TEST(SimulateExact, VasicekTerminalMomentsMatch) {
    const ModelParams p{ModelKind::Vasicek, 0.2, 2.0, 0.5};
    constexpr std::size_t horizon = 5;
    std::vector<double> terminal(100'000);
    for (std::size_t i = 0; i < terminal.size(); ++i) terminal[i] = simulate_exact(p, 1.0, horizon, 1000 + i).back();
    const double var = p.sigma * p.sigma * -std::expm1(-2.0 * p.kappa * horizon) / (2.0 * p.kappa);
    const double n = static_cast<double>(terminal.size());
    EXPECT_NEAR(mean_of(terminal), forecast_expected(p, 1.0, horizon), 3.0 * std::sqrt(var / n));
    EXPECT_NEAR(variance_of(terminal), var, 3.0 * var * std::sqrt(2.0 / (n - 1)));
}

TEST(SimulateExact, RejectsInvalidParameters) {
    EXPECT_THROW(simulate_exact({ModelKind::Vasicek, 0.1, 1.0, 0.0}, 1.0, 10, 1), DomainError);
    EXPECT_THROW(simulate_exact({ModelKind::Cir, 0.1, -1.0, 0.1}, 1.0, 10, 1), DomainError);
    EXPECT_THROW(simulate_exact({ModelKind::Cir, 0.1, 1.0, 0.1}, 0.0, 10, 1), DomainError);
    EXPECT_THROW(simulate_exact({ModelKind::Cir, -0.1, 1.0, 0.1}, 1.0, 10, 1), DomainError);
}

TEST(SimulateRegimes, VolatilityDoublingRaisesIncrementVariance) {
    const std::vector<Regime> schedule{{0, {ModelKind::Vasicek, 0.1, 3.0, 0.1}}, {100, {ModelKind::Vasicek, 0.1, 3.0, 0.2}}};
    const auto path = simulate_regimes(schedule, 3.0, 200, 11);
    std::vector<double> before, after;
    for (std::size_t t = 1; t <= 100; ++t) before.push_back(path[t] - path[t - 1]);
    for (std::size_t t = 101; t <= 200; ++t) after.push_back(path[t] - path[t - 1]);
    EXPECT_GT(variance_of(after), variance_of(before));
    EXPECT_THROW(simulate_regimes(std::vector<Regime>{{5, schedule[0].params}}, 3.0, 10, 1), DomainError);
}

TEST(ModelKind, ParsesNames) {
    EXPECT_EQ(parse_model_kind("cir"), ModelKind::Cir);
    EXPECT_EQ(parse_model_kind("vasicek"), ModelKind::Vasicek);
    EXPECT_THROW(parse_model_kind("hull-white"), UsageError);
}
