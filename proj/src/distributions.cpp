#include "ratecast/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/random/gamma_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>

#include "ratecast/error.hpp"

namespace ratecast {
namespace {

constexpr double kPoissonTailTolerance = 1e-12;
constexpr int kMaxSeriesTerms = 10000;
// Recompute the incomplete gamma exactly every so many recurrence steps.
constexpr int kResyncInterval = 64;

// Family selection tolerance on the quantile ratios (log scale).
constexpr double kJohnsonRatioTolerance = 0.1;

double log_poisson_weight(int j, double mu) {
    if (mu == 0.0) return j == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
    return -mu + j * std::log(mu) - std::lgamma(j + 1.0);
}

}  // namespace

void NoncentralChiSquareParams::validate() const {
    if (!(df > 0.0) || !std::isfinite(df)) throw DomainError("ncx2: df must be > 0");
    if (!(noncentrality >= 0.0) || !std::isfinite(noncentrality))
        throw DomainError("ncx2: noncentrality must be >= 0");
    if (!(scale > 0.0) || !std::isfinite(scale)) throw DomainError("ncx2: scale must be > 0");
}

double NoncentralChiSquareParams::skewness() const noexcept {
    return 8.0 * (df + 3.0 * noncentrality) / std::pow(2.0 * (df + 2.0 * noncentrality), 1.5);
}

std::string_view to_string(JohnsonFamily family) noexcept {
    switch (family) {
        case JohnsonFamily::SU: return "SU";
        case JohnsonFamily::SB: return "SB";
        case JohnsonFamily::SL: return "SL";
        case JohnsonFamily::SN: return "SN";
    }
    return "?";
}

bool JohnsonFit::in_domain(double x) const noexcept {
    if (!std::isfinite(x)) return false;
    const double u = (x - xi) / lambda;
    switch (family) {
        case JohnsonFamily::SB: return u > 0.0 && u < 1.0;
        case JohnsonFamily::SL: return u > 0.0;
        default: return true;
    }
}

double normal_cdf(double x, double mean, double sd) {
    if (!(sd > 0.0)) throw DomainError("normal_cdf: sd must be > 0");
    return 0.5 * std::erfc(-(x - mean) / (sd * M_SQRT2));
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("normal_quantile: p must lie in (0,1)");
    return boost::math::quantile(boost::math::normal_distribution<double>{}, p);
}

double ncx2_cdf(double x, const NoncentralChiSquareParams& params) {
    params.validate();
    if (std::isnan(x) || x < 0.0) throw DomainError("ncx2_cdf: x must be >= 0");
    if (x == 0.0) return 0.0;
    if (std::isinf(x)) return 1.0;

    const double t = 0.5 * x / params.scale;
    const double half_df = 0.5 * params.df;
    const double mu = 0.5 * params.noncentrality;

    if (mu == 0.0) return boost::math::gamma_p(half_df, t);

    const int mode = static_cast<int>(std::floor(mu));
    int terms = 0;
    double sum = 0.0;

    // Upward from the mode: P(a+1, t) = P(a, t) - g(a), g(a) = t^a e^-t / Gamma(a+1).
    {
        double a = half_df + mode;
        double p = boost::math::gamma_p(a, t);
        double g = boost::math::gamma_p_derivative(a + 1.0, t);
        double w = std::exp(log_poisson_weight(mode, mu));
        for (int j = mode;; ++j) {
            if (++terms > kMaxSeriesTerms) throw NumericError("ncx2_cdf: Poisson series did not converge");
            sum += w * std::clamp(p, 0.0, 1.0);
            // Bound on the remaining upper Poisson tail: geometric ratio mu/(j+2) < 1.
            const double w_next = w * mu / (j + 1.0);
            const double ratio = mu / (j + 2.0);
            if (ratio < 1.0 && w_next / (1.0 - ratio) < 0.5 * kPoissonTailTolerance) break;
            w = w_next;
            if ((j - mode + 1) % kResyncInterval == 0) {
                a += 1.0;
                p = boost::math::gamma_p(a, t);
                g = boost::math::gamma_p_derivative(a + 1.0, t);
            } else {
                p -= g;
                a += 1.0;
                g *= t / (a);
                // g now equals t^a e^-t / Gamma(a+1) for the incremented a
            }
        }
    }

    // Downward from mode-1: P(a-1, t) = P(a, t) + g(a-1), g(a-1) = g(a) * a / t.
    if (mode > 0) {
        double a = half_df + mode;
        double p = boost::math::gamma_p(a, t);
        double g = boost::math::gamma_p_derivative(a, t);  // t^(a-1) e^-t / Gamma(a)
        double w = std::exp(log_poisson_weight(mode, mu));
        for (int j = mode - 1; j >= 0; --j) {
            if (++terms > kMaxSeriesTerms) throw NumericError("ncx2_cdf: Poisson series did not converge");
            w *= (j + 1.0) / mu;
            a -= 1.0;
            if ((mode - j) % kResyncInterval == 0 || g == 0.0) {
                p = boost::math::gamma_p(a, t);
                g = boost::math::gamma_p_derivative(a, t);
            } else {
                p += g;
                g *= a / t;
            }
            sum += w * std::clamp(p, 0.0, 1.0);
            if (j == 0) break;
            // Remaining lower tail: ratio w_{i-1}/w_i = i/mu < 1 below the mode.
            const double ratio = j / mu;
            const double w_prev = w * ratio;
            if (w_prev / (1.0 - ratio) < 0.5 * kPoissonTailTolerance) break;
        }
    }
    return std::clamp(sum, 0.0, 1.0);
}

NoncentralChiSquareParams fit_ncx2(std::span<const double> sample) {
    if (sample.size() < 4) throw FitError("fit_ncx2: need at least 4 observations");
    for (double v : sample) {
        if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("fit_ncx2: sample values must be > 0");
    }
    const double n = static_cast<double>(sample.size());
    const double mean = std::accumulate(sample.begin(), sample.end(), 0.0) / n;
    double m2 = 0.0, m3 = 0.0;
    for (double v : sample) {
        const double d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= n;
    m3 /= n;
    if (!(m2 > 1e-24 * mean * mean)) throw FitError("fit_ncx2: sample has zero variance");

    // mean = c(k+l), var = 2c^2(k+2l), m3 = 8c^3(k+3l)  =>  8 mean c^2 - 8 var c + m3 = 0.
    // The admissible root is the smaller one, written without cancellation.
    const double disc = m2 * m2 - 0.5 * mean * m3;
    if (m3 > 0.0 && disc >= 0.0) {
        const double c = m3 / (4.0 * (m2 + std::sqrt(disc)));
        const double lambda = m2 / (2.0 * c * c) - mean / c;
        const double df = mean / c - lambda;
        if (c > 0.0 && lambda >= 0.0 && df > 0.0 && std::isfinite(lambda) && std::isfinite(df)) {
            return {df, lambda, c};
        }
    }
    const double c = m2 / (2.0 * mean);
    return {mean / c, 0.0, c};
}

double sorted_quantile(std::span<const double> sorted, double prob) {
    if (sorted.empty()) throw DomainError("quantile of empty sample");
    const double h = (static_cast<double>(sorted.size()) - 1.0) * std::clamp(prob, 0.0, 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

JohnsonFit fit_johnson_from_quantiles(double x_m3z, double x_mz, double x_z, double x_3z, double z) {
    const double m = x_3z - x_z;
    const double n = x_mz - x_m3z;
    const double p = x_z - x_mz;
    if (!(m > 0.0 && n > 0.0 && p > 0.0) || !std::isfinite(m + n + p)) {
        throw FitError("fit_johnson: degenerate quantiles");
    }
    const double mp = m / p;
    const double np = n / p;
    const double ratio = mp * np;
    const double centre = 0.5 * (x_z + x_mz);
    const double log_ratio = std::log(ratio);
    const double log_skew = std::log(m / n);

    JohnsonFit fit;
    if (std::abs(log_ratio) <= kJohnsonRatioTolerance && std::abs(log_skew) <= kJohnsonRatioTolerance) {
        fit.family = JohnsonFamily::SN;
        fit.gamma = 0.0;
        fit.delta = 1.0;
        fit.xi = centre;
        fit.lambda = (m + n + p) / (6.0 * z);
    } else if (std::abs(log_ratio) <= kJohnsonRatioTolerance && mp > 1.0) {
        // Lognormal: z = gamma + delta * ln(x - xi)
        fit.family = JohnsonFamily::SL;
        fit.delta = 2.0 * z / std::log(mp);
        fit.gamma = fit.delta * std::log((mp - 1.0) / (p * std::sqrt(mp)));
        fit.xi = centre - 0.5 * p * (mp + 1.0) / (mp - 1.0);
        fit.lambda = 1.0;
    } else if (ratio > 1.0) {
        fit.family = JohnsonFamily::SU;
        fit.delta = 2.0 * z / std::acosh(0.5 * (mp + np));
        fit.gamma = fit.delta * std::asinh((np - mp) / (2.0 * std::sqrt(ratio - 1.0)));
        fit.lambda = 2.0 * p * std::sqrt(ratio - 1.0) / ((mp + np - 2.0) * std::sqrt(mp + np + 2.0));
        fit.xi = centre + p * (np - mp) / (2.0 * (mp + np - 2.0));
    } else {
        fit.family = JohnsonFamily::SB;
        const double pm = p / m;
        const double pn = p / n;
        const double prod = (1.0 + pm) * (1.0 + pn);
        fit.delta = z / std::acosh(0.5 * std::sqrt(prod));
        fit.gamma = fit.delta * std::asinh((pn - pm) * std::sqrt(prod - 4.0) / (2.0 * (pm * pn - 1.0)));
        fit.lambda = p * std::sqrt((prod - 2.0) * (prod - 2.0) - 4.0) / (pm * pn - 1.0);
        fit.xi = centre - 0.5 * fit.lambda + p * (pn - pm) / (2.0 * (pm * pn - 1.0));
    }
    if (!(fit.delta > 0.0 && fit.lambda > 0.0) || !std::isfinite(fit.gamma) || !std::isfinite(fit.xi)) {
        throw FitError(std::string("fit_johnson: degenerate ") + std::string(to_string(fit.family)) + " fit");
    }
    return fit;
}

JohnsonFit fit_johnson(std::span<const double> sample) {
    if (sample.size() < 4) throw FitError("fit_johnson: need at least 4 observations");
    std::vector<double> sorted(sample.begin(), sample.end());
    std::sort(sorted.begin(), sorted.end());
    if (!(sorted.back() > sorted.front())) throw FitError("fit_johnson: sample has zero variance");
    constexpr double z = 0.5;
    const auto q = [&](double zz) { return sorted_quantile(sorted, normal_cdf(zz)); };
    return fit_johnson_from_quantiles(q(-3.0 * z), q(-z), q(z), q(3.0 * z), z);
}

double johnson_forward(const JohnsonFit& fit, double x) {
    if (!fit.in_domain(x)) {
        throw DomainError("johnson_forward: x=" + std::to_string(x) + " outside the " +
                          std::string(to_string(fit.family)) + " domain");
    }
    const double u = (x - fit.xi) / fit.lambda;
    double f = u;
    switch (fit.family) {
        case JohnsonFamily::SU: f = std::asinh(u); break;
        case JohnsonFamily::SB: f = std::log(u / (1.0 - u)); break;
        case JohnsonFamily::SL: f = std::log(u); break;
        case JohnsonFamily::SN: break;
    }
    return fit.gamma + fit.delta * f;
}

double johnson_inverse(const JohnsonFit& fit, double z) {
    const double w = (z - fit.gamma) / fit.delta;
    double u = w;
    switch (fit.family) {
        case JohnsonFamily::SU: u = std::sinh(w); break;
        case JohnsonFamily::SB: u = 1.0 / (1.0 + std::exp(-w)); break;
        case JohnsonFamily::SL: u = std::exp(w); break;
        case JohnsonFamily::SN: break;
    }
    return fit.xi + fit.lambda * u;
}

double draw_ncx2(const NoncentralChiSquareParams& params, Engine& engine) {
    double y = 0.0;
    double central_df = params.df;
    if (params.noncentrality > 0.0) {
        if (params.df >= 1.0) {
            // ncx2(df, nc) = (Z + sqrt(nc))^2 + chi2(df - 1); stable for huge nc.
            boost::random::normal_distribution<double> normal;
            const double z = normal(engine) + std::sqrt(params.noncentrality);
            y = z * z;
            central_df -= 1.0;
        } else {
            // chi2(df + 2N) with N ~ Poisson(nc / 2).
            boost::random::poisson_distribution<std::int64_t, double> poisson(0.5 * params.noncentrality);
            central_df += 2.0 * static_cast<double>(poisson(engine));
        }
    }
    if (central_df > 0.0) {
        boost::random::gamma_distribution<double> gamma(0.5 * central_df, 1.0);
        y += 2.0 * gamma(engine);
    }
    return params.scale * y;
}

std::vector<double> sample_ncx2(const NoncentralChiSquareParams& params, std::size_t n,
                                std::uint64_t seed) {
    params.validate();
    if (n == 0) throw DomainError("sample_ncx2: n must be >= 1");
    auto engine = make_engine(seed);
    std::vector<double> out(n);
    for (auto& v : out) v = draw_ncx2(params, engine);
    return out;
}

}  // namespace ratecast
