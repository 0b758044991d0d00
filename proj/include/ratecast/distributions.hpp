#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "ratecast/random.hpp"

namespace ratecast {

/// X = scale * Y with Y a standard non-central chi-square(df, noncentrality).
struct NoncentralChiSquareParams {
    double df = 1.0;
    double noncentrality = 0.0;
    double scale = 1.0;

    /// Throws DomainError unless df > 0, noncentrality >= 0, scale > 0.
    void validate() const;

    double mean() const noexcept { return scale * (df + noncentrality); }
    double variance() const noexcept { return 2.0 * scale * scale * (df + 2.0 * noncentrality); }
    double third_central_moment() const noexcept {
        return 8.0 * scale * scale * scale * (df + 3.0 * noncentrality);
    }
    double skewness() const noexcept;
};

enum class JohnsonFamily { SU, SB, SL, SN };

std::string_view to_string(JohnsonFamily family) noexcept;

/// Johnson transform z = gamma + delta * f((x - xi) / lambda).
struct JohnsonFit {
    JohnsonFamily family = JohnsonFamily::SN;
    double gamma = 0.0;
    double delta = 1.0;
    double xi = 0.0;
    double lambda = 1.0;

    /// True when x lies inside the support of the transform.
    bool in_domain(double x) const noexcept;
};

double normal_cdf(double x, double mean = 0.0, double sd = 1.0);

/// Standard normal quantile.
double normal_quantile(double p);

/// Poisson(noncentrality/2)-mixture of central chi-square CDFs, summed
/// outward from the Poisson mode until the neglected Poisson mass is below
/// 1e-12. Throws NumericError past 10^4 terms.
double ncx2_cdf(double x, const NoncentralChiSquareParams& params);

/// Three-moment match of (scale, df, noncentrality); falls back to two
/// moments with zero noncentrality when the cubic system has no admissible
/// root.
NoncentralChiSquareParams fit_ncx2(std::span<const double> sample);

/// Quantile-ratio selection of the Johnson family using the sample quantiles
/// at z = -3/2, -1/2, 1/2, 3/2.
JohnsonFit fit_johnson(std::span<const double> sample);

/// Fit from the four quantiles x(-3z), x(-z), x(z), x(3z).
JohnsonFit fit_johnson_from_quantiles(double x_m3z, double x_mz, double x_z, double x_3z,
                                      double z = 0.5);

double johnson_forward(const JohnsonFit& fit, double x);
double johnson_inverse(const JohnsonFit& fit, double z);

double draw_ncx2(const NoncentralChiSquareParams& params, Engine& engine);

/// n >= 1 draws, reproducible for a given seed.
std::vector<double> sample_ncx2(const NoncentralChiSquareParams& params, std::size_t n,
                                std::uint64_t seed);

/// Linear-interpolated empirical quantile of an ascending-sorted sample.
double sorted_quantile(std::span<const double> sorted, double prob);

}  // namespace ratecast
