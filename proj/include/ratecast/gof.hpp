#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <vector>

#include "ratecast/distributions.hpp"

namespace ratecast {

/// Outcome of a goodness-of-fit test at a given significance level.
struct GofResult {
    double statistic = 0.0;   ///< sup-distance between empirical and reference CDF
    double p_value = 1.0;
    bool reject = false;      ///< p_value < level
    double level = 0.05;
    /// 0 < p_value - level <= 1e-2: the band in which normal sub-samples are
    /// additionally passed through a Johnson transform.
    bool near_boundary = false;
};

inline constexpr double kNearBoundaryBand = 1e-2;

GofResult make_gof_result(double statistic, double p_value, double level);

enum class NullTest : std::uint32_t { Lilliefors = 1, KsNcx2 = 2 };

/// Identifies one Monte Carlo null distribution.
struct NullTableKey {
    NullTest test = NullTest::Lilliefors;
    std::uint32_t n = 0;        ///< representative sample size of the bucket
    std::int32_t shape = -1;    ///< shape bucket (KS-ncx2 only)
    std::uint64_t replicates = 0;
    std::uint64_t seed = 0;

    auto operator<=>(const NullTableKey&) const = default;
};

/// Null distribution of sqrt(n) * D stored as an ascending quantile grid.
class NullTable {
public:
    NullTable() = default;
    explicit NullTable(std::vector<double> quantiles);

    /// Upper-tail probability of a scaled statistic; nonincreasing.
    double p_value(double scaled_statistic) const;

    const std::vector<double>& quantiles() const noexcept { return quantiles_; }

    /// Sorts the raw replicate statistics and keeps at most 4001 grid points.
    static NullTable from_replicates(std::vector<double> replicates);

private:
    std::vector<double> quantiles_;
};

/// Thread-safe cache of null tables. Concurrent readers share built tables;
/// a table is built exactly once. When a directory is configured the tables
/// are persisted there as versioned binary files.
class NullTableCache {
public:
    using Builder = std::function<NullTable()>;

    NullTableCache() = default;
    explicit NullTableCache(std::optional<std::filesystem::path> directory);

    std::shared_ptr<const NullTable> get(const NullTableKey& key, const Builder& build);

    std::size_t size() const;
    void clear();

    /// Process-wide cache; its directory comes from RATECAST_NULL_CACHE.
    static NullTableCache& global();

private:
    std::optional<NullTable> load(const NullTableKey& key) const;
    void store(const NullTableKey& key, const NullTable& table) const;

    std::optional<std::filesystem::path> directory_;
    mutable std::mutex mutex_;
    std::map<NullTableKey, std::shared_future<std::shared_ptr<const NullTable>>> tables_;
};

struct GofConfig {
    double level = 0.05;
    std::uint64_t seed = 20161118;
    std::size_t lilliefors_replicates = 100000;
    std::size_t ks_replicates = 10000;
    NullTableCache* cache = nullptr;  ///< nullptr selects NullTableCache::global()

    NullTableCache& cache_ref() const { return cache ? *cache : NullTableCache::global(); }
};

/// Sample sizes above 64 share tables in geometric buckets (ratio 1.125);
/// returns the representative size of the bucket holding n.
std::uint32_t null_size_bucket(std::size_t n);

/// Shape bucket from the skewness of the fitted non-central chi-square.
std::int32_t ncx2_shape_bucket(double skewness);
/// Skewness of the bucket's representative member.
double ncx2_shape_representative(std::int32_t bucket);

double lilliefors_statistic(std::span<const double> sample);
double ks_ncx2_statistic(std::span<const double> sample, const NoncentralChiSquareParams& params);

/// Lilliefors normality test with mean and sd estimated from the sample.
GofResult lilliefors_test(std::span<const double> sample, const GofConfig& config = {});

/// Kolmogorov-Smirnov test against the moment-fitted non-central chi-square,
/// with a parametric-bootstrap null (sample, refit, recompute).
GofResult ks_ncx2_test(std::span<const double> sample, const GofConfig& config = {});

NullTable build_lilliefors_null(std::uint32_t n, std::size_t replicates, std::uint64_t seed);
NullTable build_ks_ncx2_null(std::uint32_t n, std::int32_t shape, std::size_t replicates,
                             std::uint64_t seed);

}  // namespace ratecast
