#include "ratecast/gof.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include <boost/random/normal_distribution.hpp>

#include "ratecast/error.hpp"

namespace ratecast {
namespace {

constexpr std::size_t kMaxGrid = 4000;
constexpr std::size_t kChunk = 2048;
constexpr std::uint32_t kExactSizeLimit = 64;
constexpr double kSizeRatio = 1.125;

constexpr char kMagic[4] = {'R', 'C', 'N', 'T'};
constexpr std::uint32_t kFormatVersion = 1;

// Skewness bucket edges: 0.02 * 1.5^i.
constexpr int kShapeEdges = 16;

double shape_edge(int i) { return 0.02 * std::pow(1.5, i); }

// Runs fn(chunk) for chunk in [0, chunks) on a small worker pool and
// concatenates the results in chunk order, so the output does not depend on
// the number of threads.
std::vector<double> run_chunks(std::size_t chunks,
                               const std::function<std::vector<double>(std::size_t)>& fn) {
    std::vector<std::vector<double>> parts(chunks);
    const std::size_t workers =
        std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, std::max<std::size_t>(chunks, 1));
    if (workers <= 1) {
        for (std::size_t c = 0; c < chunks; ++c) parts[c] = fn(c);
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                try {
                    for (std::size_t c = next++; c < chunks; c = next++) parts[c] = fn(c);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    failure = std::current_exception();
                }
            });
        }
        for (auto& t : pool) t.join();
        if (failure) std::rethrow_exception(failure);
    }
    std::vector<double> out;
    for (auto& p : parts) out.insert(out.end(), p.begin(), p.end());
    return out;
}

std::uint64_t key_stream(const NullTableKey& key) {
    std::uint64_t h = static_cast<std::uint64_t>(key.test);
    h = splitmix64(h ^ key.n);
    h = splitmix64(h ^ static_cast<std::uint64_t>(static_cast<std::int64_t>(key.shape)));
    return h;
}

double ks_from_cdf_values(std::span<const double> cdf_sorted) {
    const double n = static_cast<double>(cdf_sorted.size());
    double d = 0.0;
    for (std::size_t i = 0; i < cdf_sorted.size(); ++i) {
        const double f = cdf_sorted[i];
        d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
    }
    return d;
}

void check_test_sample(std::span<const double> sample) {
    if (sample.size() < 4) throw TestError("goodness-of-fit test needs at least 4 observations");
    for (double v : sample) {
        if (!std::isfinite(v)) throw TestError("goodness-of-fit test: non-finite observation");
    }
}

}  // namespace

GofResult make_gof_result(double statistic, double p_value, double level) {
    GofResult r;
    r.statistic = statistic;
    r.p_value = p_value;
    r.level = level;
    r.reject = p_value < level;
    const double excess = p_value - level;
    r.near_boundary = excess > 0.0 && excess <= kNearBoundaryBand;
    return r;
}

NullTable::NullTable(std::vector<double> quantiles) : quantiles_(std::move(quantiles)) {
    if (quantiles_.size() < 2) throw Error("null table needs at least two grid points");
}

NullTable NullTable::from_replicates(std::vector<double> replicates) {
    if (replicates.size() < 2) throw Error("null table needs at least two replicates");
    std::sort(replicates.begin(), replicates.end());
    const std::size_t grid = std::min(kMaxGrid, replicates.size() - 1);
    std::vector<double> q(grid + 1);
    for (std::size_t j = 0; j <= grid; ++j) {
        q[j] = sorted_quantile(replicates, static_cast<double>(j) / static_cast<double>(grid));
    }
    return NullTable(std::move(q));
}

double NullTable::p_value(double s) const {
    const auto& q = quantiles_;
    const double grid = static_cast<double>(q.size() - 1);
    if (s < q.front()) return 1.0;
    if (s >= q.back()) return 0.0;
    const auto it = std::upper_bound(q.begin(), q.end(), s);
    const auto k = static_cast<std::size_t>(it - q.begin());
    const double lo = q[k - 1];
    const double hi = q[k];
    const double frac = hi > lo ? (s - lo) / (hi - lo) : 1.0;
    const double cdf = (static_cast<double>(k - 1) + frac) / grid;
    return std::clamp(1.0 - cdf, 0.0, 1.0);
}

NullTableCache::NullTableCache(std::optional<std::filesystem::path> directory)
    : directory_(std::move(directory)) {}

NullTableCache& NullTableCache::global() {
    static NullTableCache cache([]() -> std::optional<std::filesystem::path> {
        const char* dir = std::getenv("RATECAST_NULL_CACHE");
        if (dir && *dir) return std::filesystem::path(dir);
        return std::nullopt;
    }());
    return cache;
}

std::size_t NullTableCache::size() const {
    std::lock_guard lock(mutex_);
    return tables_.size();
}

void NullTableCache::clear() {
    std::lock_guard lock(mutex_);
    tables_.clear();
}

namespace {

std::filesystem::path table_path(const std::filesystem::path& dir, const NullTableKey& key) {
    std::ostringstream name;
    name << (key.test == NullTest::Lilliefors ? "lilliefors" : "ks_ncx2") << "_n" << key.n << "_s"
         << key.shape << "_r" << key.replicates << "_seed" << key.seed << ".bin";
    return dir / name.str();
}

template <class T>
void write_pod(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
bool read_pod(std::istream& in, T& v) {
    return static_cast<bool>(in.read(reinterpret_cast<char*>(&v), sizeof v));
}

}  // namespace

std::optional<NullTable> NullTableCache::load(const NullTableKey& key) const {
    if (!directory_) return std::nullopt;
    std::ifstream in(table_path(*directory_, key), std::ios::binary);
    if (!in) return std::nullopt;
    char magic[4];
    std::uint32_t version = 0, test = 0, n = 0, count = 0;
    std::int32_t shape = 0;
    std::uint64_t reps = 0, seed = 0;
    if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) return std::nullopt;
    if (!read_pod(in, version) || version != kFormatVersion) return std::nullopt;
    if (!read_pod(in, test) || !read_pod(in, n) || !read_pod(in, shape) || !read_pod(in, reps) ||
        !read_pod(in, seed) || !read_pod(in, count)) {
        return std::nullopt;
    }
    if (test != static_cast<std::uint32_t>(key.test) || n != key.n || shape != key.shape ||
        reps != key.replicates || seed != key.seed || count < 2 || count > kMaxGrid + 1) {
        return std::nullopt;
    }
    std::vector<double> q(count);
    if (!in.read(reinterpret_cast<char*>(q.data()), static_cast<std::streamsize>(count * sizeof(double)))) {
        return std::nullopt;
    }
    if (!std::is_sorted(q.begin(), q.end())) return std::nullopt;
    return NullTable(std::move(q));
}

void NullTableCache::store(const NullTableKey& key, const NullTable& table) const {
    if (!directory_) return;
    std::error_code ec;
    std::filesystem::create_directories(*directory_, ec);
    const auto path = table_path(*directory_, key);
    auto tmp = path;
    tmp += ".tmp" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) return;
        out.write(kMagic, 4);
        write_pod(out, kFormatVersion);
        write_pod(out, static_cast<std::uint32_t>(key.test));
        write_pod(out, key.n);
        write_pod(out, key.shape);
        write_pod(out, key.replicates);
        write_pod(out, key.seed);
        const auto& q = table.quantiles();
        write_pod(out, static_cast<std::uint32_t>(q.size()));
        out.write(reinterpret_cast<const char*>(q.data()),
                  static_cast<std::streamsize>(q.size() * sizeof(double)));
        if (!out) return;
    }
    std::filesystem::rename(tmp, path, ec);
    if (ec) std::filesystem::remove(tmp, ec);
}

std::shared_ptr<const NullTable> NullTableCache::get(const NullTableKey& key, const Builder& build) {
    std::promise<std::shared_ptr<const NullTable>> promise;
    std::shared_future<std::shared_ptr<const NullTable>> future;
    bool owner = false;
    {
        std::lock_guard lock(mutex_);
        const auto it = tables_.find(key);
        if (it != tables_.end()) {
            future = it->second;
        } else {
            future = promise.get_future().share();
            tables_.emplace(key, future);
            owner = true;
        }
    }
    if (owner) {
        try {
            auto table = load(key);
            if (!table) {
                table = build();
                store(key, *table);
            }
            promise.set_value(std::make_shared<const NullTable>(std::move(*table)));
        } catch (...) {
            {
                std::lock_guard lock(mutex_);
                tables_.erase(key);
            }
            promise.set_exception(std::current_exception());
        }
    }
    return future.get();
}

std::uint32_t null_size_bucket(std::size_t n) {
    if (n <= kExactSizeLimit) return static_cast<std::uint32_t>(n);
    std::uint32_t edge = kExactSizeLimit;
    for (int b = 1;; ++b) {
        const auto next = static_cast<std::uint32_t>(std::floor(kExactSizeLimit * std::pow(kSizeRatio, b)));
        if (next > n) return edge;
        edge = next;
    }
}

std::int32_t ncx2_shape_bucket(double skewness) {
    int b = 0;
    while (b < kShapeEdges && skewness >= shape_edge(b)) ++b;
    return b;
}

double ncx2_shape_representative(std::int32_t bucket) {
    if (bucket <= 0) return shape_edge(0) / std::sqrt(2.0);
    if (bucket >= kShapeEdges) return shape_edge(kShapeEdges - 1) * std::sqrt(1.5);
    return std::sqrt(shape_edge(bucket - 1) * shape_edge(bucket));
}

double lilliefors_statistic(std::span<const double> sample) {
    check_test_sample(sample);
    const double n = static_cast<double>(sample.size());
    const double mean = std::accumulate(sample.begin(), sample.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : sample) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / (n - 1.0));
    if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) throw TestError("Lilliefors test: sample has zero variance");
    std::vector<double> f(sample.begin(), sample.end());
    std::sort(f.begin(), f.end());
    for (auto& v : f) v = 0.5 * std::erfc(-(v - mean) / (sd * M_SQRT2));
    return ks_from_cdf_values(f);
}

double ks_ncx2_statistic(std::span<const double> sample, const NoncentralChiSquareParams& params) {
    std::vector<double> f(sample.begin(), sample.end());
    std::sort(f.begin(), f.end());
    for (auto& v : f) v = ncx2_cdf(v, params);
    return ks_from_cdf_values(f);
}

NullTable build_lilliefors_null(std::uint32_t n, std::size_t replicates, std::uint64_t seed) {
    const NullTableKey key{NullTest::Lilliefors, n, -1, replicates, seed};
    const std::uint64_t stream = key_stream(key);
    const std::size_t chunks = (replicates + kChunk - 1) / kChunk;
    const double scale = std::sqrt(static_cast<double>(n));
    auto stats = run_chunks(chunks, [&](std::size_t c) {
        auto engine = make_engine(derive_seed(seed, stream), c);
        boost::random::normal_distribution<double> normal;
        const std::size_t count = std::min(kChunk, replicates - c * kChunk);
        std::vector<double> out(count);
        std::vector<double> x(n);
        for (auto& s : out) {
            for (auto& v : x) v = normal(engine);
            s = scale * lilliefors_statistic(x);
        }
        return out;
    });
    return NullTable::from_replicates(std::move(stats));
}

NullTable build_ks_ncx2_null(std::uint32_t n, std::int32_t shape, std::size_t replicates,
                             std::uint64_t seed) {
    const NullTableKey key{NullTest::KsNcx2, n, shape, replicates, seed};
    const std::uint64_t stream = key_stream(key);
    const std::size_t chunks = (replicates + kChunk - 1) / kChunk;
    const double scale = std::sqrt(static_cast<double>(n));
    // Representative member: central chi-square with the bucket's skewness.
    const double skew = ncx2_shape_representative(shape);
    const NoncentralChiSquareParams reference{8.0 / (skew * skew), 0.0, 1.0};
    auto stats = run_chunks(chunks, [&](std::size_t c) {
        auto engine = make_engine(derive_seed(seed, stream), c);
        const std::size_t count = std::min(kChunk, replicates - c * kChunk);
        std::vector<double> out;
        out.reserve(count);
        std::vector<double> x(n);
        for (std::size_t r = 0; r < count; ++r) {
            for (auto& v : x) v = draw_ncx2(reference, engine);
            try {
                out.push_back(scale * ks_ncx2_statistic(x, fit_ncx2(x)));
            } catch (const Error&) {
                // Replicates whose refit or CDF series fails are dropped.
            }
        }
        return out;
    });
    return NullTable::from_replicates(std::move(stats));
}

GofResult lilliefors_test(std::span<const double> sample, const GofConfig& config) {
    if (!(config.level > 0.0 && config.level < 1.0)) throw TestError("significance level must lie in (0,1)");
    const double d = lilliefors_statistic(sample);
    const auto n_rep = null_size_bucket(sample.size());
    const NullTableKey key{NullTest::Lilliefors, n_rep, -1, config.lilliefors_replicates, config.seed};
    const auto table = config.cache_ref().get(
        key, [&] { return build_lilliefors_null(n_rep, config.lilliefors_replicates, config.seed); });
    const double p = table->p_value(d * std::sqrt(static_cast<double>(sample.size())));
    return make_gof_result(d, p, config.level);
}

GofResult ks_ncx2_test(std::span<const double> sample, const GofConfig& config) {
    if (!(config.level > 0.0 && config.level < 1.0)) throw TestError("significance level must lie in (0,1)");
    check_test_sample(sample);
    for (double v : sample) {
        if (!(v > 0.0)) throw DomainError("KS non-central chi-square test: values must be > 0");
    }
    const auto params = fit_ncx2(sample);
    const double d = ks_ncx2_statistic(sample, params);
    const auto n_rep = null_size_bucket(sample.size());
    const auto shape = ncx2_shape_bucket(params.skewness());
    const NullTableKey key{NullTest::KsNcx2, n_rep, shape, config.ks_replicates, config.seed};
    const auto table = config.cache_ref().get(
        key, [&] { return build_ks_ncx2_null(n_rep, shape, config.ks_replicates, config.seed); });
    const double p = table->p_value(d * std::sqrt(static_cast<double>(sample.size())));
    return make_gof_result(d, p, config.level);
}

}  // namespace ratecast
