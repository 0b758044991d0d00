#include "ratecast/partition.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "ratecast/error.hpp"

namespace ratecast {
namespace {

bool zero_variance(std::span<const double> sample) {
    for (double v : sample) {
        if (v != sample.front()) return false;
    }
    return true;
}

void require_length(std::size_t n) {
    if (n < kMinGroupSize) {
        throw DomainError("series needs at least " + std::to_string(kMinGroupSize) + " observations, got " +
                          std::to_string(n));
    }
}

}  // namespace

std::string_view to_string(PartitionKind kind) noexcept {
    return kind == PartitionKind::Normal ? "normal" : "ncx2";
}

PartitionKind parse_partition_kind(std::string_view text) {
    if (text == "normal") return PartitionKind::Normal;
    if (text == "ncx2") return PartitionKind::Ncx2;
    throw UsageError("unknown partition kind '" + std::string(text) + "'");
}

GofResult homogeneity_test(std::span<const double> sample, PartitionKind kind, const GofConfig& config) {
    if (zero_variance(sample)) return make_gof_result(0.0, 1.0, config.level);
    try {
        return kind == PartitionKind::Normal ? lilliefors_test(sample, config) : ks_ncx2_test(sample, config);
    } catch (const DomainError&) {
        throw;  // non-positive input to the ncx2 test is a caller error
    } catch (const Error&) {
        return make_gof_result(1.0, 0.0, config.level);
    }
}

std::optional<std::pair<JohnsonFit, std::vector<double>>> johnson_normalize(
    std::span<const double> sample, const GofConfig& config) {
    const double n = static_cast<double>(sample.size());
    const double mean = std::accumulate(sample.begin(), sample.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : sample) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / (n - 1.0));
    try {
        const auto fit = fit_johnson(sample);
        std::vector<double> out;
        out.reserve(sample.size());
        for (double v : sample) {
            if (!fit.in_domain(v)) return std::nullopt;
            out.push_back(sd * johnson_forward(fit, v) + mean);
        }
        if (homogeneity_test(out, PartitionKind::Normal, config).reject) return std::nullopt;
        return std::pair{fit, std::move(out)};
    } catch (const Error&) {
        return std::nullopt;
    }
}

Partition forward_partition(std::span<const double> series, PartitionKind kind, const GofConfig& config) {
    const std::size_t n = series.size();
    require_length(n);
    Partition part;
    part.kind = kind;
    part.values.assign(series.begin(), series.end());

    std::size_t start = 0;
    while (start < n) {
        if (n - start < kMinGroupSize) {
            part.leftover = IndexRange{start, n - 1};
            break;
        }
        PartitionGroup group;
        std::size_t end = start + kMinGroupSize - 1;
        group.test = homogeneity_test(series.subspan(start, end - start + 1), kind, config);
        if (group.test.reject) {
            group.forced = true;
        } else {
            while (end + 1 < n) {
                const auto next = homogeneity_test(series.subspan(start, end - start + 2), kind, config);
                if (next.reject) break;
                ++end;
                group.test = next;
            }
        }
        group.range = IndexRange{start, end};

        if (kind == PartitionKind::Normal && !group.forced && group.test.near_boundary) {
            if (auto normalized = johnson_normalize(series.subspan(start, group.range.size()), config)) {
                group.johnson_applied = true;
                group.johnson = normalized->first;
                std::copy(normalized->second.begin(), normalized->second.end(),
                          part.values.begin() + static_cast<std::ptrdiff_t>(start));
            }
        }
        part.groups.push_back(group);
        start = end + 1;
    }
    return part;
}

Partition forward_partition(const RateSeries& series, PartitionKind kind, const GofConfig& config) {
    return forward_partition(std::span<const double>(series.rates), kind, config);
}

WindowSelection backward_window(std::span<const double> series, PartitionKind kind, const GofConfig& config) {
    const std::size_t n = series.size();
    require_length(n);
    const std::size_t last = n - 1;

    WindowSelection sel;
    sel.kind = kind;
    std::size_t start = n - kMinGroupSize;
    sel.test = homogeneity_test(series.subspan(start), kind, config);
    if (sel.test.reject) {
        sel.forced = true;
    } else {
        while (start > 0) {
            const auto next = homogeneity_test(series.subspan(start - 1), kind, config);
            if (next.reject) break;
            --start;
            sel.test = next;
        }
    }
    sel.change_point = start;
    sel.window = IndexRange{start, last};
    return sel;
}

WindowSelection backward_window(const RateSeries& series, PartitionKind kind, const GofConfig& config) {
    return backward_window(std::span<const double>(series.rates), kind, config);
}

}  // namespace ratecast
