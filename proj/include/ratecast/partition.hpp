#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "ratecast/distributions.hpp"
#include "ratecast/gof.hpp"
#include "ratecast/market_data.hpp"

namespace ratecast {

enum class PartitionKind { Normal, Ncx2 };

std::string_view to_string(PartitionKind kind) noexcept;
PartitionKind parse_partition_kind(std::string_view text);

inline constexpr std::size_t kMinGroupSize = 4;

/// Inclusive, 0-based index range.
struct IndexRange {
    std::size_t start = 0;
    std::size_t end = 0;

    std::size_t size() const noexcept { return end - start + 1; }
    bool operator==(const IndexRange&) const = default;
};

struct PartitionGroup {
    IndexRange range;
    GofResult test;                   ///< last test evaluated on the closed group
    bool forced = false;              ///< minimal group emitted although it rejects
    bool johnson_applied = false;     ///< values replaced by the Johnson-normalised sample
    std::optional<JohnsonFit> johnson;
};

/// Contiguous sub-samples, each homogeneous under the chosen test.
struct Partition {
    PartitionKind kind = PartitionKind::Normal;
    std::vector<PartitionGroup> groups;
    std::optional<IndexRange> leftover;  ///< trailing remainder shorter than 4
    /// Input values with Johnson-normalised replacements inside marked groups.
    std::vector<double> values;
};

/// Latest homogeneous window ending at the final observation.
struct WindowSelection {
    std::size_t change_point = 0;
    IndexRange window;
    PartitionKind kind = PartitionKind::Normal;
    GofResult test;
    bool forced = false;
};

/// Runs the test for `kind`. Zero-variance samples are treated as
/// homogeneous (p-value 1); any other test failure counts as a rejection.
GofResult homogeneity_test(std::span<const double> sample, PartitionKind kind, const GofConfig& config);

/// Johnson-normalises a sample and maps it back to N(mean, sd) of the
/// original. Returns nullopt when the fit fails, a value falls outside the
/// fitted support, or the normalised sample is rejected by Lilliefors.
std::optional<std::pair<JohnsonFit, std::vector<double>>> johnson_normalize(
    std::span<const double> sample, const GofConfig& config);

Partition forward_partition(std::span<const double> series, PartitionKind kind, const GofConfig& config = {});
Partition forward_partition(const RateSeries& series, PartitionKind kind, const GofConfig& config = {});

WindowSelection backward_window(std::span<const double> series, PartitionKind kind, const GofConfig& config = {});
WindowSelection backward_window(const RateSeries& series, PartitionKind kind, const GofConfig& config = {});

}  // namespace ratecast
