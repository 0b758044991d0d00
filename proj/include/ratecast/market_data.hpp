#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ratecast {

using Date = std::chrono::year_month_day;

/// Parses "DD.MM.YYYY" or "YYYY-MM-DD"; throws LoadError otherwise.
Date parse_date(std::string_view text);
std::string format_date(Date d);

/// Observed rates in percent for one maturity, in date order.
struct RateSeries {
    std::string maturity;
    std::vector<Date> dates;
    std::vector<double> rates;

    std::size_t size() const noexcept { return rates.size(); }
};

/// Dense dates x maturities grid of rates in percent (values may be negative).
class RateMatrix {
public:
    RateMatrix() = default;

    /// Validates that dates are strictly increasing, labels are unique and
    /// `values` holds exactly dates.size() * maturities.size() entries
    /// (row-major). Throws LoadError on violation.
    RateMatrix(std::vector<Date> dates, std::vector<std::string> maturities,
               std::vector<double> values);

    const std::vector<Date>& dates() const noexcept { return dates_; }
    const std::vector<std::string>& maturities() const noexcept { return maturities_; }

    std::size_t rows() const noexcept { return dates_.size(); }
    std::size_t cols() const noexcept { return maturities_.size(); }

    double at(std::size_t row, std::size_t col) const { return values_.at(row * cols() + col); }
    std::span<const double> row(std::size_t r) const {
        return std::span<const double>(values_).subspan(r * cols(), cols());
    }

    /// Column index for a label; throws KeyError when absent.
    std::size_t index_of(std::string_view maturity) const;

private:
    std::vector<Date> dates_;
    std::vector<std::string> maturities_;
    std::vector<double> values_;
};

/// Money-market (day-count labels such as "30/360A") versus term ("1Y".."50Y").
struct DatasetSplit {
    std::vector<std::string> money_market;
    std::vector<std::string> term;
};

RateMatrix load_rate_matrix(const std::filesystem::path& path);

/// `source` names the input in error messages.
RateMatrix parse_rate_matrix(std::istream& in, std::string_view source = "<stream>");

/// Writes the CSV ingestion format with ISO dates and shortest round-trip
/// decimal values, so reloading reproduces every value bit-for-bit.
void write_rate_matrix(std::ostream& out, const RateMatrix& matrix);
void save_rate_matrix(const std::filesystem::path& path, const RateMatrix& matrix);

RateSeries series_for(const RateMatrix& matrix, std::string_view maturity);

DatasetSplit split_datasets(const RateMatrix& matrix);
DatasetSplit split_datasets(std::span<const std::string> labels);

}  // namespace ratecast
