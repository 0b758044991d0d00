#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "ratecast/backtest.hpp"

namespace ratecast {

inline constexpr int kReportSchemaVersion = 1;

/// Shortest round-trip decimal form; "nan"/"inf" for non-finite values.
std::string format_double(double value);

std::string to_json(const CalibrationResult& result, int indent = 2);
std::string to_json(const Partition& partition, int indent = 2);
std::string to_json(const FitReport& report, int indent = 2);
std::string to_json(const ForecastReport& report, int indent = 2);

/// One row per observation: index,date,observed,fitted,residual,group.
void write_csv(std::ostream& out, const FitReport& report);
/// One row per forecast: index,date,realized,model,ewma,window_size,change_point,fallback,johnson.
void write_csv(std::ostream& out, const ForecastReport& report);

/// Writes text to path through a temporary file in the same directory.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace ratecast
