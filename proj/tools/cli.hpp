#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "ratecast/models.hpp"

namespace ratecast::cli {

enum ExitCode : int { kOk = 0, kPartialFailure = 1, kUsage = 2, kInputError = 3 };

struct RunConfig {
    std::filesystem::path input;
    std::vector<std::string> maturities{"all"};
    std::string model = "both";  ///< vasicek | cir | both
    std::string kind = "auto";   ///< normal | ncx2 | auto
    double level = 0.05;
    std::size_t window = 52;
    double lambda = 0.94;
    std::uint64_t seed = 20161118;
    std::filesystem::path output_dir = "ratecast-out";
    std::vector<std::string> formats{"json", "csv"};
    std::size_t threads = 0;  ///< 0 selects the hardware concurrency

    /// Throws UsageError on values outside their domain.
    void validate() const;
};

struct SimulateConfig {
    std::filesystem::path output;
    std::vector<std::string> maturities{"10Y"};
    std::string model = "cir";
    double kappa = 0.05;
    double theta = 5.0;
    double sigma = 0.1;
    double r0 = 5.0;
    std::size_t steps = 307;
    std::string start_date = "2000-01-07";
    std::vector<std::string> regimes;  ///< "step:kappa:theta:sigma"
    std::uint64_t seed = 20161118;
};

/// Parses "step:kappa:theta:sigma" into a regime of the given model.
Regime parse_regime(const std::string& text, ModelKind model);

int cmd_fit(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_forecast(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_simulate(const SimulateConfig& config, std::ostream& out, std::ostream& err);

/// Entry point used by main(); returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ratecast::cli
