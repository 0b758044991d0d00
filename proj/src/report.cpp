#include "ratecast/report.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "ratecast/error.hpp"

namespace ratecast {
namespace {

using nlohmann::json;

json number(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;
}

json shift_json(const ShiftSpec& s) {
    return {{"mode", std::string(to_string(s.mode))}, {"alpha", number(s.alpha)}};
}

json params_json(const ModelParams& p) {
    return {{"model", std::string(to_string(p.kind))},
            {"kappa", number(p.kappa)},
            {"theta", number(p.theta)},
            {"sigma", number(p.sigma)}};
}

json range_json(const IndexRange& r) { return {{"start", r.start}, {"end", r.end}, {"size", r.size()}}; }

json gof_json(const GofResult& g) {
    return {{"statistic", number(g.statistic)}, {"p_value", number(g.p_value)}, {"reject", g.reject},
            {"level", number(g.level)},         {"near_boundary", g.near_boundary}};
}

json calibration_json(const CalibrationResult& c) {
    return {{"params", params_json(c.params)}, {"shift", shift_json(c.shift)}, {"n_used", c.n_used},
            {"valid", c.valid}};
}

json partition_json(const Partition& p) {
    json groups = json::array();
    for (const auto& g : p.groups) {
        json item{{"range", range_json(g.range)}, {"test", gof_json(g.test)}, {"forced", g.forced},
                  {"johnson_applied", g.johnson_applied}};
        if (g.johnson) {
            item["johnson"] = {{"family", std::string(to_string(g.johnson->family))},
                               {"gamma", number(g.johnson->gamma)},
                               {"delta", number(g.johnson->delta)},
                               {"xi", number(g.johnson->xi)},
                               {"lambda", number(g.johnson->lambda)}};
        }
        groups.push_back(std::move(item));
    }
    json out{{"kind", std::string(to_string(p.kind))}, {"groups", std::move(groups)}};
    out["leftover"] = p.leftover ? range_json(*p.leftover) : json(nullptr);
    return out;
}

json series_json(const std::vector<double>& values) {
    json out = json::array();
    for (double v : values) out.push_back(number(v));
    return out;
}

std::string date_or_empty(const std::vector<Date>& dates, std::size_t i) {
    return i < dates.size() ? format_date(dates[i]) : std::string();
}

}  // namespace

std::string format_double(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

std::string to_json(const CalibrationResult& result, int indent) { return calibration_json(result).dump(indent); }

std::string to_json(const Partition& partition, int indent) { return partition_json(partition).dump(indent); }

std::string to_json(const FitReport& r, int indent) {
    json groups = json::array();
    for (const auto& g : r.groups) {
        groups.push_back({{"range", range_json(g.range)},
                          {"calibration", calibration_json(g.calibration)},
                          {"epsilon", number(g.epsilon)},
                          {"merged_groups", g.merged_groups},
                          {"johnson_applied", g.johnson_applied},
                          {"residuals", series_json(g.residuals)}});
    }
    json dates = json::array();
    for (const auto& d : r.dates) dates.push_back(format_date(d));
    json out{{"schema_version", kReportSchemaVersion},
             {"type", "fit"},
             {"maturity", r.maturity},
             {"kind", std::string(to_string(r.kind))},
             {"model", std::string(to_string(r.model))},
             {"shift", shift_json(r.shift)},
             {"valid", r.valid},
             {"total_rmse", number(r.total_rmse)},
             {"total_rmse_definition",
              "sqrt(sum_k (n_k/n) * sum_h e_h^2); the inner sum is not divided by n_k, so this is not the "
              "weighted mean of the per-group epsilon values"},
             {"n_used", r.n_used},
             {"partition", partition_json(r.partition)},
             {"groups", std::move(groups)},
             {"dates", std::move(dates)},
             {"observed", series_json(r.observed)},
             {"fitted", series_json(r.fitted)}};
    return out.dump(indent);
}

std::string to_json(const ForecastReport& r, int indent) {
    json rows = json::array();
    for (const auto& f : r.forecasts) {
        rows.push_back({{"index", f.index},
                        {"date", f.date ? json(format_date(*f.date)) : json(nullptr)},
                        {"realized", number(f.realized)},
                        {"model", number(f.model)},
                        {"ewma", number(f.ewma)},
                        {"window_size", f.window_size},
                        {"change_point", f.change_point},
                        {"fallback", f.fallback},
                        {"johnson_applied", f.johnson_applied},
                        {"params", params_json(f.params)}});
    }
    json out{{"schema_version", kReportSchemaVersion},
             {"type", "forecast"},
             {"maturity", r.maturity},
             {"kind", std::string(to_string(r.kind))},
             {"model", std::string(to_string(r.model))},
             {"config",
              {{"window", r.config.window},
               {"ewma_lambda", number(r.config.ewma_lambda)},
               {"level", number(r.config.gof.level)},
               {"seed", r.config.gof.seed},
               {"min_group_size", r.config.min_group_size},
               {"partition", r.config.partition}}},
             {"rmse_model", number(r.rmse_model)},
             {"rmse_ewma", number(r.rmse_ewma)},
             {"fallbacks", r.fallbacks},
             {"forecasts", std::move(rows)}};
    return out.dump(indent);
}

void write_csv(std::ostream& out, const FitReport& r) {
    std::vector<long> group_of(r.observed.size(), -1);
    for (std::size_t k = 0; k < r.groups.size(); ++k) {
        for (std::size_t h = r.groups[k].range.start; h <= r.groups[k].range.end; ++h) {
            group_of[h] = static_cast<long>(k);
        }
    }
    out << "index,date,observed,fitted,residual,group\n";
    for (std::size_t i = 0; i < r.observed.size(); ++i) {
        out << i << ',' << date_or_empty(r.dates, i) << ',' << format_double(r.observed[i]) << ',';
        if (group_of[i] >= 0) {
            out << format_double(r.fitted[i]) << ',' << format_double(r.observed[i] - r.fitted[i]) << ','
                << group_of[i];
        } else {
            out << ",,";
        }
        out << '\n';
    }
}

void write_csv(std::ostream& out, const ForecastReport& r) {
    out << "index,date,realized,model,ewma,window_size,change_point,fallback,johnson\n";
    for (const auto& f : r.forecasts) {
        out << f.index << ',' << (f.date ? format_date(*f.date) : std::string()) << ',' << format_double(f.realized)
            << ',' << format_double(f.model) << ',' << format_double(f.ewma) << ',' << f.window_size << ','
            << f.change_point << ',' << (f.fallback ? 1 : 0) << ',' << (f.johnson_applied ? 1 : 0) << '\n';
    }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write '" + tmp.string() + "'");
        out << text;
        if (!out.flush()) throw Error("write failed for '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace ratecast
