#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "ratecast/backtest.hpp"
#include "ratecast/error.hpp"
#include "ratecast/market_data.hpp"
#include "ratecast/report.hpp"

namespace ratecast::cli {
namespace {

using nlohmann::json;

struct Failure {
    std::string maturity;
    std::string model;
    std::string kind;
    std::string message;
};

std::string file_stem(std::string_view label) {
    std::string out(label);
    for (char& c : out) {
        const bool keep = std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '_';
        if (!keep) c = '_';
    }
    return out;
}

bool wants(const RunConfig& config, std::string_view format) {
    return std::find(config.formats.begin(), config.formats.end(), format) != config.formats.end();
}

std::vector<ModelKind> models_of(const std::string& model) {
    if (model == "both") return {ModelKind::Vasicek, ModelKind::Cir};
    return {parse_model_kind(model)};
}

std::size_t thread_count(std::size_t requested, std::size_t tasks) {
    const std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
    return std::clamp<std::size_t>(requested == 0 ? hw : requested, 1, std::max<std::size_t>(tasks, 1));
}

// Runs task(i) for i in [0, count) on a small pool; results are kept by index
// so output order never depends on scheduling.
void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& task) {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < count; i = next++) task(i);
    };
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
}

std::string dataset_of(const std::string& label) {
    try {
        const auto split = split_datasets(std::span<const std::string>(&label, 1));
        return split.money_market.empty() ? "II" : "I";
    } catch (const ClassificationError&) {
        return "unclassified";
    }
}

GofConfig gof_config(const RunConfig& config) {
    GofConfig gof;
    gof.level = config.level;
    gof.seed = config.seed;
    return gof;
}

struct Loaded {
    RateMatrix matrix;
    std::vector<std::string> maturities;
    std::vector<Failure> failures;
};

Loaded load_input(const RunConfig& config) {
    Loaded loaded{load_rate_matrix(config.input), {}, {}};
    const bool all = std::find(config.maturities.begin(), config.maturities.end(), "all") != config.maturities.end();
    if (all) {
        loaded.maturities = loaded.matrix.maturities();
        return loaded;
    }
    for (const auto& m : config.maturities) {
        try {
            loaded.matrix.index_of(m);
            loaded.maturities.push_back(m);
        } catch (const KeyError& e) {
            loaded.failures.push_back({m, config.model, config.kind, e.what()});
        }
    }
    return loaded;
}

void write_errors(const std::filesystem::path& dir, const std::vector<Failure>& failures) {
    json list = json::array();
    for (const auto& f : failures) {
        list.push_back({{"maturity", f.maturity}, {"model", f.model}, {"kind", f.kind}, {"message", f.message}});
    }
    json doc{{"schema_version", kReportSchemaVersion}, {"errors", std::move(list)}};
    write_text_file(dir / "errors.json", doc.dump(2) + "\n");
}

template <class Report>
void write_report(const RunConfig& config, const std::string& stem, const Report& report) {
    if (wants(config, "json")) write_text_file(config.output_dir / (stem + ".json"), to_json(report) + "\n");
    if (wants(config, "csv")) {
        std::ostringstream csv;
        write_csv(csv, report);
        write_text_file(config.output_dir / (stem + ".csv"), csv.str());
    }
}

}  // namespace

void RunConfig::validate() const {
    if (!(level > 0.0 && level < 1.0)) throw UsageError("--level must lie in (0, 1)");
    if (window < kMinCalibrationSize) throw UsageError("--window must be >= 12");
    if (!(lambda > 0.0 && lambda < 1.0)) throw UsageError("--lambda must lie in (0, 1)");
    if (model != "vasicek" && model != "cir" && model != "both") throw UsageError("unknown --model '" + model + "'");
    if (kind != "normal" && kind != "ncx2" && kind != "auto") throw UsageError("unknown --kind '" + kind + "'");
    if (maturities.empty()) throw UsageError("--maturity needs at least one label");
    if (formats.empty()) throw UsageError("--format needs at least one of json, csv");
    for (const auto& f : formats) {
        if (f != "json" && f != "csv") throw UsageError("unknown --format '" + f + "'");
    }
}

Regime parse_regime(const std::string& text, ModelKind model) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ':');) parts.push_back(item);
    if (parts.size() != 4) throw UsageError("regime '" + text + "' must be step:kappa:theta:sigma");
    try {
        std::size_t pos = 0;
        Regime r;
        const unsigned long long step = std::stoull(parts[0], &pos);
        if (pos != parts[0].size()) throw std::invalid_argument(parts[0]);
        r.start_step = static_cast<std::size_t>(step);
        r.params.kind = model;
        r.params.kappa = std::stod(parts[1]);
        r.params.theta = std::stod(parts[2]);
        r.params.sigma = std::stod(parts[3]);
        return r;
    } catch (const std::logic_error&) {
        throw UsageError("regime '" + text + "' has a malformed number");
    }
}

int cmd_fit(const RunConfig& config, std::ostream& out, std::ostream& err) {
    config.validate();
    auto loaded = load_input(config);
    std::filesystem::create_directories(config.output_dir);

    const auto models = models_of(config.model);
    const std::vector<PartitionKind> kinds = config.kind == "auto"
        ? std::vector<PartitionKind>{PartitionKind::Normal, PartitionKind::Ncx2}
        : std::vector<PartitionKind>{parse_partition_kind(config.kind)};

    struct Task {
        std::string maturity;
        ModelKind model;
        std::vector<std::optional<FitReport>> reports;
        std::vector<Failure> failures;
    };
    std::vector<Task> tasks;
    for (const auto& m : loaded.maturities) {
        for (auto model : models) tasks.push_back({m, model, {}, {}});
    }

    FitConfig fit_config;
    fit_config.gof = gof_config(config);
    parallel_for(tasks.size(), thread_count(config.threads, tasks.size()), [&](std::size_t i) {
        auto& task = tasks[i];
        const auto series = series_for(loaded.matrix, task.maturity);
        for (auto kind : kinds) {
            try {
                task.reports.emplace_back(fit_sample(series, kind, task.model, fit_config));
            } catch (const std::exception& e) {
                task.reports.emplace_back(std::nullopt);
                task.failures.push_back({task.maturity, std::string(to_string(task.model)),
                                         std::string(to_string(kind)), e.what()});
            }
        }
    });

    std::vector<Failure> failures = loaded.failures;
    std::ostringstream summary;
    summary << "maturity,dataset,model,kind,total_rmse,groups,n_used,valid,selected\n";
    out << "maturity  model    kind    total_rmse\n";
    bool all_ok = failures.empty();
    for (const auto& task : tasks) {
        std::optional<std::size_t> best;
        for (std::size_t k = 0; k < task.reports.size(); ++k) {
            if (task.reports[k] && (!best || task.reports[k]->total_rmse < task.reports[*best]->total_rmse)) best = k;
        }
        if (!best) all_ok = false;
        if (config.kind != "auto" && !task.failures.empty()) all_ok = false;
        for (std::size_t k = 0; k < task.reports.size(); ++k) {
            if (!task.reports[k]) continue;
            const auto& r = *task.reports[k];
            const std::string model(to_string(r.model));
            const std::string kind(to_string(r.kind));
            write_report(config, "fit_" + file_stem(task.maturity) + "_" + model + "_" + kind, r);
            summary << task.maturity << ',' << dataset_of(task.maturity) << ',' << model << ',' << kind << ','
                    << format_double(r.total_rmse) << ',' << r.groups.size() << ',' << r.n_used << ','
                    << (r.valid ? 1 : 0) << ',' << (k == *best ? 1 : 0) << '\n';
            if (k == *best) {
                out << task.maturity << std::string(10 - std::min<std::size_t>(task.maturity.size(), 9), ' ') << model
                    << std::string(9 - model.size(), ' ') << kind << std::string(8 - kind.size(), ' ')
                    << format_double(r.total_rmse) << '\n';
            }
        }
        failures.insert(failures.end(), task.failures.begin(), task.failures.end());
    }
    write_text_file(config.output_dir / "fit_summary.csv", summary.str());
    write_errors(config.output_dir, failures);
    for (const auto& f : failures) err << "fit " << f.maturity << " " << f.model << " " << f.kind << ": " << f.message << '\n';
    return all_ok ? kOk : kPartialFailure;
}

int cmd_forecast(const RunConfig& config, std::ostream& out, std::ostream& err) {
    config.validate();
    auto loaded = load_input(config);
    if (loaded.matrix.rows() <= config.window) {
        throw UsageError("--window " + std::to_string(config.window) + " needs more than " +
                         std::to_string(config.window) + " observations; the input has " +
                         std::to_string(loaded.matrix.rows()));
    }
    std::filesystem::create_directories(config.output_dir);

    struct Task {
        std::string maturity;
        ModelKind model;
        PartitionKind kind;
        std::optional<ForecastReport> report;
        std::optional<Failure> failure;
    };
    std::vector<Task> tasks;
    for (const auto& m : loaded.maturities) {
        for (auto model : models_of(config.model)) {
            const auto kind = config.kind == "auto"
                ? (model == ModelKind::Cir ? PartitionKind::Ncx2 : PartitionKind::Normal)
                : parse_partition_kind(config.kind);
            tasks.push_back({m, model, kind, std::nullopt, std::nullopt});
        }
    }

    ForecastConfig fc;
    fc.window = config.window;
    fc.ewma_lambda = config.lambda;
    fc.gof = gof_config(config);
    parallel_for(tasks.size(), thread_count(config.threads, tasks.size()), [&](std::size_t i) {
        auto& task = tasks[i];
        try {
            task.report = forecast_rolling(series_for(loaded.matrix, task.maturity), task.kind, task.model, fc);
        } catch (const std::exception& e) {
            task.failure = Failure{task.maturity, std::string(to_string(task.model)), std::string(to_string(task.kind)),
                                   e.what()};
        }
    });

    std::vector<Failure> failures = loaded.failures;
    std::vector<const Task*> ordered;
    for (const auto* dataset : {"I", "II", "unclassified"}) {
        for (const auto& t : tasks) {
            if (dataset_of(t.maturity) == dataset) ordered.push_back(&t);
        }
    }

    std::ostringstream csv;
    csv << "maturity,dataset,model,kind,rmse_model,rmse_ewma,forecasts,fallbacks\n";
    json rows = json::array();
    std::optional<std::size_t> split_boundary;
    for (const auto* t : ordered) {
        if (t->failure) {
            failures.push_back(*t->failure);
            continue;
        }
        const auto& r = *t->report;
        const std::string model(to_string(r.model));
        const std::string kind(to_string(r.kind));
        const std::string dataset = dataset_of(t->maturity);
        if (!split_boundary && dataset != "I") split_boundary = rows.size();
        write_report(config, "forecast_" + file_stem(t->maturity) + "_" + model, r);
        csv << t->maturity << ',' << dataset << ',' << model << ',' << kind << ',' << format_double(r.rmse_model) << ','
            << format_double(r.rmse_ewma) << ',' << r.forecasts.size() << ',' << r.fallbacks << '\n';
        rows.push_back({{"maturity", t->maturity},
                        {"dataset", dataset},
                        {"model", model},
                        {"kind", kind},
                        {"rmse_model", r.rmse_model},
                        {"rmse_ewma", r.rmse_ewma},
                        {"forecasts", r.forecasts.size()},
                        {"fallbacks", r.fallbacks}});
        out << t->maturity << " " << model << " rmse " << format_double(r.rmse_model) << " ewma "
            << format_double(r.rmse_ewma) << '\n';
    }
    const std::size_t boundary = split_boundary.value_or(rows.size());
    json doc{{"schema_version", kReportSchemaVersion},
             {"split_boundary", boundary},
             {"split_note", "rows before split_boundary are money-market maturities (dataset I)"},
             {"rows", std::move(rows)}};
    write_text_file(config.output_dir / "forecast_comparison.csv", csv.str());
    write_text_file(config.output_dir / "forecast_comparison.json", doc.dump(2) + "\n");
    write_errors(config.output_dir, failures);
    for (const auto& f : failures) err << "forecast " << f.maturity << " " << f.model << ": " << f.message << '\n';
    return failures.empty() ? kOk : kPartialFailure;
}

int cmd_simulate(const SimulateConfig& config, std::ostream& out, std::ostream&) {
    if (config.output.empty()) throw UsageError("--output is required");
    if (config.maturities.empty()) throw UsageError("--maturity needs at least one label");
    const auto model = parse_model_kind(config.model);
    std::vector<Regime> schedule{{0, {model, config.kappa, config.theta, config.sigma}}};
    for (const auto& text : config.regimes) schedule.push_back(parse_regime(text, model));
    std::stable_sort(schedule.begin(), schedule.end(),
                     [](const Regime& a, const Regime& b) { return a.start_step < b.start_step; });

    Date start;
    try {
        start = parse_date(config.start_date);
    } catch (const Error& e) {
        throw UsageError(std::string("--start-date: ") + e.what());
    }
    std::vector<Date> dates;
    dates.reserve(config.steps + 1);
    for (std::size_t i = 0; i <= config.steps; ++i) {
        dates.emplace_back(std::chrono::sys_days(start) + std::chrono::days(7 * static_cast<long>(i)));
    }

    std::vector<std::vector<double>> paths;
    try {
        for (std::size_t j = 0; j < config.maturities.size(); ++j) {
            paths.push_back(simulate_regimes(schedule, config.r0, config.steps, derive_seed(config.seed, j)));
        }
    } catch (const DomainError& e) {
        throw UsageError(std::string("invalid simulation parameters: ") + e.what());
    }
    std::vector<double> values;
    values.reserve(dates.size() * paths.size());
    for (std::size_t r = 0; r < dates.size(); ++r) {
        for (const auto& p : paths) values.push_back(p[r]);
    }
    const RateMatrix matrix(std::move(dates), config.maturities, std::move(values));
    if (config.output.has_parent_path()) std::filesystem::create_directories(config.output.parent_path());
    std::ostringstream text;
    write_rate_matrix(text, matrix);
    write_text_file(config.output, text.str());
    out << config.output.string() << '\n';
    return kOk;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Segmented Vasicek/CIR calibration and rolling interest-rate forecasts"};
    app.name("ratecast");
    app.require_subcommand(1);

    RunConfig run;
    SimulateConfig sim;
    auto add_run_options = [&](CLI::App* sub) {
        sub->add_option("-i,--input", run.input, "Rate matrix CSV (date column, one column per maturity)")
            ->required()
            ->check(CLI::ExistingFile);
        sub->add_option("-m,--maturity", run.maturities, "Maturity labels, or 'all'")->capture_default_str();
        sub->add_option("--model", run.model, "vasicek, cir or both")
            ->check(CLI::IsMember({"vasicek", "cir", "both"}))
            ->capture_default_str();
        sub->add_option("--kind", run.kind, "Partition distribution: normal, ncx2 or auto")
            ->check(CLI::IsMember({"normal", "ncx2", "auto"}))
            ->capture_default_str();
        sub->add_option("--level", run.level, "Significance level of the homogeneity tests")->capture_default_str();
        sub->add_option("--seed", run.seed, "Seed of the Monte Carlo null tables")->capture_default_str();
        sub->add_option("-o,--output-dir", run.output_dir, "Directory for report files")->capture_default_str();
        sub->add_option("--format", run.formats, "Report formats: json, csv")->capture_default_str();
        sub->add_option("-j,--threads", run.threads, "Worker threads (0 = all cores)")->capture_default_str();
    };

    auto* fit = app.add_subcommand("fit", "Segment each series and calibrate per sub-sample");
    add_run_options(fit);
    auto* forecast = app.add_subcommand("forecast", "Rolling one-step forecasts against an EWMA baseline");
    add_run_options(forecast);
    forecast->add_option("-w,--window", run.window, "Initial rolling window size m")->capture_default_str();
    forecast->add_option("--lambda", run.lambda, "EWMA decay rate")->capture_default_str();

    auto* simulate = app.add_subcommand("simulate", "Write a synthetic rate matrix from exact transitions");
    simulate->add_option("-o,--output", sim.output, "Output CSV path")->required();
    simulate->add_option("-m,--maturity", sim.maturities, "Maturity labels, one path each")->capture_default_str();
    simulate->add_option("--model", sim.model, "vasicek or cir")
        ->check(CLI::IsMember({"vasicek", "cir"}))
        ->capture_default_str();
    simulate->add_option("--kappa", sim.kappa)->capture_default_str();
    simulate->add_option("--theta", sim.theta)->capture_default_str();
    simulate->add_option("--sigma", sim.sigma)->capture_default_str();
    simulate->add_option("--r0", sim.r0, "Initial rate")->capture_default_str();
    simulate->add_option("--steps", sim.steps, "Transitions per path")->capture_default_str();
    simulate->add_option("--start-date", sim.start_date, "Date of the first row; rows are weekly")
        ->capture_default_str();
    simulate->add_option("--regime", sim.regimes, "Parameter change 'step:kappa:theta:sigma' (repeatable)");
    simulate->add_option("--seed", sim.seed)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (fit->parsed()) return cmd_fit(run, out, err);
        if (forecast->parsed()) return cmd_forecast(run, out, err);
        return cmd_simulate(sim, out, err);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const LoadError& e) {
        err << "input error: " << e.what() << '\n';
        return kInputError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    }
}

}  // namespace ratecast::cli
