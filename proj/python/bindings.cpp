#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "ratecast/backtest.hpp"
#include "ratecast/distributions.hpp"
#include "ratecast/error.hpp"
#include "ratecast/gof.hpp"
#include "ratecast/market_data.hpp"
#include "ratecast/models.hpp"
#include "ratecast/partition.hpp"
#include "ratecast/report.hpp"

namespace py = pybind11;
using namespace ratecast;

namespace {

GofConfig gof_config(double level, std::uint64_t seed) {
    GofConfig config;
    config.level = level;
    config.seed = seed;
    return config;
}

py::dict matrix_to_dict(const RateMatrix& m) {
    std::vector<std::string> dates;
    for (const auto& d : m.dates()) dates.push_back(format_date(d));
    std::vector<std::vector<double>> rows;
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const auto row = m.row(r);
        rows.emplace_back(row.begin(), row.end());
    }
    py::dict out;
    out["dates"] = dates;
    out["maturities"] = m.maturities();
    out["values"] = rows;
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Interest-rate partitioning, calibration and forecasting";

    auto base = py::register_exception<Error>(m, "RatecastError", PyExc_ValueError);
    py::register_exception<LoadError>(m, "LoadError", base.ptr());
    py::register_exception<KeyError>(m, "KeyError", base.ptr());
    py::register_exception<DomainError>(m, "DomainError", base.ptr());
    py::register_exception<ShiftError>(m, "ShiftError", base.ptr());
    py::register_exception<UsageError>(m, "UsageError", base.ptr());

    py::enum_<PartitionKind>(m, "PartitionKind")
        .value("NORMAL", PartitionKind::Normal)
        .value("NCX2", PartitionKind::Ncx2);
    py::enum_<ModelKind>(m, "ModelKind").value("VASICEK", ModelKind::Vasicek).value("CIR", ModelKind::Cir);

    py::class_<NoncentralChiSquareParams>(m, "Ncx2Params")
        .def(py::init([](double df, double nc, double scale) { return NoncentralChiSquareParams{df, nc, scale}; }),
             py::arg("df"), py::arg("noncentrality"), py::arg("scale") = 1.0)
        .def_readwrite("df", &NoncentralChiSquareParams::df)
        .def_readwrite("noncentrality", &NoncentralChiSquareParams::noncentrality)
        .def_readwrite("scale", &NoncentralChiSquareParams::scale)
        .def("mean", &NoncentralChiSquareParams::mean)
        .def("variance", &NoncentralChiSquareParams::variance);

    py::class_<GofResult>(m, "GofResult")
        .def_readonly("statistic", &GofResult::statistic)
        .def_readonly("p_value", &GofResult::p_value)
        .def_readonly("reject", &GofResult::reject)
        .def_readonly("level", &GofResult::level)
        .def_readonly("near_boundary", &GofResult::near_boundary);

    py::class_<ModelParams>(m, "ModelParams")
        .def(py::init([](ModelKind kind, double kappa, double theta, double sigma) {
                 return ModelParams{kind, kappa, theta, sigma};
             }),
             py::arg("kind"), py::arg("kappa"), py::arg("theta"), py::arg("sigma"))
        .def_readwrite("kind", &ModelParams::kind)
        .def_readwrite("kappa", &ModelParams::kappa)
        .def_readwrite("theta", &ModelParams::theta)
        .def_readwrite("sigma", &ModelParams::sigma);

    py::class_<CalibrationResult>(m, "CalibrationResult")
        .def_readonly("params", &CalibrationResult::params)
        .def_readonly("n_used", &CalibrationResult::n_used)
        .def_readonly("valid", &CalibrationResult::valid);

    py::class_<WindowSelection>(m, "WindowSelection")
        .def_readonly("change_point", &WindowSelection::change_point)
        .def_property_readonly("window", [](const WindowSelection& w) { return py::make_tuple(w.window.start, w.window.end); })
        .def_readonly("test", &WindowSelection::test)
        .def_readonly("forced", &WindowSelection::forced);

    m.def("load_rates", [](const std::string& path) { return matrix_to_dict(load_rate_matrix(path)); }, py::arg("path"));
    m.def("series", [](const std::string& path, const std::string& maturity) {
        return series_for(load_rate_matrix(path), maturity).rates;
    }, py::arg("path"), py::arg("maturity"));

    m.def("ncx2_cdf", &ncx2_cdf, py::arg("x"), py::arg("params"));
    m.def("fit_ncx2", [](const std::vector<double>& x) { return fit_ncx2(x); }, py::arg("sample"));
    m.def("sample_ncx2", &sample_ncx2, py::arg("params"), py::arg("n"), py::arg("seed"),
          py::call_guard<py::gil_scoped_release>());

    m.def("lilliefors_test", [](const std::vector<double>& x, double level, std::uint64_t seed) {
        return lilliefors_test(x, gof_config(level, seed));
    }, py::arg("sample"), py::arg("level") = 0.05, py::arg("seed") = 20161118, py::call_guard<py::gil_scoped_release>());
    m.def("ks_ncx2_test", [](const std::vector<double>& x, double level, std::uint64_t seed) {
        return ks_ncx2_test(x, gof_config(level, seed));
    }, py::arg("sample"), py::arg("level") = 0.05, py::arg("seed") = 20161118, py::call_guard<py::gil_scoped_release>());

    m.def("partition_json", [](const std::vector<double>& x, PartitionKind kind, double level, std::uint64_t seed) {
        return to_json(forward_partition(x, kind, gof_config(level, seed)));
    }, py::arg("series"), py::arg("kind"), py::arg("level") = 0.05, py::arg("seed") = 20161118,
          py::call_guard<py::gil_scoped_release>());
    m.def("backward_window", [](const std::vector<double>& x, PartitionKind kind, double level, std::uint64_t seed) {
        return backward_window(x, kind, gof_config(level, seed));
    }, py::arg("series"), py::arg("kind"), py::arg("level") = 0.05, py::arg("seed") = 20161118,
          py::call_guard<py::gil_scoped_release>());

    m.def("calibrate", [](ModelKind kind, const std::vector<double>& x) { return calibrate(kind, x); },
          py::arg("kind"), py::arg("sample"));
    m.def("forecast_expected", &forecast_expected, py::arg("params"), py::arg("r"), py::arg("steps") = 1);
    m.def("simulate", &simulate_exact, py::arg("params"), py::arg("r0"), py::arg("steps"), py::arg("seed"));

    m.def("ewma_forecast", [](const std::vector<double>& w, double lambda) {
        return ewma_forecast(w, {lambda, w.size()});
    }, py::arg("window"), py::arg("lambda_") = 0.94);

    m.def("fit_json", [](const std::vector<double>& x, PartitionKind kind, ModelKind model, double level,
                         std::uint64_t seed) {
        FitConfig config;
        config.gof = gof_config(level, seed);
        return to_json(fit_sample(x, kind, model, config));
    }, py::arg("series"), py::arg("kind"), py::arg("model"), py::arg("level") = 0.05, py::arg("seed") = 20161118,
          py::call_guard<py::gil_scoped_release>());

    m.def("forecast_json", [](const std::vector<double>& x, PartitionKind kind, ModelKind model, std::size_t window,
                              double lambda, bool partition, double level, std::uint64_t seed) {
        ForecastConfig config;
        config.window = window;
        config.ewma_lambda = lambda;
        config.partition = partition;
        config.gof = gof_config(level, seed);
        return to_json(forecast_rolling(x, kind, model, config));
    }, py::arg("series"), py::arg("kind"), py::arg("model"), py::arg("window") = 52, py::arg("lambda_") = 0.94,
          py::arg("partition") = true, py::arg("level") = 0.05, py::arg("seed") = 20161118,
          py::call_guard<py::gil_scoped_release>());
}
