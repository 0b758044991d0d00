// Acceptance checks: one PASS/FAIL line per criterion.
//   ratecast_acceptance [--only N[,N...]] [--workdir DIR]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

#include "cli.hpp"
#include "ratecast/backtest.hpp"
#include "ratecast/distributions.hpp"
#include "ratecast/gof.hpp"
#include "ratecast/models.hpp"
#include "ratecast/partition.hpp"
#include "ratecast/random.hpp"

namespace fs = std::filesystem;
using namespace ratecast;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v, int precision = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    return buf;
}

double median(std::vector<double> v) {
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    if (v.size() % 2 == 1) return *mid;
    return 0.5 * (*mid + *std::max_element(v.begin(), mid));
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double variance_of(const std::vector<double>& v) {
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

Outcome estimator_recovery(ModelKind kind) {
    const ModelParams truth{kind, 0.05, 5.0, 0.1};
    std::vector<double> e_theta, e_sigma, e_kappa;
    int invalid = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto path = simulate_exact(truth, truth.theta, 4999, derive_seed(1000 + static_cast<int>(kind), seed));
        const auto fit = calibrate(kind, path);
        if (!fit.valid) ++invalid;
        e_theta.push_back(std::abs(fit.params.theta - truth.theta) / truth.theta);
        e_sigma.push_back(std::abs(fit.params.sigma - truth.sigma) / truth.sigma);
        e_kappa.push_back(std::abs(fit.params.kappa - truth.kappa) / truth.kappa);
    }
    const double mt = median(e_theta), ms = median(e_sigma), mk = median(e_kappa);
    return {mt <= 0.05 && ms <= 0.05 && mk <= 0.25,
            "median rel. error theta " + fmt(mt) + " (<=0.05), sigma " + fmt(ms) + " (<=0.05), kappa " + fmt(mk) +
                " (<=0.25); invalid fits " + std::to_string(invalid) + "/100"};
}

Outcome c1() { return estimator_recovery(ModelKind::Vasicek); }

Outcome c2() {
    const ModelParams truth{ModelKind::Cir, 0.05, 5.0, 0.1};
    if (!(2 * truth.kappa * truth.theta > truth.sigma * truth.sigma)) return {false, "Feller condition violated"};
    return estimator_recovery(ModelKind::Cir);
}

Outcome c3() {
    auto engine = make_engine(3003);
    boost::random::uniform_real_distribution<double> u01(0.0, 1.0);
    int ok = 0, total = 0;
    double worst = 0.0;
    for (int set = 0; set < 10; ++set) {
        const double kappa = 0.01 + 0.99 * u01(engine);
        const double theta = 1.0 + 7.0 * u01(engine);
        const double sigma = 0.05 + 0.45 * u01(engine);
        const double r_s = theta * (0.5 + u01(engine));
        for (auto kind : {ModelKind::Vasicek, ModelKind::Cir}) {
            const ModelParams p{kind, kappa, theta, sigma};
            auto step_engine = make_engine(derive_seed(3004, static_cast<std::uint64_t>(set)), static_cast<std::uint64_t>(kind));
            std::vector<double> draws(100'000);
            for (auto& d : draws) d = exact_step(p, r_s, step_engine);
            const double se = std::sqrt(variance_of(draws) / static_cast<double>(draws.size()));
            const double z = std::abs(mean_of(draws) - forecast_expected(p, r_s, 1)) / se;
            worst = std::max(worst, z);
            ok += z <= 3.0;
            ++total;
        }
    }
    return {ok == total, std::to_string(ok) + "/" + std::to_string(total) + " parameter sets within 3 SE; largest |z| " + fmt(worst)};
}

Outcome c4() {
    const NoncentralChiSquareParams sets[] = {
        {3.0, 1.5, 1.0}, {1.0, 0.5, 1.0}, {4.0, 2.0, 1.0}, {10.0, 25.0, 0.2}, {0.6, 8.0, 3.0}};
    double worst = 0.0;
    for (std::size_t s = 0; s < std::size(sets); ++s) {
        auto draws = sample_ncx2(sets[s], 1'000'000, derive_seed(4004, s));
        std::sort(draws.begin(), draws.end());
        for (int j = 1; j <= 20; ++j) {
            const double x = draws[static_cast<std::size_t>(j * 1'000'000 / 21)];
            const double ecdf = static_cast<double>(std::upper_bound(draws.begin(), draws.end(), x) - draws.begin()) / 1e6;
            worst = std::max(worst, std::abs(ncx2_cdf(x, sets[s]) - ecdf));
        }
    }
    double closed = 0.0;
    for (double x : {0.01, 0.5, 2.0 * std::log(2.0), 3.0, 9.0, 30.0}) {
        closed = std::max(closed, std::abs(ncx2_cdf(x, {2.0, 0.0, 1.0}) + std::expm1(-0.5 * x)));
    }
    return {worst <= 3e-3 && closed <= 1e-10,
            "max |CDF - ECDF| over 100 points " + fmt(worst) + " (<=3e-3); chi2(2) closed-form error " + fmt(closed) +
                " (<=1e-10)"};
}

Outcome c5() {
    auto engine = make_engine(5005);
    boost::random::normal_distribution<double> normal;
    int lf = 0;
    std::vector<double> x(50);
    for (int t = 0; t < 10'000; ++t) {
        for (auto& v : x) v = 2.0 + 0.5 * normal(engine);
        lf += lilliefors_test(x).reject;
    }
    int ks = 0;
    const NoncentralChiSquareParams truth{4.0, 2.0, 1.0};
    for (int t = 0; t < 10'000; ++t) {
        for (auto& v : x) v = draw_ncx2(truth, engine);
        ks += ks_ncx2_test(x).reject;
    }
    const double rl = lf / 1e4, rk = ks / 1e4;
    return {std::abs(rl - 0.05) <= 0.01 && std::abs(rk - 0.05) <= 0.015,
            "Lilliefors type-I " + fmt(rl) + " (0.05+-0.01); KS-ncx2 type-I " + fmt(rk) + " (0.05+-0.015)"};
}

Outcome c6() {
    // Variance falls tenfold at index 100 (prior segment has the larger variance).
    int back = 0, fwd = 0;
    const double sd_before = std::sqrt(10.0);
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        auto engine = make_engine(6006, seed);
        boost::random::normal_distribution<double> normal;
        std::vector<double> x(150);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = 3.0 + (i < 100 ? sd_before : 1.0) * normal(engine);
        const auto w = backward_window(x, PartitionKind::Normal);
        back += std::abs(static_cast<long>(w.change_point) - 100) <= 10;
        const auto p = forward_partition(x, PartitionKind::Normal);
        fwd += std::any_of(p.groups.begin(), p.groups.end(), [](const PartitionGroup& g) {
            const long boundary = static_cast<long>(g.range.end) + 1;
            return boundary < 150 && std::abs(boundary - 100) <= 10;
        });
    }
    return {back >= 160 && fwd >= 160, "backward_window within +-10: " + std::to_string(back) +
                                           "/200, forward_partition boundary within +-10: " + std::to_string(fwd) +
                                           "/200 (each >=160)"};
}

Outcome c7() {
    auto engine = make_engine(7007);
    boost::random::uniform_real_distribution<double> u(-2.0, 2.0);
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t groups = 1 + trial % 6;
        std::vector<std::vector<double>> res(groups);
        std::size_t n = 0;
        long double all_ss = 0.0L, total = 0.0L;
        for (auto& g : res) {
            g.resize(1 + static_cast<std::size_t>(std::abs(u(engine)) * 30));
            for (auto& e : g) e = u(engine);
            n += g.size();
        }
        for (const auto& g : res) {
            long double ss = 0.0L;
            for (double e : g) ss += static_cast<long double>(e) * e;
            all_ss += ss;
            total += static_cast<long double>(g.size()) / static_cast<long double>(n) * ss;
        }
        std::vector<double> flat;
        for (const auto& g : res) flat.insert(flat.end(), g.begin(), g.end());
        worst = std::max(worst, std::abs(rmse(flat) - static_cast<double>(std::sqrt(all_ss / n))));
        worst = std::max(worst, std::abs(total_rmse(res, n) - static_cast<double>(std::sqrt(total))));

        const std::size_t m = 2 + static_cast<std::size_t>(trial % 80);
        const double lambda = 0.01 + 0.98 * (u(engine) + 2.0) / 4.0;
        std::vector<double> w(m);
        long double num = 0.0L, den = 0.0L;
        for (auto& v : w) v = 3.0 + u(engine);
        for (std::size_t i = 0; i < m; ++i) {
            const long double weight = std::pow(static_cast<long double>(lambda), static_cast<long double>(i));
            num += weight * w[m - 1 - i];
            den += weight;
        }
        worst = std::max(worst, std::abs(ewma_forecast(w, {lambda, m}) - static_cast<double>(num / den)));
    }
    return {worst <= 1e-12, "largest deviation from direct evaluation " + fmt(worst) + " (<=1e-12)"};
}

Outcome c8() {
    // Two level shifts of a CIR process; kappa and sigma stay fixed.
    const double kappa = 0.3, sigma = 0.15;
    const std::vector<Regime> schedule{{0, {ModelKind::Cir, kappa, 2.0, sigma}},
                                       {103, {ModelKind::Cir, kappa, 6.0, sigma}},
                                       {205, {ModelKind::Cir, kappa, 3.0, sigma}}};
    ForecastConfig segmented;
    segmented.window = 52;
    segmented.ewma_lambda = 0.94;
    ForecastConfig whole = segmented;
    whole.partition = false;
    int wins = 0;
    std::vector<double> seg_rmse, whole_rmse;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto path = simulate_regimes(schedule, 2.0, 307, derive_seed(8008, seed));
        const auto a = forecast_rolling(path, PartitionKind::Ncx2, ModelKind::Cir, segmented);
        const auto b = forecast_rolling(path, PartitionKind::Ncx2, ModelKind::Cir, whole);
        wins += a.rmse_model < a.rmse_ewma;
        seg_rmse.push_back(a.rmse_model);
        whole_rmse.push_back(b.rmse_model);
    }
    const double ms = median(seg_rmse), mw = median(whole_rmse);
    return {wins >= 30 && ms <= mw, "beats EWMA in " + std::to_string(wins) + "/50 seeds (>=30); median RMSE " +
                                        fmt(ms, 6) + " vs whole-window " + fmt(mw, 6)};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int call_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "ratecast");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    if (code != 0) std::cerr << err.str();
    return code;
}

Outcome c9(const fs::path& workdir) {
    const auto dir = workdir / "determinism";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const auto input = (dir / "rates.csv").string();
    if (call_cli({"simulate", "-o", input, "-m", "1/360A", "5Y", "30Y", "--model", "cir", "--kappa", "0.2", "--theta",
                  "3", "--sigma", "0.2", "--r0", "3", "--steps", "159", "--regime", "80:0.2:5:0.3", "--seed", "9"}) != 0) {
        return {false, "simulate failed"};
    }
    for (const char* run : {"run1", "run2"}) {
        if (call_cli({"forecast", "-i", input, "--model", "both", "--seed", "99", "-j", "2", "-o", (dir / run).string()}) != 0) {
            return {false, std::string("forecast ") + run + " failed"};
        }
    }
    std::size_t files = 0, same = 0;
    for (const auto& entry : fs::directory_iterator(dir / "run1")) {
        ++files;
        const auto other = dir / "run2" / entry.path().filename();
        same += fs::exists(other) && slurp(entry.path()) == slurp(other);
    }
    std::size_t files2 = 0;
    for ([[maybe_unused]] const auto& entry : fs::directory_iterator(dir / "run2")) ++files2;
    return {files > 0 && same == files && files2 == files,
            std::to_string(same) + "/" + std::to_string(files) + " report files byte-identical"};
}

Outcome c10() {
    std::vector<std::string> failures;

    const auto path = simulate_exact({ModelKind::Vasicek, 0.1, 2.0, 0.2}, 2.0, 400, 10010);
    const auto base = calibrate_vasicek(path);
    double shift_err = 0.0;
    for (double c : {-7.5, 0.3, 42.0}) {
        std::vector<double> y(path);
        for (auto& v : y) v += c;
        const auto r = calibrate_vasicek(y);
        shift_err = std::max({shift_err, std::abs(r.params.theta - base.params.theta - c),
                              std::abs(r.params.kappa - base.params.kappa), std::abs(r.params.sigma - base.params.sigma)});
    }
    if (!(shift_err <= 1e-10)) failures.push_back("shift equivariance " + fmt(shift_err));

    auto engine = make_engine(10011);
    boost::random::normal_distribution<double> normal;
    double ls_err = 0.0;
    for (int t = 0; t < 50; ++t) {
        std::vector<double> x(30);
        for (auto& v : x) v = normal(engine);
        const double d = lilliefors_statistic(x);
        const double a = 10.0 * normal(engine), b = std::exp(3.0 * normal(engine));
        for (auto& v : x) v = a + b * v;
        ls_err = std::max(ls_err, std::abs(lilliefors_statistic(x) - d));
    }
    if (!(ls_err <= 1e-10)) failures.push_back("Lilliefors invariance " + fmt(ls_err));

    const JohnsonFit fits[] = {{JohnsonFamily::SU, 0.4, 1.7, -2.0, 0.8},
                               {JohnsonFamily::SB, -0.2, 0.9, 1.0, 4.0},
                               {JohnsonFamily::SL, 0.5, 2.0, 0.5, 1.0},
                               {JohnsonFamily::SN, 0.0, 1.0, 3.0, 2.0}};
    boost::random::uniform_real_distribution<double> z_dist(-3.0, 3.0);
    double rt_err = 0.0;
    for (const auto& fit : fits) {
        for (int i = 0; i < 1000; ++i) {
            const double x = johnson_inverse(fit, z_dist(engine));
            rt_err = std::max(rt_err, std::abs(johnson_inverse(fit, johnson_forward(fit, x)) - x) / std::max(1.0, std::abs(x)));
        }
    }
    if (!(rt_err <= 1e-10)) failures.push_back("Johnson round trip " + fmt(rt_err));

    int coverage_bad = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto series = simulate_exact({ModelKind::Cir, 0.2, 3.0, 0.3}, 3.0, 60 + 7 * seed, derive_seed(10012, seed));
        for (auto kind : {PartitionKind::Normal, PartitionKind::Ncx2}) {
            const auto p = forward_partition(series, kind);
            std::vector<int> hits(series.size(), 0);
            for (const auto& g : p.groups) {
                for (std::size_t i = g.range.start; i <= g.range.end; ++i) ++hits[i];
            }
            if (p.leftover) {
                for (std::size_t i = p.leftover->start; i <= p.leftover->end; ++i) ++hits[i];
            }
            coverage_bad += std::any_of(hits.begin(), hits.end(), [](int h) { return h != 1; });
        }
    }
    if (coverage_bad != 0) failures.push_back("partition coverage broken in " + std::to_string(coverage_bad) + " cases");

    std::string detail = "shift " + fmt(shift_err) + ", Lilliefors " + fmt(ls_err) + ", Johnson " + fmt(rt_err) +
                         ", coverage exact in 40/40 partitions";
    if (!failures.empty()) {
        detail = "";
        for (const auto& f : failures) detail += (detail.empty() ? "" : "; ") + f;
    }
    return {failures.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> only;
    fs::path workdir = fs::temp_directory_path() / "ratecast-acceptance";
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--only" && i + 1 < argc) {
            std::stringstream ss(argv[++i]);
            for (std::string item; std::getline(ss, item, ',');) only.insert(std::stoi(item));
        } else if (arg == "--workdir" && i + 1 < argc) {
            workdir = argv[++i];
        } else {
            std::cerr << "usage: ratecast_acceptance [--only N[,N...]] [--workdir DIR]\n";
            return 2;
        }
    }

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"estimator recovery, Vasicek", c1},
        {"estimator recovery, CIR", c2},
        {"conditional-expectation forecast vs Monte Carlo", c3},
        {"ncx2_cdf vs empirical CDF and closed form", c4},
        {"Lilliefors and KS-ncx2 type-I error", c5},
        {"change-point detection of a variance break", c6},
        {"rmse, total_rmse and EWMA vs direct evaluation", c7},
        {"segmented CIR forecaster vs EWMA and whole-window", c8},
        {"byte-identical forecast reports", [&] { return c9(workdir); }},
        {"invariance suite", c10},
    };

    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!only.empty() && !only.count(id)) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome outcome;
        try {
            outcome = criteria[i].second();
        } catch (const std::exception& e) {
            outcome = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        failed += !outcome.pass;
        std::cout << (outcome.pass ? "PASS" : "FAIL") << " criterion " << id << ": " << criteria[i].first << " -- "
                  << outcome.detail << " [" << fmt(secs, 3) << " s]" << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
