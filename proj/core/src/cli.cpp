#include "arhgls/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "arhgls/arh_sim.hpp"
#include "arhgls/errors.hpp"
#include "arhgls/harness.hpp"

namespace arhgls {
namespace {

namespace fs = std::filesystem;

struct GlobalArgs {
    std::string config_path;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 0;
    bool rolling = false;
};

ExperimentConfig make_config(const GlobalArgs& g) {
    ExperimentConfig cfg =
        g.config_path.empty() ? ExperimentConfig{} : load_config_file(g.config_path);
    if (g.seed_set) cfg.seed = g.seed;
    cfg.threads = g.threads;
    cfg.rolling = g.rolling;
    return cfg;
}

std::string out_file(const GlobalArgs& g, const char* name) {
    fs::create_directories(g.out_dir);
    return (fs::path(g.out_dir) / name).string();
}

long row_long(const std::string& file, std::size_t row, const std::string& cell) {
    try {
        std::size_t pos = 0;
        const long v = std::stol(cell, &pos);
        if (pos != cell.size()) throw std::invalid_argument(cell);
        return v;
    } catch (const std::exception&) {
        throw domain_error("file '" + file + "' row " + std::to_string(row) +
                           ": expected an integer, got '" + cell + "'");
    }
}

double row_real(const std::string& file, std::size_t row, const std::string& cell) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(cell, &pos);
        if (pos != cell.size()) throw std::invalid_argument(cell);
        return v;
    } catch (const std::exception&) {
        throw domain_error("file '" + file + "' row " + std::to_string(row) +
                           ": expected a number, got '" + cell + "'");
    }
}

/// Header-checked comma-separated reader; every row must have the header's
/// column count.
std::vector<std::vector<std::string>> read_rows(const std::string& path,
                                                const std::string& header) {
    std::ifstream in(path);
    if (!in) throw domain_error("cannot open input file '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) {
        throw domain_error("file '" + path + "' is empty");
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != header) {
        throw domain_error("file '" + path + "': expected header '" + header +
                           "', got '" + line + "'");
    }
    const auto ncols =
        static_cast<std::size_t>(std::count(header.begin(), header.end(), ',')) + 1;
    std::vector<std::vector<std::string>> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (line.back() == ',') cells.push_back("");
        if (cells.size() != ncols) {
            throw domain_error("file '" + path + "' row " + std::to_string(lineno) +
                               ": expected " + std::to_string(ncols) + " columns");
        }
        rows.push_back(std::move(cells));
    }
    return rows;
}

/// responses/errors schema: time,mode_index,coefficient with 1-based indices.
std::vector<HFunction> read_coefficient_csv(const std::string& path, Interval interval) {
    const auto rows = read_rows(path, "time,mode_index,coefficient");
    int N = 0;
    int K = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        N = std::max(N, static_cast<int>(row_long(path, i + 2, rows[i][0])));
        K = std::max(K, static_cast<int>(row_long(path, i + 2, rows[i][1])));
    }
    if (N < 1 || K < 1) throw domain_error("file '" + path + "' has no data rows");
    const double nan = std::numeric_limits<double>::quiet_NaN();
    Eigen::MatrixXd coeffs = Eigen::MatrixXd::Constant(N, K, nan);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const int n = static_cast<int>(row_long(path, i + 2, rows[i][0]));
        const int k = static_cast<int>(row_long(path, i + 2, rows[i][1]));
        if (n < 1 || k < 1) {
            throw domain_error("file '" + path + "' row " + std::to_string(i + 2) +
                               ": indices are 1-based");
        }
        if (!std::isnan(coeffs(n - 1, k - 1))) {
            throw domain_error("file '" + path + "' row " + std::to_string(i + 2) +
                               ": duplicate (time, mode_index) entry");
        }
        coeffs(n - 1, k - 1) = row_real(path, i + 2, rows[i][2]);
    }
    if (coeffs.hasNaN()) {
        throw domain_error("file '" + path +
                           "': missing (time, mode_index) combinations");
    }
    std::vector<HFunction> out;
    out.reserve(N);
    for (int n = 0; n < N; ++n) {
        out.emplace_back(coeffs.row(n).transpose(), interval);
    }
    return out;
}

/// panel schema: time,param_index,mode_index,value (diagonal entries).
RegressorPanel read_panel_csv(const std::string& path) {
    const auto rows = read_rows(path, "time,param_index,mode_index,value");
    int N = 0;
    int p = 0;
    int K = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        N = std::max(N, static_cast<int>(row_long(path, i + 2, rows[i][0])));
        p = std::max(p, static_cast<int>(row_long(path, i + 2, rows[i][1])));
        K = std::max(K, static_cast<int>(row_long(path, i + 2, rows[i][2])));
    }
    if (N < 1 || p < 1 || K < 1) {
        throw domain_error("file '" + path + "' has no data rows");
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<Eigen::MatrixXd> diag(N, Eigen::MatrixXd::Constant(p, K, nan));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const int n = static_cast<int>(row_long(path, i + 2, rows[i][0]));
        const int j = static_cast<int>(row_long(path, i + 2, rows[i][1]));
        const int k = static_cast<int>(row_long(path, i + 2, rows[i][2]));
        if (n < 1 || j < 1 || k < 1) {
            throw domain_error("file '" + path + "' row " + std::to_string(i + 2) +
                               ": indices are 1-based");
        }
        if (!std::isnan(diag[n - 1](j - 1, k - 1))) {
            throw domain_error("file '" + path + "' row " + std::to_string(i + 2) +
                               ": duplicate (time, param_index, mode_index) entry");
        }
        diag[n - 1](j - 1, k - 1) = row_real(path, i + 2, rows[i][3]);
    }
    RegressorPanel panel;
    panel.entries.resize(N);
    for (int n = 0; n < N; ++n) {
        if (diag[n].hasNaN()) {
            throw domain_error("file '" + path +
                               "': missing (time, param_index, mode_index) entries");
        }
        for (int j = 0; j < p; ++j) {
            panel.entries[n].push_back(
                RegressorOperator::diagonal(diag[n].row(j).transpose()));
        }
    }
    panel.validate();
    return panel;
}

void write_coefficient_csv(const std::vector<HFunction>& fs, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw domain_error("cannot open output file '" + path + "'");
    out << "time,mode_index,coefficient\n";
    for (std::size_t n = 0; n < fs.size(); ++n) {
        for (int k = 0; k < fs[n].modes(); ++k) {
            out << (n + 1) << "," << (k + 1) << "," << format_double(fs[n].coeffs[k])
                << "\n";
        }
    }
}

void write_panel_csv(const RegressorPanel& panel, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw domain_error("cannot open output file '" + path + "'");
    out << "time,param_index,mode_index,value\n";
    for (int n = 0; n < panel.N(); ++n) {
        for (int j = 0; j < panel.p(); ++j) {
            const Eigen::VectorXd d = panel.entries[n][j].diag();
            for (int k = 0; k < d.size(); ++k) {
                out << (n + 1) << "," << (j + 1) << "," << (k + 1) << ","
                    << format_double(d[k]) << "\n";
            }
        }
    }
}

void write_prediction_csv(const HFunction& f, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw domain_error("cannot open output file '" + path + "'");
    out << "mode_index,coefficient\n";
    for (int k = 0; k < f.modes(); ++k) {
        out << (k + 1) << "," << format_double(f.coeffs[k]) << "\n";
    }
}

void print_fit_diagnostics(const PluginFit& pf) {
    std::cout << "k_N = " << pf.k_N << "\n";
    std::cout << "degenerate_ols = " << (pf.degenerate_ols ? "true" : "false") << "\n";
    std::cout << "loss = " << format_double(pf.fit.loss) << "\n";
    const int show = std::min(5, pf.eigen.dim());
    std::cout << "leading_eigenvalues =";
    for (int j = 0; j < show; ++j) {
        std::cout << (j ? "," : " ") << format_double(pf.eigen.values[j]);
    }
    std::cout << "\n";
    std::cout << "rho_hat_diag =";
    for (int j = 0; j < pf.k_N && j < pf.rho_hat.coeffs.cols(); ++j) {
        std::cout << (j ? "," : " ") << format_double(pf.rho_hat.coeffs(j, j));
    }
    std::cout << "\n";
}

int run_simulate(const GlobalArgs& g) {
    const ExperimentConfig cfg = make_config(g);
    const RegressorPanel panel = build_model_regressors(cfg.model, cfg.N, cfg.model.K);
    const std::vector<HFunction> beta = cfg.model.beta_truth(cfg.interval);
    const ArhSpec arh(cfg.model.rho(), cfg.model.r_delta());
    RngStream rng = RngStream::for_repetition(cfg.seed, 0);
    const auto errors = simulate_arh1(arh, cfg.N, 0, cfg.interval, rng);
    const auto Y = simulate_response(panel, beta, errors);

    write_coefficient_csv(Y, out_file(g, "responses.csv"));
    write_coefficient_csv(errors, out_file(g, "errors.csv"));
    write_panel_csv(panel, out_file(g, "panel.csv"));
    std::cout << "simulated " << cfg.N << " observations with " << cfg.model.K
              << " modes (model " << to_string(cfg.model.name) << ")\n";
    return 0;
}

int run_fit(const GlobalArgs& g, std::string responses_path, std::string panel_path) {
    const ExperimentConfig cfg = make_config(g);
    if (responses_path.empty()) responses_path = out_file(g, "responses.csv");
    if (panel_path.empty()) panel_path = out_file(g, "panel.csv");
    const auto Y = read_coefficient_csv(responses_path, cfg.interval);
    const RegressorPanel panel = read_panel_csv(panel_path);
    const PluginFit pf = plugin_gls(panel, Y, cfg.plugin_options());
    write_beta_csv(pf.fit.beta_hat, out_file(g, "beta_hat.csv"));
    print_fit_diagnostics(pf);
    return 0;
}

int run_predict(const GlobalArgs& g, std::string responses_path,
                std::string panel_path) {
    const ExperimentConfig cfg = make_config(g);
    if (responses_path.empty()) responses_path = out_file(g, "responses.csv");
    if (panel_path.empty()) panel_path = out_file(g, "panel.csv");
    const auto Y = read_coefficient_csv(responses_path, cfg.interval);
    const RegressorPanel panel = read_panel_csv(panel_path);
    const int N = panel.N();
    if (static_cast<int>(Y.size()) != N) {
        throw domain_error("responses and panel disagree on the number of times");
    }
    if (N < 3) throw domain_error("prediction needs at least 3 observations");
    RegressorPanel head;
    head.entries.assign(panel.entries.begin(), panel.entries.end() - 1);
    const PluginFit pf =
        plugin_gls(head, {Y.begin(), Y.end() - 1}, cfg.plugin_options());
    const HFunction yhat = predict_response(panel.entries[N - 1], pf);
    write_prediction_csv(yhat, out_file(g, "prediction.csv"));
    print_fit_diagnostics(pf);
    return 0;
}

int run_experiment(const GlobalArgs& g) {
    const ExperimentConfig cfg = make_config(g);
    const MetricsReport report = run_efmqe_experiment(cfg);
    write_efmqe_csv(report, out_file(g, "efmqe.csv"));
    write_cemqe_csv(report, out_file(g, "cemqe.csv"));
    std::cout << "repetitions: " << report.total_repetitions
              << ", failed: " << report.failed_repetitions << "\n";
    return 0;
}

int run_sweep(const GlobalArgs& g) {
    const ExperimentConfig cfg = make_config(g);
    const MetricsReport report = run_consistency_sweep(
        cfg.model, cfg.sweep_sizes, cfg.r, cfg.seed, cfg.threads,
        cfg.plugin_options());
    write_sweep_csv(report, out_file(g, "sweep.csv"));
    std::cout << "repetitions: " << report.total_repetitions
              << ", failed: " << report.failed_repetitions << "\n";
    return 0;
}

int run_normality(const GlobalArgs& g) {
    const ExperimentConfig cfg = make_config(g);
    const MetricsReport report =
        run_normality_check(cfg.model, cfg.N, cfg.r, cfg.seed, cfg.threads);
    write_normality_csv(report, out_file(g, "normality.csv"));
    std::cout << "repetitions: " << report.total_repetitions
              << ", failed: " << report.failed_repetitions << "\n";
    return 0;
}

} // namespace

int cli_main(int argc, char** argv) {
    CLI::App app{"Dynamical multiple regression in function spaces:\n"
                 "simulation, weighted estimation, prediction and experiment "
                 "harness."};
    app.require_subcommand(1);

    GlobalArgs g;
    app.add_option("--config", g.config_path, "Configuration file (key = value)");
    auto* seed_opt = app.add_option("--seed", g.seed, "Override the config seed");
    app.add_option("--out", g.out_dir, "Output directory (default .)");
    app.add_option("--threads", g.threads,
                   "Worker threads (default: ARHGLS_THREADS, else hardware)");
    app.add_flag("--rolling", g.rolling,
                 "Experiment only: refit on 1..n-1 for each reported time");

    auto* sim = app.add_subcommand(
        "simulate", "Draw one sample path and write responses/errors/panel CSVs");
    auto* fit = app.add_subcommand(
        "fit", "Estimate coefficient functions from responses + panel CSVs");
    auto* pred = app.add_subcommand(
        "predict", "Fit on all but the last time and forecast it");
    auto* exper = app.add_subcommand(
        "experiment", "Monte Carlo estimation-error tables (EFMQE/CEMQE)");
    auto* sweep = app.add_subcommand(
        "sweep", "Median estimation error across increasing sample sizes");
    auto* normal = app.add_subcommand(
        "normality", "Known-truth standardized component summaries");
    for (auto* sub : {sim, fit, pred, exper, sweep, normal}) sub->fallthrough();

    std::string responses_path;
    std::string panel_path;
    for (auto* sub : {fit, pred}) {
        sub->add_option("--responses", responses_path,
                        "Responses CSV (default <out>/responses.csv)");
        sub->add_option("--panel", panel_path,
                        "Panel CSV (default <out>/panel.csv)");
    }

    try {
        app.parse(argc, argv);
        g.seed_set = seed_opt->count() > 0;
        if (app.got_subcommand(sim)) return run_simulate(g);
        if (app.got_subcommand(fit)) return run_fit(g, responses_path, panel_path);
        if (app.got_subcommand(pred)) return run_predict(g, responses_path, panel_path);
        if (app.got_subcommand(exper)) return run_experiment(g);
        if (app.got_subcommand(sweep)) return run_sweep(g);
        if (app.got_subcommand(normal)) return run_normality(g);
        return 1;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const config_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const numerical_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

} // namespace arhgls
