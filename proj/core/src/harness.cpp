#include "arhgls/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

#include "arhgls/arh_sim.hpp"

namespace arhgls {

namespace {

/// Runs fn(i) for i in [0, n) on a pool. A throwing item records its message
/// in the returned slot and never disturbs other items, so Monte Carlo
/// repetitions fail independently. Slot order is by index, which keeps every
/// downstream reduction identical for any thread count.
std::vector<std::optional<std::string>> parallel_for(int n, int threads,
                                                     const std::function<void(int)>& fn) {
    std::vector<std::optional<std::string>> failures(n);
    if (n == 0) return failures;
    threads = std::clamp(threads, 1, std::max(1, n));
    std::atomic<int> next{0};
    auto worker = [&]() {
        for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
            try {
                fn(i);
            } catch (const std::exception& e) {
                failures[i] = e.what();
            } catch (...) {
                failures[i] = "unknown error";
            }
        }
    };
    if (threads == 1) {
        worker();
        return failures;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    return failures;
}

/// Keeps concurrent plug-in fits inside a memory budget; each fit
/// materializes a rotated panel of N*p*K^2 doubles and up to three stacked
/// design matrices of the same order.
int bounded_threads(int threads, const ModelSpec& model, int N) {
    const double per_rep =
        32.0 * N * model.p * static_cast<double>(model.K) * model.K + (1 << 22);
    const double budget = 2.0 * (1 << 30);
    const int cap = std::max(1, static_cast<int>(budget / std::max(per_rep, 1.0)));
    return std::clamp(threads, 1, cap);
}

double median(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 == 1 ? v[m] : (v[m - 1] + v[m]) / 2.0;
}

/// M x K table of basis values on the grid; synthesize is then one matvec.
Eigen::MatrixXd basis_table(const Grid& grid, int K) {
    Eigen::MatrixXd B(grid.size(), K);
    for (int i = 0; i < grid.size(); ++i) {
        for (int k = 1; k <= K; ++k) {
            B(i, k - 1) = basis_eval(k, grid.points[i], grid.interval);
        }
    }
    return B;
}

double error_norm_hp(const std::vector<HFunction>& beta_hat,
                     const std::vector<HFunction>& beta_true) {
    double acc = 0.0;
    for (std::size_t j = 0; j < beta_hat.size(); ++j) {
        acc += (beta_hat[j].coeffs - beta_true[j].coeffs).squaredNorm();
    }
    return std::sqrt(acc);
}

RegressorPanel panel_head(const RegressorPanel& panel, int n) {
    RegressorPanel sub;
    sub.entries.assign(panel.entries.begin(), panel.entries.begin() + n);
    return sub;
}

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

long parse_long(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const long v = std::stol(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw config_error("key '" + key + "': expected an integer, got '" + value + "'");
    }
}

double parse_real(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw config_error("key '" + key + "': expected a number, got '" + value + "'");
    }
}

std::vector<double> parse_real_list(const std::string& key, const std::string& value) {
    std::vector<double> out;
    for (const auto& item : split_list(value)) out.push_back(parse_real(key, item));
    if (out.empty()) throw config_error("key '" + key + "': expected a list of numbers");
    return out;
}

std::vector<int> parse_int_list(const std::string& key, const std::string& value) {
    std::vector<int> out;
    for (const auto& item : split_list(value)) {
        out.push_back(static_cast<int>(parse_long(key, item)));
    }
    if (out.empty()) throw config_error("key '" + key + "': expected a list of integers");
    return out;
}

} // namespace

std::vector<int> ExperimentConfig::effective_times() const {
    if (!times.empty()) return times;
    std::vector<int> out;
    for (int t = 10; t <= N; t += 10) out.push_back(t);
    if (out.empty()) out.push_back(N);
    return out;
}

ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig cfg;
    // Custom-model pieces are collected first and assembled at the end so the
    // key order in the file does not matter.
    std::optional<std::string> model_tag;
    std::optional<double> r0_exp;
    std::optional<double> rdelta_exp;
    std::optional<double> rho_exp;
    std::optional<std::string> family;
    std::optional<std::vector<double>> reg_exps;
    std::optional<std::vector<double>> beta_exps;
    std::optional<int> p;
    int K = 50;
    double noise_scale = 1.0;

    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw config_error("line '" + line + "': expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw config_error("line '" + line + "': expected key = value");
        }

        if (key == "model") {
            model_tag = value;
        } else if (key == "N") {
            cfg.N = static_cast<int>(parse_long(key, value));
        } else if (key == "r") {
            cfg.r = static_cast<int>(parse_long(key, value));
        } else if (key == "k_N") {
            if (value == "auto") {
                cfg.k_N = 0;
            } else {
                cfg.k_N = static_cast<int>(parse_long(key, value));
                if (cfg.k_N < 1) {
                    throw config_error("key 'k_N': expected a positive integer or auto");
                }
            }
        } else if (key == "K") {
            K = static_cast<int>(parse_long(key, value));
        } else if (key == "M") {
            cfg.M = static_cast<int>(parse_long(key, value));
        } else if (key == "seed") {
            cfg.seed = static_cast<std::uint64_t>(parse_long(key, value));
        } else if (key == "times") {
            cfg.times = parse_int_list(key, value);
        } else if (key == "Ns") {
            cfg.sweep_sizes = parse_int_list(key, value);
        } else if (key == "tau") {
            cfg.truncation_threshold = parse_real(key, value);
        } else if (key == "noise_scale") {
            noise_scale = parse_real(key, value);
        } else if (key == "p") {
            p = static_cast<int>(parse_long(key, value));
        } else if (key == "r0_exponent") {
            r0_exp = parse_real(key, value);
        } else if (key == "rdelta_exponent") {
            rdelta_exp = parse_real(key, value);
        } else if (key == "rho_exponent") {
            rho_exp = parse_real(key, value);
        } else if (key == "regressor_family") {
            family = value;
        } else if (key == "regressor_exponents") {
            reg_exps = parse_real_list(key, value);
        } else if (key == "beta_exponents") {
            beta_exps = parse_real_list(key, value);
        } else {
            throw config_error("unknown key '" + key + "'");
        }
    }

    const std::string tag = model_tag.value_or("model1");
    if (tag == "model1") {
        cfg.model = ModelSpec::model1(K);
    } else if (tag == "model2") {
        cfg.model = ModelSpec::model2(K);
    } else if (tag == "custom") {
        ModelSpec m;
        m.name = ModelSpec::Name::custom;
        m.K = K;
        if (!r0_exp || !rdelta_exp || !rho_exp || !family || !reg_exps || !beta_exps) {
            throw config_error(
                "key 'model': custom requires r0_exponent, rdelta_exponent, "
                "rho_exponent, regressor_family, regressor_exponents, beta_exponents");
        }
        m.r0_exponent = *r0_exp;
        m.rdelta_exponent = *rdelta_exp;
        m.rho_exponent = *rho_exp;
        if (*family == "exp") {
            m.family = ModelSpec::RegressorFamily::stretched_exp;
        } else if (*family == "power") {
            m.family = ModelSpec::RegressorFamily::inverse_power;
        } else {
            throw config_error("key 'regressor_family': expected exp or power");
        }
        m.regressor_exponents = *reg_exps;
        m.beta_exponents = *beta_exps;
        m.p = p.value_or(static_cast<int>(reg_exps->size()));
        cfg.model = m;
    } else {
        throw config_error("key 'model': expected model1, model2 or custom");
    }
    cfg.model.noise_scale = noise_scale;

    if (cfg.N < 2) throw config_error("key 'N': must be >= 2");
    if (cfg.r < 1) throw config_error("key 'r': must be >= 1");
    if (cfg.M < 1) throw config_error("key 'M': must be >= 1");
    if (cfg.model.K < 1) throw config_error("key 'K': must be >= 1");
    for (int t : cfg.times) {
        if (t < 1 || t > cfg.N) {
            throw config_error("key 'times': time " + std::to_string(t) +
                               " outside [1, N]");
        }
    }
    for (int n : cfg.sweep_sizes) {
        if (n < 3) throw config_error("key 'Ns': sample sizes must be >= 3");
    }
    try {
        cfg.model.validate();
    } catch (const std::exception& e) {
        throw config_error(std::string("model configuration invalid: ") + e.what());
    }
    return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str());
}

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("ARHGLS_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

MetricsReport run_efmqe_experiment(const ExperimentConfig& cfg) {
    const std::vector<int> times = cfg.effective_times();
    for (int t : times) {
        if (t < 1 || t > cfg.N) {
            throw domain_error("reported time " + std::to_string(t) + " outside [1, N]");
        }
    }
    const int T = static_cast<int>(times.size());
    const int K = cfg.model.K;

    const RegressorPanel panel = build_model_regressors(cfg.model, cfg.N, K);
    const std::vector<HFunction> beta_true = cfg.model.beta_truth(cfg.interval);
    const ArhSpec arh(cfg.model.rho(), cfg.model.r_delta());
    const Grid grid = make_midpoint_grid(cfg.interval, cfg.M);
    const Eigen::MatrixXd Bv = basis_table(grid, K);

    // Per-repetition squared errors: slot r holds an M x T matrix.
    std::vector<Eigen::MatrixXd> slots(cfg.r);
    auto rep_fn = [&](int rep) {
        RngStream rng = RngStream::for_repetition(cfg.seed, rep);
        const std::vector<HFunction> errors =
            simulate_arh1(arh, cfg.N, 0, cfg.interval, rng);
        const std::vector<HFunction> Y = simulate_response(panel, beta_true, errors);

        Eigen::MatrixXd sq(cfg.M, T);
        if (cfg.rolling) {
            for (int ti = 0; ti < T; ++ti) {
                const int n = times[ti];
                if (n < 4) {
                    throw domain_error("rolling estimate needs time >= 4");
                }
                PluginFit sub = plugin_gls(panel_head(panel, n - 1),
                                           {Y.begin(), Y.begin() + (n - 1)},
                                           cfg.plugin_options());
                const HFunction yhat = predict_response(panel.entries[n - 1], sub);
                const Eigen::VectorXd diff = Bv * (Y[n - 1].coeffs - yhat.coeffs);
                sq.col(ti) = diff.cwiseAbs2();
            }
        } else {
            const PluginFit pf = plugin_gls(panel, Y, cfg.plugin_options());
            const HFunction zero = HFunction::zero(K, cfg.interval);
            for (int ti = 0; ti < T; ++ti) {
                const int n = times[ti];
                const HFunction& prev =
                    n >= 2 ? pf.fit.residuals[n - 2] : zero;
                const HFunction yhat = predict_with_residual(
                    panel.entries[n - 1], pf.fit.beta_hat, pf.rho_hat, pf.eigen, prev);
                const Eigen::VectorXd diff = Bv * (Y[n - 1].coeffs - yhat.coeffs);
                sq.col(ti) = diff.cwiseAbs2();
            }
        }
        slots[rep] = std::move(sq);
    };

    const int threads = bounded_threads(resolve_threads(cfg.threads), cfg.model, cfg.N);
    const auto failures = parallel_for(cfg.r, threads, rep_fn);

    MetricsReport report;
    report.total_repetitions = cfg.r;
    report.grid_x.assign(grid.points.data(), grid.points.data() + grid.points.size());
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(cfg.M, T);
    int ok = 0;
    for (int rep = 0; rep < cfg.r; ++rep) {
        if (failures[rep]) continue;
        acc += slots[rep];
        ++ok;
    }
    report.failed_repetitions = cfg.r - ok;
    if (ok == 0) {
        throw numerical_error("every repetition failed; first error: " +
                              failures[0].value_or("unknown"));
    }
    for (int ti = 0; ti < T; ++ti) {
        report.efmqe[times[ti]] = acc.col(ti).mean() / ok;
        for (int i = 0; i < cfg.M; ++i) {
            report.cemqe[{i, times[ti]}] = acc(i, ti) / ok;
        }
    }
    return report;
}

MetricsReport run_consistency_sweep(const ModelSpec& model, const std::vector<int>& Ns,
                                    int r, std::uint64_t seed, int threads,
                                    const PluginOptions& options) {
    if (Ns.empty()) throw domain_error("sweep needs at least one sample size");
    if (r < 1) throw domain_error("sweep needs r >= 1");
    MetricsReport report;
    report.total_repetitions = r * static_cast<int>(Ns.size());
    const Interval interval{0.0, 60.0};
    const std::vector<HFunction> beta_true = model.beta_truth(interval);
    const ArhSpec arh(model.rho(), model.r_delta());

    for (std::size_t ni = 0; ni < Ns.size(); ++ni) {
        const int N = Ns[ni];
        const RegressorPanel panel = build_model_regressors(model, N, model.K);
        std::vector<double> ols_err(r);
        std::vector<double> plugin_err(r);
        auto rep_fn = [&](int rep) {
            // Streams are indexed by (size index, repetition) so each sweep
            // point draws independent data.
            RngStream rng = RngStream::for_repetition(
                seed, static_cast<std::uint64_t>(ni) * 1000003ULL + rep);
            const auto errors = simulate_arh1(arh, N, 0, interval, rng);
            const auto Y = simulate_response(panel, beta_true, errors);
            const GlsFit ols = ols_estimate(panel, Y);
            ols_err[rep] = error_norm_hp(ols.beta_hat, beta_true);
            const PluginFit pf = plugin_gls(panel, Y, options);
            plugin_err[rep] = error_norm_hp(pf.fit.beta_hat, beta_true);
        };
        const auto failures =
            parallel_for(r, bounded_threads(resolve_threads(threads), model, N), rep_fn);
        std::vector<double> ols_ok;
        std::vector<double> plugin_ok;
        for (int rep = 0; rep < r; ++rep) {
            if (failures[rep]) {
                ++report.failed_repetitions;
                continue;
            }
            ols_ok.push_back(ols_err[rep]);
            plugin_ok.push_back(plugin_err[rep]);
        }
        if (ols_ok.empty()) {
            throw numerical_error("every repetition failed at N = " + std::to_string(N));
        }
        report.consistency[N] = ConsistencyRow{median(ols_ok), median(plugin_ok)};
    }
    return report;
}

MetricsReport run_normality_check(const ModelSpec& model, int N, int r,
                                  std::uint64_t seed, int threads) {
    if (N < 2 || r < 1) throw domain_error("normality check needs N >= 2 and r >= 1");
    const Interval interval{0.0, 60.0};
    const int freqs = std::min(3, model.K);
    const int p = model.p;

    const RegressorPanel panel = build_model_regressors(model, N, model.K);
    const std::vector<HFunction> beta_true = model.beta_truth(interval);
    const ArhSpec arh(model.rho(), model.r_delta());
    const BlockPrecision P = build_block_precision(model.r0_stationary(), model.rho(), N);

    Eigen::MatrixXd stats(r, freqs * p);
    auto rep_fn = [&](int rep) {
        RngStream rng = RngStream::for_repetition(seed, rep);
        const auto errors = simulate_arh1(arh, N, 0, interval, rng);
        const auto Y = simulate_response(panel, beta_true, errors);
        const GlsFit fit = gls_estimate(panel, Y, P);
        const Eigen::VectorXd z = normalized_statistic(fit, beta_true);
        for (int k = 0; k < freqs; ++k) {
            for (int j = 0; j < p; ++j) {
                stats(rep, k * p + j) = z[k * p + j];
            }
        }
    };
    const auto failures = parallel_for(r, resolve_threads(threads), rep_fn);

    MetricsReport report;
    report.total_repetitions = r;
    std::vector<int> ok_rows;
    for (int rep = 0; rep < r; ++rep) {
        if (failures[rep]) {
            ++report.failed_repetitions;
            continue;
        }
        ok_rows.push_back(rep);
    }
    if (ok_rows.empty()) {
        throw numerical_error("every repetition failed in the normality check");
    }
    for (int k = 0; k < freqs; ++k) {
        for (int j = 0; j < p; ++j) {
            const int col = k * p + j;
            double mean = 0.0;
            for (int row : ok_rows) mean += stats(row, col);
            mean /= ok_rows.size();
            double m2 = 0.0;
            double m3 = 0.0;
            for (int row : ok_rows) {
                const double d = stats(row, col) - mean;
                m2 += d * d;
                m3 += d * d * d;
            }
            m2 /= ok_rows.size();
            m3 /= ok_rows.size();
            NormalitySummary s;
            s.frequency = k + 1;
            s.param = j + 1;
            s.mean = mean;
            s.var = ok_rows.size() > 1
                        ? m2 * ok_rows.size() / (ok_rows.size() - 1.0)
                        : 0.0;
            s.skew = m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
            report.normality.push_back(s);
        }
    }
    return report;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {
std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw domain_error("cannot open output file '" + path + "'");
    return out;
}
} // namespace

void write_efmqe_csv(const MetricsReport& report, const std::string& path) {
    auto out = open_out(path);
    out << "time,efmqe\n";
    for (const auto& [time, value] : report.efmqe) {
        out << time << "," << format_double(value) << "\n";
    }
}

void write_cemqe_csv(const MetricsReport& report, const std::string& path) {
    auto out = open_out(path);
    out << "x,time,cemqe\n";
    for (const auto& [key, value] : report.cemqe) {
        out << format_double(report.grid_x[key.first]) << "," << key.second << ","
            << format_double(value) << "\n";
    }
}

void write_sweep_csv(const MetricsReport& report, const std::string& path) {
    auto out = open_out(path);
    out << "N,estimator,median_error\n";
    for (const auto& [N, row] : report.consistency) {
        out << N << ",ols," << format_double(row.ols_median_error) << "\n";
        out << N << ",plugin," << format_double(row.plugin_median_error) << "\n";
    }
}

void write_normality_csv(const MetricsReport& report, const std::string& path) {
    auto out = open_out(path);
    out << "frequency,param,mean,var,skew\n";
    for (const auto& s : report.normality) {
        out << s.frequency << "," << s.param << "," << format_double(s.mean) << ","
            << format_double(s.var) << "," << format_double(s.skew) << "\n";
    }
}

void write_beta_csv(const std::vector<HFunction>& beta, const std::string& path) {
    auto out = open_out(path);
    out << "param_index,mode_index,coefficient\n";
    for (std::size_t j = 0; j < beta.size(); ++j) {
        for (int k = 0; k < beta[j].modes(); ++k) {
            out << (j + 1) << "," << (k + 1) << ","
                << format_double(beta[j].coeffs[k]) << "\n";
        }
    }
}

} // namespace arhgls
