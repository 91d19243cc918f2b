#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "arhgls/models.hpp"
#include "arhgls/plugin_est.hpp"

namespace arhgls {

/// One experiment description: model preset, sample and repetition counts,
/// truncation choice, metric grid, seeding, and reported times.
struct ExperimentConfig {
    ModelSpec model = ModelSpec::model1();
    int N = 200;
    int r = 100;
    /// 0 selects the truncation order from the data.
    int k_N = 0;
    double truncation_threshold = 1.0;
    /// Metric grid size (grid average over M midpoints realizes the 1/60
    /// normalization when M = 60 on the (0, 60) domain).
    int M = 60;
    std::uint64_t seed = 1;
    /// Reported times, 1-based; empty means 10, 20, ..., up to N.
    std::vector<int> times;
    /// Sample sizes for the consistency sweep.
    std::vector<int> sweep_sizes = {200, 600, 1000};
    Interval interval{0.0, 60.0};
    /// Re-fit on 1..n-1 for each reported time instead of the single
    /// full-sample fit.
    bool rolling = false;
    /// 0 means the ARHGLS_THREADS variable, else hardware concurrency.
    int threads = 0;

    std::vector<int> effective_times() const;
    PluginOptions plugin_options() const {
        return PluginOptions{k_N, truncation_threshold};
    }
};

/// Parses flat key = value text with # comments. Unknown keys and malformed
/// values raise config_error naming the key.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config_file(const std::string& path);

struct NormalitySummary {
    int frequency = 0;
    int param = 0;
    double mean = 0.0;
    double var = 0.0;
    double skew = 0.0;
};

struct ConsistencyRow {
    double ols_median_error = 0.0;
    double plugin_median_error = 0.0;
};

/// Collected experiment metrics; only the sections produced by the run that
/// built the report are populated.
struct MetricsReport {
    std::map<int, double> efmqe;
    /// (grid index, time) -> componentwise error; grid_x carries abscissae.
    std::map<std::pair<int, int>, double> cemqe;
    std::vector<double> grid_x;
    std::map<int, ConsistencyRow> consistency;
    std::vector<NormalitySummary> normality;
    int failed_repetitions = 0;
    int total_repetitions = 0;
};

/// Monte Carlo estimation errors: per repetition, simulate the model, run the
/// plug-in pipeline, form the response estimate at each reported time (the
/// predictor with the fitted residual at the previous time), and average the
/// squared pointwise error over the metric grid and successful repetitions.
MetricsReport run_efmqe_experiment(const ExperimentConfig& cfg);

/// Median estimation error sweep over increasing sample sizes, for both the
/// ordinary and the plug-in weighted estimator.
MetricsReport run_consistency_sweep(const ModelSpec& model, const std::vector<int>& Ns,
                                    int r, std::uint64_t seed, int threads = 0,
                                    const PluginOptions& options = {});

/// Known-truth standardized components over repetitions: mean, variance and
/// skewness for the leading 3 frequencies x p parameters.
MetricsReport run_normality_check(const ModelSpec& model, int N, int r,
                                  std::uint64_t seed, int threads = 0);

/// Thread count resolution: explicit request, else ARHGLS_THREADS, else
/// hardware concurrency; always >= 1.
int resolve_threads(int requested);

/// Full-precision formatting used by every CSV writer ("%.17g", which
/// round-trips doubles exactly).
std::string format_double(double v);

void write_efmqe_csv(const MetricsReport& report, const std::string& path);
void write_cemqe_csv(const MetricsReport& report, const std::string& path);
void write_sweep_csv(const MetricsReport& report, const std::string& path);
void write_normality_csv(const MetricsReport& report, const std::string& path);
void write_beta_csv(const std::vector<HFunction>& beta, const std::string& path);

} // namespace arhgls
