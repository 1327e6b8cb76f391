#pragma once

// Empirical-vs-theory tables, figure reproduction and rate fits.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "salab/config.hpp"
#include "salab/ensemble.hpp"
#include "salab/stats.hpp"

namespace salab {

struct ComparisonRow {
    std::optional<double> a;
    double rho = 0.0;
    double alpha0 = 0.0;
    Eigen::VectorXd bias_emp;    // mean theta^PR_N - theta*
    Eigen::VectorXd bias_pred;   // alpha_{N+1} beta_theta
    Eigen::VectorXd bias_se;     // sqrt(diag(cov)/M)
    Eigen::VectorXd bias_ratio_components;
    double bias_ratio = 0.0;     // |bias_emp| / |bias_pred|; NaN when the prediction is zero
    double var_emp = 0.0;        // N trace(cov)
    double var_theory = 0.0;     // trace(Sigma^PR)
    double var_se = 0.0;         // sqrt(2/(M-1)) var_emp
    double var_ratio = 0.0;
    double mse = 0.0;
    double mse_pred = 0.0;
    double mse_ratio = 0.0;
};

/// Throws ModelMismatch unless the summary was produced by `model` and `schedule`.
ComparisonRow compare_theory(const GridPointSummary& point, const LinearSAModel& model,
                             const StepSizeSchedule& schedule);

std::vector<ComparisonRow> compare_all(const EnsembleSummary& summary, const ExperimentConfig& cfg);

void write_summary_csv(const EnsembleSummary& summary, const std::filesystem::path& path);
void write_comparison_csv(const std::vector<ComparisonRow>& rows, const std::filesystem::path& path);
void write_curves_csv(const EnsembleSummary& summary, const std::filesystem::path& path);
void write_runs_csv(const EnsembleSummary& summary, const std::filesystem::path& path);
/// Normalization conventions and failed grid points.
void write_metadata(const EnsembleSummary& summary, const ExperimentConfig& cfg, const std::filesystem::path& path);

enum class Figure { BiasVariance, MeanSquareError, Ratios };

Figure parse_figure(const std::string& name);
std::string figure_name(Figure f);

/// Runs the ensemble and writes the figure's CSV tables (and SVG plots when requested).
std::vector<std::filesystem::path> reproduce(Figure figure, const ExperimentConfig& cfg, int threads = 1);

struct SlopeCheck {
    std::string name;
    double expected = 0.0;
    LineFit fit;
    std::vector<std::int64_t> ns;
};

struct RateReport {
    std::optional<double> a;
    double rho = 0.0;
    double alpha0 = 0.0;
    SlopeCheck bias_vs_alpha;     // log|E theta~^PR_n| vs log alpha_{n+1}, expect 1
    SlopeCheck mse_raw_vs_alpha;  // log E|theta~_n|^2 vs log alpha_n, expect 1
    SlopeCheck ncov_vs_n;         // log n trace Cov(theta^PR_n) vs log n, expect 0
};

/// Fits from an existing summary. Needs >= 3 usable checkpoints (InsufficientGrid otherwise).
std::vector<RateReport> rate_checks(const EnsembleSummary& summary, const ExperimentConfig& cfg);
std::vector<RateReport> rate_checks(const ExperimentConfig& cfg, int threads = 1);

struct DecayFit {
    double lambda = 0.0;  // log |E theta~_n| ~ intercept - lambda tau^b_n
    double intercept = 0.0;
    double r2 = 0.0;
    std::vector<std::int64_t> ns;
};

/// Regression of the raw-iterate mean error against tau^b_n over checkpoints in [n_lo, n_hi].
DecayFit fit_bias_decay(const GridPointSummary& point, std::int64_t n_lo, std::int64_t n_hi);

nlohmann::json to_json(const TheoryStats& t);
nlohmann::json to_json(const RateReport& r);

}  // namespace salab
