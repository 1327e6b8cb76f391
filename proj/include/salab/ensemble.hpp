#pragma once

// Seeded Monte Carlo ensembles of linear SA runs and their summaries.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "salab/config.hpp"
#include "salab/linear_theory.hpp"

namespace salab {

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t z) noexcept;

/// Per-run seed from (base_seed, grid_index, run_index).
std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t grid_index, std::uint64_t run_index) noexcept;

/// About `count` log-spaced integers in [1, N], always including N.
std::vector<std::int64_t> log_checkpoints(std::int64_t N, int count);

struct RunResult {
    std::uint64_t seed = 0;
    bool ok = true;
    std::string error;
    Eigen::VectorXd theta_N;
    Eigen::VectorXd theta_pr_N;
};

/// Cross-run statistics at one index n. Errors are relative to theta*.
struct CheckpointStats {
    std::int64_t n = 0;
    Eigen::VectorXd mean_err_raw;
    double mse_raw = 0.0;
    double mse_raw_se = 0.0;
    double fourth_moment_raw = 0.0;  // E|theta~_n|^4
    bool has_pr = false;
    Eigen::VectorXd mean_err_pr;
    Eigen::MatrixXd cov_pr;  // denominator M-1
    double mse_pr = 0.0;
    double mse_pr_se = 0.0;
};

struct GridPointSummary {
    std::size_t model_index = 0;
    std::size_t grid_index = 0;
    std::optional<double> a;
    std::string label;
    double alpha0 = 0.0;
    double rho = 0.0;
    std::int64_t M = 0;
    std::int64_t N = 0;
    std::int64_t N0 = 0;

    Eigen::VectorXd thetastar;
    Eigen::VectorXd mean;  // empirical mean of theta^PR_N over successful runs
    Eigen::MatrixXd cov;   // denominator M-1
    double mse = 0.0;      // (1/M) sum |theta^PR_N - theta*|^2
    double trace_cov_times_N = 0.0;

    TheoryStats theory;
    Eigen::VectorXd bias_pred;  // alpha_{N+1} beta_theta
    double trace_sigma_pr = 0.0;
    double mse_pred = 0.0;
    std::optional<FiniteTimeBoundParams> bound;

    std::vector<CheckpointStats> curves;
    std::vector<RunResult> runs;
    std::int64_t failed_runs = 0;

    [[nodiscard]] std::int64_t successful_runs() const noexcept { return M - failed_runs; }
};

struct EnsembleSummary {
    std::vector<GridPointSummary> points;
};

/// M independent runs per (model, grid) point. Output is independent of `threads`.
EnsembleSummary run_ensemble(const ExperimentConfig& cfg, int threads = 1);

}  // namespace salab
