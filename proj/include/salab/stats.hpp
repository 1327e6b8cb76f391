#pragma once

#include <span>

#include <Eigen/Dense>

namespace salab {

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    /// Half-width of the slope band from per-point standard errors of y,
    /// combined without assuming independence: sum_i |c_i| se_i.
    double slope_band = 0.0;
};

/// Ordinary least squares y = intercept + slope x.
LineFit fit_line(std::span<const double> x, std::span<const double> y, std::span<const double> y_se = {});

/// Standard error of the column means of `samples` (rows = time) from contiguous batch means.
Eigen::VectorXd batch_means_se(const Eigen::MatrixXd& samples, int batches);

}  // namespace salab
