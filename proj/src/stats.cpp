#include "salab/stats.hpp"

#include <cmath>

#include "salab/errors.hpp"

namespace salab {

LineFit fit_line(std::span<const double> x, std::span<const double> y, std::span<const double> y_se) {
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n) throw DomainError("fit_line needs at least two paired points");
    if (!y_se.empty() && y_se.size() != n) throw DomainError("fit_line: standard errors must pair with y");

    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0) throw DomainError("fit_line: x values are all equal");

    LineFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    for (std::size_t i = 0; i < y_se.size(); ++i) fit.slope_band += std::abs((x[i] - mx) / sxx) * y_se[i];
    return fit;
}

Eigen::VectorXd batch_means_se(const Eigen::MatrixXd& samples, int batches) {
    const Eigen::Index n = samples.rows();
    if (batches < 2 || n < batches) throw DomainError("batch_means_se: too few samples for the batch count");
    const Eigen::Index size = n / batches;
    Eigen::MatrixXd means(batches, samples.cols());
    for (int b = 0; b < batches; ++b) means.row(b) = samples.middleRows(b * size, size).colwise().mean();
    const Eigen::RowVectorXd grand = means.colwise().mean();
    const Eigen::MatrixXd centered = means.rowwise() - grand;
    const Eigen::VectorXd var = centered.colwise().squaredNorm().transpose() / static_cast<double>(batches - 1);
    return (var / static_cast<double>(batches)).cwiseSqrt();
}

}  // namespace salab
