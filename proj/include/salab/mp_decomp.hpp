#pragma once

// Pathwise Metivier-Priouret decomposition of the SA noise for linear models:
//   Delta_{k+1} = W_{k+2} - T_{k+2} + T_{k+1} - alpha_{k+1} Upsilon_{k+2}.

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "salab/linear_theory.hpp"
#include "salab/sa_engine.hpp"

namespace salab {

/// Zero-mean Poisson solution f_hat(theta, x) = A_hat(x) theta + b_hat(x) for forcing f.
struct HatF {
    StateMatrixTable A_hat;
    StateVectorTable b_hat;
    StateMatrixTable PA_hat;  // sum_z P(x,z) A_hat(z)
    StateVectorTable Pb_hat;

    [[nodiscard]] Eigen::VectorXd eval(const Eigen::VectorXd& theta, std::size_t x) const {
        return A_hat.at(x) * theta + b_hat.at(x);
    }
    /// E[f_hat(theta, Phi_{k+1}) | Phi_k = x]
    [[nodiscard]] Eigen::VectorXd conditional(const Eigen::VectorXd& theta, std::size_t x) const {
        return PA_hat.at(x) * theta + Pb_hat.at(x);
    }
};

HatF hat_f(const LinearSAModel& model);

/// Closed form -A_hat(x_next) (A(x_prev) theta - b(x_prev)).
Eigen::VectorXd upsilon_linear(const LinearSAModel& model, const HatF& hat, const Eigen::VectorXd& theta,
                               std::size_t x_prev, std::size_t x_next);
Eigen::VectorXd upsilon_linear(const LinearSAModel& model, const Eigen::VectorXd& theta, std::size_t x_prev,
                               std::size_t x_next);

/// Row k of each matrix holds the term for step k = 0 .. steps-1.
struct DecompositionTerms {
    Eigen::MatrixXd delta;          // Delta_{k+1}
    Eigen::MatrixXd W;              // W_{k+2}
    Eigen::MatrixXd T_curr;         // T_{k+1} = f_hat(theta_k, Phi_{k+1})
    Eigen::MatrixXd T_next;         // T_{k+2} = f_hat(theta_{k+1}, Phi_{k+2})
    Eigen::MatrixXd upsilon;        // finite-difference definition
    Eigen::MatrixXd upsilon_closed; // affine closed form
    Eigen::MatrixXd wstar;          // W*_{k+2}
    Eigen::MatrixXd upsilon_star;   // Upsilon*_{k+2}
    Eigen::VectorXd alpha;          // alpha_{k+1}
    Eigen::VectorXd residual;       // max-norm of the identity residual
    Eigen::VectorXd theta_norm;     // |theta_k|

    [[nodiscard]] Eigen::Index steps() const noexcept { return delta.rows(); }
};

struct DecompositionSummary {
    std::int64_t steps = 0;
    double max_residual_ratio = 0.0;  // max_k residual / (1 + |theta_k|)
    double max_upsilon_gap = 0.0;     // max_k |Upsilon_fd - Upsilon_closed|_inf
    Eigen::VectorXd upsilon_star_mean;
    Eigen::VectorXd upsilon_star_se;  // batch-means standard error
    Eigen::VectorXd upsilon_star_theory;
    std::vector<Eigen::VectorXd> wstar_cond_mean;  // per conditioning state Phi_{k+1}
    std::vector<Eigen::VectorXd> wstar_cond_se;
    std::vector<std::int64_t> wstar_cond_count;
    double quadratic_variation = 0.0;        // (1/K) sum |W_{k+2}|^2
    double wstar_quadratic_variation = 0.0;  // (1/K) sum |W*_{k+2}|^2
    double trace_sigma_wstar = 0.0;
    double telescoping_error = 0.0;  // |sum(-T_{k+2} + T_{k+1}) - (T_first - T_last)|_inf
};

/// Requires a trajectory recorded at stride 1 with its full state path (MissingPath otherwise).
DecompositionTerms decompose_path(const LinearSAModel& model, const StepSizeSchedule& schedule,
                                  const TrajectoryRecord& trajectory);

DecompositionSummary summarize(const LinearSAModel& model, const DecompositionTerms& terms,
                               const std::vector<std::size_t>& path, int batches = 50);

}  // namespace salab
