#pragma once

// Linear SA f(theta, x) = A(x) theta - b(x) over a finite chain, and exact
// evaluation of its asymptotic bias and covariance.

#include <cstdint>

#include <Eigen/Dense>

#include "salab/markov_chain.hpp"
#include "salab/step_size.hpp"

namespace salab {

class LinearSAModel {
public:
    [[nodiscard]] const FiniteMarkovChain& chain() const noexcept { return chain_; }
    [[nodiscard]] const StateMatrixTable& A() const noexcept { return A_; }
    [[nodiscard]] const StateVectorTable& b() const noexcept { return b_; }
    [[nodiscard]] const Eigen::MatrixXd& Astar() const noexcept { return Astar_; }
    [[nodiscard]] const Eigen::VectorXd& bbar() const noexcept { return bbar_; }
    [[nodiscard]] const Eigen::VectorXd& thetastar() const noexcept { return thetastar_; }
    /// G = [A*]^{-1}
    [[nodiscard]] const Eigen::MatrixXd& G() const noexcept { return G_; }
    [[nodiscard]] Eigen::Index dim() const noexcept { return Astar_.rows(); }

    [[nodiscard]] Eigen::VectorXd f(const Eigen::VectorXd& theta, std::size_t x) const {
        return A_.at(x) * theta - b_.at(x);
    }
    [[nodiscard]] Eigen::VectorXd mean_field(const Eigen::VectorXd& theta) const { return Astar_ * theta - bbar_; }

    /// f(theta*, x) for every state.
    [[nodiscard]] StateVectorTable f_at_thetastar() const;

    friend LinearSAModel make_linear_model(FiniteMarkovChain chain, StateMatrixTable A, StateVectorTable b);

private:
    LinearSAModel(FiniteMarkovChain chain, StateMatrixTable A, StateVectorTable b)
        : chain_(std::move(chain)), A_(std::move(A)), b_(std::move(b)) {}

    FiniteMarkovChain chain_;
    StateMatrixTable A_;
    StateVectorTable b_;
    Eigen::MatrixXd Astar_;
    Eigen::VectorXd bbar_;
    Eigen::VectorXd thetastar_;
    Eigen::MatrixXd G_;
};

/// Throws SingularAstar, NotHurwitz (max Re eig(A*) >= -1e-9) or DomainError on shape mismatch.
LinearSAModel make_linear_model(FiniteMarkovChain chain, StateMatrixTable A, StateVectorTable b);

enum class NoiseVariant {
    Multiplicative,  // per-state A(x) as given
    Additive,        // A(x) replaced by A* in every state
};

/// The two-state experiment: A0 = 2[[-2,0],[1,-2]], b0 = 0, A1 = 2[[1,0],[-1,1]], b1 = -2(1,1).
LinearSAModel paper_section3(double a, NoiseVariant variant = NoiseVariant::Multiplicative);

/// Same model with A(x) replaced by A* everywhere.
LinearSAModel additive_variant(const LinearSAModel& model);

/// Callable update for run_sa.
class LinearUpdate {
public:
    explicit LinearUpdate(const LinearSAModel& model) : model_(&model) {}

    void operator()(const Eigen::VectorXd& theta, std::size_t x, Eigen::VectorXd& out) const {
        out.noalias() = model_->A().at(x) * theta;
        out -= model_->b().row(x).transpose();
    }

private:
    const LinearSAModel* model_;
};

inline LinearUpdate update_fn(const LinearSAModel& model) { return LinearUpdate(model); }

/// Upsilon-bar* = -sum_x pi(x) sum_y P(x,y) A_hat(y) (A(x) theta* - b(x)).
Eigen::VectorXd theory_upsilon_star(const LinearSAModel& model);

/// beta_theta = (1-rho)^{-1} G Upsilon-bar*.
Eigen::VectorXd theory_beta(const LinearSAModel& model, const StepSizeSchedule& schedule);

struct CovarianceTheory {
    Eigen::MatrixXd sigma_wstar;
    Eigen::MatrixXd sigma_pr;
    double sigma_pr_scalar = 0.0;  // sqrt(trace(sigma_pr))
};

/// Sigma_W* from the CLT covariance of f(theta*, .), and Sigma^PR = G Sigma_W* G^T.
CovarianceTheory theory_sigma_pr(const LinearSAModel& model);

struct TheoryStats {
    Eigen::VectorXd upsilon_bar_star;
    Eigen::VectorXd beta_theta;
    Eigen::MatrixXd sigma_wstar;
    Eigen::MatrixXd sigma_pr;
    double sigma_pr_scalar = 0.0;
    double rho = 0.0;
};

TheoryStats compute_theory(const LinearSAModel& model, const StepSizeSchedule& schedule);

/// Leading bias term alpha_{N+1} beta_theta of the PR estimate.
Eigen::VectorXd bias_predict(const LinearSAModel& model, const StepSizeSchedule& schedule, std::int64_t N);

/// Leading-order PR mean-square error alpha_{n+1}^2 |beta|^2 + trace(Sigma^PR)/n.
double mse_pr_predict(const TheoryStats& theory, const StepSizeSchedule& schedule, std::int64_t n);

/// C exp(-lam (tau^b_n - tau^b_{n_b})).
double ad_bias_envelope(const StepSizeSchedule& schedule, std::int64_t n, std::int64_t n_b, double C, double lam);

struct FiniteTimeBoundParams {
    double c0 = 1.0;       // drift constant of V = |theta - theta*|^2 / 2
    double R = 0.5;        // uniform ergodicity: |P^n(x,.) - pi|_TV <= R varrho^n
    double varrho = 0.5;
    double L_fbar = 1.0;   // Lipschitz constant of fbar
    double sigma_W0 = 0.0; // martingale-noise scale; enters squared
    double alpha0 = 0.5;
    double theta_star_norm = 0.0;
};

void validate(const FiniteTimeBoundParams& p);

/// K = L / c0 * max{1, log(R/varrho)/log(1/varrho)} with
/// L = 520 (L_fbar + sigma_W0^2)^2 alpha0 (|theta*| + 1)^2.
double finite_time_constant(const FiniteTimeBoundParams& p);

/// Leading term K [log(n/alpha0) + 1] alpha_n of the mean-square bound (the fast-vanishing remainder is dropped).
double finite_time_bound(const FiniteTimeBoundParams& p, const StepSizeSchedule& schedule, std::int64_t n);

/// Constants of the two-state experiment: c0 = 1, R = 1/2, varrho = |2a - 1|, L_fbar = 1, sigma_W0 = 0.
FiniteTimeBoundParams paper_section3_bound_params(double a, double alpha0);

}  // namespace salab
