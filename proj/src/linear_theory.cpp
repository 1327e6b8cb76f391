#include "salab/linear_theory.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "salab/errors.hpp"

namespace salab {

namespace {

constexpr double kHurwitzMargin = 1e-9;
constexpr double kEquilibriumTolerance = 1e-10;

}  // namespace

LinearSAModel make_linear_model(FiniteMarkovChain chain, StateMatrixTable A, StateVectorTable b) {
    const std::size_t n = chain.n_states();
    if (A.n_states() != n || b.n_states() != n) throw DomainError("A and b tables must cover every chain state");
    const Eigen::Index d = A.rows();
    if (A.cols() != d || static_cast<Eigen::Index>(b.dim()) != d || d == 0)
        throw DomainError("A(x) must be square and match dim b(x)");

    LinearSAModel model(std::move(chain), std::move(A), std::move(b));
    const Eigen::VectorXd& pi = model.chain_.pi();
    model.Astar_ = Eigen::MatrixXd::Zero(d, d);
    for (std::size_t x = 0; x < n; ++x) model.Astar_ += pi(static_cast<Eigen::Index>(x)) * model.A_.at(x);
    model.bbar_ = model.b_.matrix().transpose() * pi;

    Eigen::FullPivLU<Eigen::MatrixXd> lu(model.Astar_);
    lu.setThreshold(1e-12);
    if (!lu.isInvertible()) throw SingularAstar("A* is singular");

    Eigen::EigenSolver<Eigen::MatrixXd> es(model.Astar_, false);
    const double max_re = es.eigenvalues().real().maxCoeff();
    if (!(max_re < -kHurwitzMargin))
        throw NotHurwitz("A* has an eigenvalue with real part " + std::to_string(max_re));

    model.G_ = lu.inverse();
    model.thetastar_ = lu.solve(model.bbar_);
    const double resid = (model.Astar_ * model.thetastar_ - model.bbar_).cwiseAbs().maxCoeff();
    if (resid > kEquilibriumTolerance * (1.0 + model.thetastar_.cwiseAbs().maxCoeff()))
        throw SingularAstar("A* theta* = bbar solved inaccurately");
    return model;
}

StateVectorTable LinearSAModel::f_at_thetastar() const {
    Eigen::MatrixXd rows(static_cast<Eigen::Index>(chain_.n_states()), dim());
    for (std::size_t x = 0; x < chain_.n_states(); ++x)
        rows.row(static_cast<Eigen::Index>(x)) = f(thetastar_, x).transpose();
    return StateVectorTable(std::move(rows));
}

LinearSAModel paper_section3(double a, NoiseVariant variant) {
    Eigen::MatrixXd A0(2, 2), A1(2, 2);
    A0 << -4.0, 0.0, 2.0, -4.0;
    A1 << 2.0, 0.0, -2.0, 2.0;
    Eigen::MatrixXd b(2, 2);
    b << 0.0, 0.0, -2.0, -2.0;
    auto model = make_linear_model(two_state(a), StateMatrixTable({A0, A1}), StateVectorTable(b));
    return variant == NoiseVariant::Additive ? additive_variant(model) : model;
}

LinearSAModel additive_variant(const LinearSAModel& model) {
    std::vector<Eigen::MatrixXd> mats(model.chain().n_states(), model.Astar());
    return make_linear_model(model.chain(), StateMatrixTable(std::move(mats)), model.b());
}

Eigen::VectorXd theory_upsilon_star(const LinearSAModel& model) {
    const auto& chain = model.chain();
    const StateMatrixTable A_hat = poisson_solve_matrix(chain, model.A());
    const StateVectorTable g = model.f_at_thetastar();
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(model.dim());
    for (std::size_t x = 0; x < chain.n_states(); ++x) {
        const auto xi = static_cast<Eigen::Index>(x);
        Eigen::MatrixXd cond = Eigen::MatrixXd::Zero(model.dim(), model.dim());
        for (std::size_t y = 0; y < chain.n_states(); ++y)
            cond += chain.P()(xi, static_cast<Eigen::Index>(y)) * A_hat.at(y);
        acc -= chain.pi()(xi) * (cond * g.at(x));
    }
    return acc;
}

Eigen::VectorXd theory_beta(const LinearSAModel& model, const StepSizeSchedule& schedule) {
    return model.G() * theory_upsilon_star(model) / (1.0 - schedule.rho());
}

CovarianceTheory theory_sigma_pr(const LinearSAModel& model) {
    const StateVectorTable g = model.f_at_thetastar();
    CovarianceTheory out;
    out.sigma_wstar = clt_covariance(model.chain(), g);
    const Eigen::MatrixXd mds = martingale_covariance(model.chain(), g);
    const double scale = 1.0 + out.sigma_wstar.cwiseAbs().maxCoeff();
    if ((mds - out.sigma_wstar).cwiseAbs().maxCoeff() > 1e-10 * scale)
        throw Error("Sigma_W*: CLT and martingale forms disagree");
    const Eigen::MatrixXd s = model.G() * out.sigma_wstar * model.G().transpose();
    out.sigma_pr = 0.5 * (s + s.transpose());
    out.sigma_pr_scalar = std::sqrt(std::max(0.0, out.sigma_pr.trace()));
    return out;
}

TheoryStats compute_theory(const LinearSAModel& model, const StepSizeSchedule& schedule) {
    TheoryStats t;
    t.upsilon_bar_star = theory_upsilon_star(model);
    t.beta_theta = model.G() * t.upsilon_bar_star / (1.0 - schedule.rho());
    auto cov = theory_sigma_pr(model);
    t.sigma_wstar = std::move(cov.sigma_wstar);
    t.sigma_pr = std::move(cov.sigma_pr);
    t.sigma_pr_scalar = cov.sigma_pr_scalar;
    t.rho = schedule.rho();
    return t;
}

Eigen::VectorXd bias_predict(const LinearSAModel& model, const StepSizeSchedule& schedule, std::int64_t N) {
    if (N < 1) throw DomainError("bias_predict requires N >= 1");
    return schedule.alpha(N + 1) * theory_beta(model, schedule);
}

double mse_pr_predict(const TheoryStats& theory, const StepSizeSchedule& schedule, std::int64_t n) {
    if (n < 1) throw DomainError("mse_pr_predict requires n >= 1");
    const double a = schedule.alpha(n + 1);
    return a * a * theory.beta_theta.squaredNorm() + theory.sigma_pr.trace() / static_cast<double>(n);
}

double ad_bias_envelope(const StepSizeSchedule& schedule, std::int64_t n, std::int64_t n_b, double C, double lam) {
    if (n_b < 1 || n < n_b) throw DomainError("ad_bias_envelope requires n >= n_b >= 1");
    if (!(C > 0.0) || !(lam > 0.0)) throw DomainError("ad_bias_envelope requires C, lam > 0");
    return C * std::exp(-lam * (schedule.tau_b(n) - schedule.tau_b(n_b)));
}

void validate(const FiniteTimeBoundParams& p) {
    if (!(p.varrho > 0.0 && p.varrho < 1.0)) throw DomainError("varrho must lie in (0,1)");
    if (!(p.c0 > 0.0) || !(p.R > 0.0) || !(p.alpha0 > 0.0))
        throw DomainError("c0, R and alpha0 must be positive");
    if (p.L_fbar < 0.0 || p.sigma_W0 < 0.0 || p.theta_star_norm < 0.0)
        throw DomainError("L_fbar, sigma_W0 and |theta*| must be non-negative");
}

double finite_time_constant(const FiniteTimeBoundParams& p) {
    validate(p);
    const double lip = p.L_fbar + p.sigma_W0 * p.sigma_W0;
    const double L = 520.0 * lip * lip * p.alpha0 * (p.theta_star_norm + 1.0) * (p.theta_star_norm + 1.0);
    const double mix = std::max(1.0, std::log(p.R / p.varrho) / std::log(1.0 / p.varrho));
    return L / p.c0 * mix;
}

double finite_time_bound(const FiniteTimeBoundParams& p, const StepSizeSchedule& schedule, std::int64_t n) {
    if (n < 1) throw DomainError("finite_time_bound requires n >= 1");
    const double K = finite_time_constant(p);
    return K * (std::log(static_cast<double>(n) / p.alpha0) + 1.0) * schedule.alpha(n);
}

FiniteTimeBoundParams paper_section3_bound_params(double a, double alpha0) {
    FiniteTimeBoundParams p;
    p.c0 = 1.0;
    p.R = 0.5;
    p.varrho = std::abs(2.0 * a - 1.0);
    p.L_fbar = 1.0;
    p.sigma_W0 = 0.0;
    p.alpha0 = alpha0;
    p.theta_star_norm = std::sqrt(2.0);
    return p;
}

}  // namespace salab
