#include "salab/mp_decomp.hpp"

#include <cmath>

#include "salab/errors.hpp"
#include "salab/stats.hpp"

namespace salab {

HatF hat_f(const LinearSAModel& model) {
    const auto& chain = model.chain();
    HatF h;
    h.A_hat = poisson_solve_matrix(chain, model.A());
    h.b_hat = poisson_solve_vector(chain, StateVectorTable(-model.b().matrix()));

    const Eigen::Index d = model.dim();
    std::vector<Eigen::MatrixXd> pa(chain.n_states(), Eigen::MatrixXd::Zero(d, d));
    for (std::size_t x = 0; x < chain.n_states(); ++x)
        for (std::size_t z = 0; z < chain.n_states(); ++z)
            pa[x] += chain.P()(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(z)) * h.A_hat.at(z);
    h.PA_hat = StateMatrixTable(std::move(pa));
    h.Pb_hat = apply_transition(chain, h.b_hat);
    return h;
}

Eigen::VectorXd upsilon_linear(const LinearSAModel& model, const HatF& hat, const Eigen::VectorXd& theta,
                               std::size_t x_prev, std::size_t x_next) {
    return -(hat.A_hat.at(x_next) * model.f(theta, x_prev));
}

Eigen::VectorXd upsilon_linear(const LinearSAModel& model, const Eigen::VectorXd& theta, std::size_t x_prev,
                               std::size_t x_next) {
    return upsilon_linear(model, hat_f(model), theta, x_prev, x_next);
}

DecompositionTerms decompose_path(const LinearSAModel& model, const StepSizeSchedule& schedule,
                                  const TrajectoryRecord& tr) {
    if (tr.path.empty()) throw MissingPath("trajectory did not retain its state path");
    const auto n_iter = static_cast<std::int64_t>(tr.iterates.size());
    const auto n_path = static_cast<std::int64_t>(tr.path.size());
    if (n_iter != n_path || n_iter < 3) throw MissingPath("decomposition needs unthinned iterates over the path");
    for (std::int64_t k = 0; k < n_iter; ++k)
        if (tr.indices[static_cast<std::size_t>(k)] != k) throw MissingPath("iterates were thinned");

    const HatF hat = hat_f(model);
    const Eigen::Index d = model.dim();
    const Eigen::Index K = n_iter - 2;  // k = 0 .. N-2 uses Phi_{k+2} and theta_{k+1}

    DecompositionTerms t;
    for (Eigen::MatrixXd* m : {&t.delta, &t.W, &t.T_curr, &t.T_next, &t.upsilon, &t.upsilon_closed, &t.wstar,
                               &t.upsilon_star})
        m->resize(K, d);
    t.alpha.resize(K);
    t.residual.resize(K);
    t.theta_norm.resize(K);

    const Eigen::VectorXd& ts = model.thetastar();
    for (Eigen::Index k = 0; k < K; ++k) {
        const auto ku = static_cast<std::size_t>(k);
        const Eigen::VectorXd& th0 = tr.iterates[ku];
        const Eigen::VectorXd& th1 = tr.iterates[ku + 1];
        const std::size_t x1 = tr.path[ku + 1];
        const std::size_t x2 = tr.path[ku + 2];
        const double a = schedule.alpha(k + 1);

        const Eigen::VectorXd delta = model.f(th0, x1) - model.mean_field(th0);
        const Eigen::VectorXd fh0_x2 = hat.eval(th0, x2);
        const Eigen::VectorXd W = fh0_x2 - hat.conditional(th0, x1);
        const Eigen::VectorXd T1 = hat.eval(th0, x1);
        const Eigen::VectorXd T2 = hat.eval(th1, x2);
        const Eigen::VectorXd ups = -(T2 - fh0_x2) / a;

        t.delta.row(k) = delta.transpose();
        t.W.row(k) = W.transpose();
        t.T_curr.row(k) = T1.transpose();
        t.T_next.row(k) = T2.transpose();
        t.upsilon.row(k) = ups.transpose();
        t.upsilon_closed.row(k) = upsilon_linear(model, hat, th0, x1, x2).transpose();
        t.wstar.row(k) = (hat.eval(ts, x2) - hat.conditional(ts, x1)).transpose();
        t.upsilon_star.row(k) = upsilon_linear(model, hat, ts, x1, x2).transpose();
        t.alpha(k) = a;
        t.residual(k) = (delta - (W - T2 + T1 - a * ups)).cwiseAbs().maxCoeff();
        t.theta_norm(k) = th0.norm();
    }
    return t;
}

DecompositionSummary summarize(const LinearSAModel& model, const DecompositionTerms& t,
                               const std::vector<std::size_t>& path, int batches) {
    DecompositionSummary s;
    const Eigen::Index K = t.steps();
    if (K == 0) throw MissingPath("empty decomposition");
    s.steps = K;
    s.max_residual_ratio = (t.residual.array() / (1.0 + t.theta_norm.array())).maxCoeff();
    s.max_upsilon_gap = (t.upsilon - t.upsilon_closed).cwiseAbs().maxCoeff();
    s.upsilon_star_mean = t.upsilon_star.colwise().mean().transpose();
    s.upsilon_star_se = batch_means_se(t.upsilon_star, std::min<int>(batches, static_cast<int>(K)));
    s.upsilon_star_theory = theory_upsilon_star(model);

    // W*_{k+2} binned on Phi_{k+1}; within a bin the samples are independent draws.
    const std::size_t n = model.chain().n_states();
    const Eigen::Index d = model.dim();
    std::vector<Eigen::VectorXd> sum(n, Eigen::VectorXd::Zero(d)), sumsq(n, Eigen::VectorXd::Zero(d));
    s.wstar_cond_count.assign(n, 0);
    for (Eigen::Index k = 0; k < K; ++k) {
        const std::size_t y = path[static_cast<std::size_t>(k) + 1];
        const Eigen::VectorXd w = t.wstar.row(k).transpose();
        sum[y] += w;
        sumsq[y] += w.cwiseAbs2();
        ++s.wstar_cond_count[y];
    }
    for (std::size_t y = 0; y < n; ++y) {
        const auto c = static_cast<double>(s.wstar_cond_count[y]);
        if (c < 2) {
            s.wstar_cond_mean.emplace_back(Eigen::VectorXd::Constant(d, std::nan("")));
            s.wstar_cond_se.emplace_back(Eigen::VectorXd::Constant(d, std::nan("")));
            continue;
        }
        const Eigen::VectorXd mean = sum[y] / c;
        const Eigen::VectorXd var = ((sumsq[y] / c) - mean.cwiseAbs2()) * (c / (c - 1.0));
        s.wstar_cond_mean.push_back(mean);
        s.wstar_cond_se.emplace_back((var.cwiseMax(0.0) / c).cwiseSqrt());
    }

    s.quadratic_variation = t.W.rowwise().squaredNorm().mean();
    s.wstar_quadratic_variation = t.wstar.rowwise().squaredNorm().mean();
    s.trace_sigma_wstar = theory_sigma_pr(model).sigma_wstar.trace();

    const Eigen::VectorXd tele = (t.T_curr - t.T_next).colwise().sum().transpose();
    const Eigen::VectorXd ends = t.T_curr.row(0).transpose() - t.T_next.row(K - 1).transpose();
    s.telescoping_error = (tele - ends).cwiseAbs().maxCoeff();
    return s;
}

}  // namespace salab
