#pragma once

// The SA recursion theta_{n+1} = theta_n + alpha_{n+1} f(theta_n, Phi_{n+1})
// driven by a finite Markov chain, with streaming Polyak-Ruppert averaging.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "salab/errors.hpp"
#include "salab/markov_chain.hpp"
#include "salab/step_size.hpp"

namespace salab {

/// f(theta, x) written into `out` (pre-sized to d).
using UpdateFn = std::function<void(const Eigen::VectorXd& theta, std::size_t x, Eigen::VectorXd& out)>;
using MeanFieldFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct SARunConfig {
    StepSizeSchedule schedule;
    std::int64_t n_steps;
    std::int64_t burn_in = 0;
    Eigen::VectorXd theta0;
    FiniteMarkovChain chain;
    std::uint64_t seed = 0;
    std::int64_t record_stride = 1;
    PathInit init = StationaryInit{};
    bool keep_path = false;
    /// Indices recorded in addition to multiples of record_stride.
    std::vector<std::int64_t> checkpoints = {};
};

void validate(const SARunConfig& cfg);

struct TrajectoryRecord {
    std::vector<std::int64_t> indices;
    std::vector<Eigen::VectorXd> iterates;
    /// Recorded indices with n >= burn_in and the PR average at each.
    std::vector<std::int64_t> pr_indices;
    std::vector<Eigen::VectorXd> pr_iterates;
    Eigen::VectorXd final_theta;
    Eigen::VectorXd final_pr;
    std::vector<std::int64_t> state_visits;  // over Phi_1 .. Phi_N
    std::vector<std::size_t> path;           // Phi_0 .. Phi_N when keep_path
};

/// Streaming mean (1/(n-N0+1)) sum_{k=N0}^n theta_k with compensated sums.
class PolyakRuppertAverager {
public:
    PolyakRuppertAverager(std::int64_t burn_in, Eigen::Index dim);

    /// Feed theta_n; indices must arrive in increasing order. Ignored for n < burn_in.
    void observe(std::int64_t n, const Eigen::VectorXd& theta) {
        if (n < burn_in_) return;
        for (Eigen::Index i = 0; i < sum_.size(); ++i) {
            const double v = theta(i);
            const double t = sum_(i) + v;
            if (std::abs(sum_(i)) >= std::abs(v))
                comp_(i) += (sum_(i) - t) + v;
            else
                comp_(i) += (v - t) + sum_(i);
            sum_(i) = t;
        }
        ++count_;
        last_ = n;
    }

    [[nodiscard]] bool ready() const noexcept { return count_ > 0; }
    [[nodiscard]] std::int64_t count() const noexcept { return count_; }
    /// Current average; BurnInNotReached before theta_{N0} has been seen.
    [[nodiscard]] Eigen::VectorXd value() const;

private:
    std::int64_t burn_in_;
    std::int64_t count_ = 0;
    std::int64_t last_ = -1;
    Eigen::VectorXd sum_;
    Eigen::VectorXd comp_;
};

/// theta^PR_n over an in-memory sequence theta_0, theta_1, ...
Eigen::VectorXd pr_average(std::span<const Eigen::VectorXd> thetas, std::int64_t burn_in, std::int64_t n);

/// Runs the recursion with a precomputed step table (alphas[n] = alpha_n, size > n_steps).
template <class Update>
TrajectoryRecord run_sa(Update&& update, const SARunConfig& cfg, std::span<const double> alphas) {
    validate(cfg);
    if (static_cast<std::int64_t>(alphas.size()) <= cfg.n_steps)
        throw DomainError("run_sa: step table shorter than the horizon");

    const Eigen::Index d = cfg.theta0.size();
    std::vector<std::int64_t> extra = cfg.checkpoints;
    std::sort(extra.begin(), extra.end());
    extra.erase(std::unique(extra.begin(), extra.end()), extra.end());
    auto extra_it = extra.begin();

    TrajectoryRecord rec;
    rec.state_visits.assign(cfg.chain.n_states(), 0);
    PolyakRuppertAverager pr(cfg.burn_in, d);
    ChainSampler sampler(cfg.chain, cfg.seed, cfg.init);
    if (cfg.keep_path) {
        rec.path.reserve(static_cast<std::size_t>(cfg.n_steps) + 1);
        rec.path.push_back(sampler.current());
    }

    Eigen::VectorXd theta = cfg.theta0;
    Eigen::VectorXd incr(d);

    auto record = [&](std::int64_t n) {
        while (extra_it != extra.end() && *extra_it < n) ++extra_it;
        const bool on_stride = n % cfg.record_stride == 0;
        const bool on_extra = extra_it != extra.end() && *extra_it == n;
        if (!(on_stride || on_extra || n == cfg.n_steps)) return;
        rec.indices.push_back(n);
        rec.iterates.push_back(theta);
        if (pr.ready()) {
            rec.pr_indices.push_back(n);
            rec.pr_iterates.push_back(pr.value());
        }
    };

    if (!theta.allFinite()) throw NumericalDivergence(0, "non-finite initial condition");
    pr.observe(0, theta);
    record(0);
    for (std::int64_t n = 0; n < cfg.n_steps; ++n) {
        const std::size_t x = sampler.step();
        ++rec.state_visits[x];
        if (cfg.keep_path) rec.path.push_back(x);
        update(theta, x, incr);
        theta.noalias() += alphas[static_cast<std::size_t>(n + 1)] * incr;
        if (!theta.allFinite()) throw NumericalDivergence(n + 1, "SA iterate diverged");
        pr.observe(n + 1, theta);
        record(n + 1);
    }
    rec.final_theta = theta;
    rec.final_pr = pr.value();
    return rec;
}

template <class Update>
TrajectoryRecord run_sa(Update&& update, const SARunConfig& cfg) {
    validate(cfg);
    const std::vector<double> alphas = cfg.schedule.table(cfg.n_steps);
    return run_sa(std::forward<Update>(update), cfg, std::span<const double>(alphas));
}

/// Deterministic companion x_{n+1} = x_n + alpha_{n+1} fbar(x_n); returns x_0 .. x_N.
std::vector<Eigen::VectorXd> noise_free_euler(const MeanFieldFn& mean_field, const StepSizeSchedule& schedule,
                                              const Eigen::VectorXd& x0, std::int64_t n_steps);

}  // namespace salab
