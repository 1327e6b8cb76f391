#include "salab/sa_engine.hpp"

namespace salab {

void validate(const SARunConfig& cfg) {
    if (cfg.n_steps < 1) throw DomainError("n_steps must be >= 1");
    if (cfg.burn_in < 0 || cfg.burn_in >= cfg.n_steps) throw DomainError("burn-in must satisfy 0 <= N0 < N");
    if (cfg.record_stride < 1) throw DomainError("record_stride must be >= 1");
    if (cfg.theta0.size() == 0) throw DomainError("theta0 must be non-empty");
}

PolyakRuppertAverager::PolyakRuppertAverager(std::int64_t burn_in, Eigen::Index dim)
    : burn_in_(burn_in), sum_(Eigen::VectorXd::Zero(dim)), comp_(Eigen::VectorXd::Zero(dim)) {
    if (burn_in < 0) throw DomainError("burn-in must be >= 0");
}

Eigen::VectorXd PolyakRuppertAverager::value() const {
    if (count_ == 0) throw BurnInNotReached("PR average queried before the burn-in index");
    return (sum_ + comp_) / static_cast<double>(count_);
}

Eigen::VectorXd pr_average(std::span<const Eigen::VectorXd> thetas, std::int64_t burn_in, std::int64_t n) {
    if (n < burn_in) throw BurnInNotReached("n precedes the burn-in index");
    if (n >= static_cast<std::int64_t>(thetas.size())) throw DomainError("n beyond the available sequence");
    PolyakRuppertAverager avg(burn_in, thetas.front().size());
    for (std::int64_t k = burn_in; k <= n; ++k) avg.observe(k, thetas[static_cast<std::size_t>(k)]);
    return avg.value();
}

std::vector<Eigen::VectorXd> noise_free_euler(const MeanFieldFn& mean_field, const StepSizeSchedule& schedule,
                                              const Eigen::VectorXd& x0, std::int64_t n_steps) {
    if (n_steps < 1) throw DomainError("noise_free_euler requires N >= 1");
    std::vector<Eigen::VectorXd> xs;
    xs.reserve(static_cast<std::size_t>(n_steps) + 1);
    xs.push_back(x0);
    for (std::int64_t n = 0; n < n_steps; ++n) {
        Eigen::VectorXd next = xs.back() + schedule.alpha(n + 1) * mean_field(xs.back());
        if (!next.allFinite()) throw NumericalDivergence(n + 1, "Euler iterate diverged");
        xs.push_back(std::move(next));
    }
    return xs;
}

}  // namespace salab
