#include "salab/step_size.hpp"

#include <cmath>
#include <mutex>

#include "salab/errors.hpp"

namespace salab {

namespace {

// Neumaier summation state.
struct Compensated {
    double sum = 0.0;
    double comp = 0.0;

    void add(double v) noexcept {
        const double t = sum + v;
        if (std::abs(sum) >= std::abs(v))
            comp += (sum - t) + v;
        else
            comp += (v - t) + sum;
        sum = t;
    }
    [[nodiscard]] double value() const noexcept { return sum + comp; }
};

}  // namespace

struct TauCache {
    std::mutex mutex;
    // checkpoints[j] holds the running sum through index j * kCheckpointSpacing.
    std::vector<Compensated> checkpoints{Compensated{}};
};

StepSizeSchedule::StepSizeSchedule(double alpha0, double rho)
    : alpha0_(alpha0), rho_(rho), cache_(std::make_shared<TauCache>()) {
    if (!(alpha0 > 0.0) || !std::isfinite(alpha0)) throw DomainError("alpha0 must be positive");
    if (!(rho > 0.0 && rho < 1.0)) throw DomainError("rho must lie in the open interval (0,1)");
}

double StepSizeSchedule::alpha(std::int64_t n) const {
    if (n < 1) throw DomainError("alpha(n) requires n >= 1");
    return alpha0_ * std::pow(static_cast<double>(n), -rho_);
}

double StepSizeSchedule::tau(std::int64_t n) const {
    if (n < 0) throw DomainError("tau(n) requires n >= 0");
    const std::int64_t block = n / kCheckpointSpacing;
    Compensated acc;
    {
        std::lock_guard lock(cache_->mutex);
        auto& cps = cache_->checkpoints;
        while (static_cast<std::int64_t>(cps.size()) <= block) {
            Compensated next = cps.back();
            const std::int64_t start = static_cast<std::int64_t>(cps.size() - 1) * kCheckpointSpacing;
            for (std::int64_t k = start + 1; k <= start + kCheckpointSpacing; ++k) next.add(alpha(k));
            cps.push_back(next);
        }
        acc = cps[static_cast<std::size_t>(block)];
    }
    for (std::int64_t k = block * kCheckpointSpacing + 1; k <= n; ++k) acc.add(alpha(k));
    return acc.value();
}

double StepSizeSchedule::tau_b(std::int64_t n) const {
    if (n < 1) throw DomainError("tau_b(n) requires n >= 1");
    return alpha0_ * (1.0 + (std::pow(static_cast<double>(n), 1.0 - rho_) - 1.0) / (1.0 - rho_));
}

std::vector<double> StepSizeSchedule::table(std::int64_t n) const {
    if (n < 0) throw DomainError("table(n) requires n >= 0");
    std::vector<double> t(static_cast<std::size_t>(n) + 1, 0.0);
    for (std::int64_t k = 1; k <= n; ++k) t[static_cast<std::size_t>(k)] = alpha(k);
    return t;
}

}  // namespace salab
