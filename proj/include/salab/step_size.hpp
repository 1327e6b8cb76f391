#pragma once

#include <cstdint>
#include <memory>
#include <vector>

namespace salab {

struct TauCache;

/// Power-law step-size alpha_n = alpha0 * n^(-rho), rho in (0,1).
///
/// The schedule is a value type. Exact partial sums tau(n) are memoized in
/// checkpoints every 2^16 terms; the cache is shared between copies and
/// guarded internally, so concurrent queries are safe.
class StepSizeSchedule {
public:
    static constexpr std::int64_t kCheckpointSpacing = std::int64_t{1} << 16;

    StepSizeSchedule(double alpha0, double rho);

    [[nodiscard]] double alpha0() const noexcept { return alpha0_; }
    [[nodiscard]] double rho() const noexcept { return rho_; }

    /// alpha0 * n^(-rho); DomainError for n < 1.
    [[nodiscard]] double alpha(std::int64_t n) const;

    /// sum_{k=1}^n alpha_k, exact (compensated) summation.
    [[nodiscard]] double tau(std::int64_t n) const;

    /// alpha0 * (1 + (n^(1-rho) - 1)/(1-rho)), an upper bound on tau(n).
    [[nodiscard]] double tau_b(std::int64_t n) const;

    /// alpha_0 .. alpha_n with the unused slot 0 set to 0; index n holds alpha_n.
    [[nodiscard]] std::vector<double> table(std::int64_t n) const;

    friend bool operator==(const StepSizeSchedule& l, const StepSizeSchedule& r) noexcept {
        return l.alpha0_ == r.alpha0_ && l.rho_ == r.rho_;
    }

private:
    double alpha0_;
    double rho_;
    std::shared_ptr<TauCache> cache_;
};

}  // namespace salab
