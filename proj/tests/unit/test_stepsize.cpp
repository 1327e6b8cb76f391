#include <gtest/gtest.h>

#include <cmath>
#include <thread>
#include <vector>

#include "salab/errors.hpp"
#include "salab/step_size.hpp"

using salab::DomainError;
using salab::StepSizeSchedule;

namespace {

// Plain long-double summation as an independent reference.
long double naive_tau(double alpha0, double rho, std::int64_t n) {
    long double s = 0.0L;
    for (std::int64_t k = 1; k <= n; ++k) s += static_cast<long double>(alpha0) * std::pow(static_cast<long double>(k), -static_cast<long double>(rho));
    return s;
}

}  // namespace

TEST(StepSize, Construction) {
    EXPECT_NO_THROW(StepSizeSchedule(0.5, 0.3));
    EXPECT_THROW(StepSizeSchedule(0.0, 0.3), DomainError);
    EXPECT_THROW(StepSizeSchedule(-1.0, 0.3), DomainError);
    EXPECT_THROW(StepSizeSchedule(0.5, 0.0), DomainError);
    EXPECT_THROW(StepSizeSchedule(0.5, 1.0), DomainError);
    EXPECT_THROW(StepSizeSchedule(0.5, std::nan("")), DomainError);
    EXPECT_THROW(StepSizeSchedule(INFINITY, 0.5), DomainError);
}

TEST(StepSize, AlphaExamples) {
    EXPECT_DOUBLE_EQ(StepSizeSchedule(0.5, 0.3).alpha(1), 0.5);
    // The quoted experiment value is about 0.09; the formula with alpha0 = 0.5 gives 0.0754.
    EXPECT_NEAR(StepSizeSchedule(0.5, 0.15).alpha(300000), 0.0754, 1e-4);
    EXPECT_NEAR(StepSizeSchedule(0.5, 0.3).alpha(1000), 0.5 * std::pow(1000.0, -0.3), 1e-15);
    EXPECT_NEAR(StepSizeSchedule(0.5, 0.3).alpha(1000), 0.06295, 1e-5);
    EXPECT_THROW((void)StepSizeSchedule(0.5, 0.3).alpha(0), DomainError);
}

TEST(StepSize, TauExamples) {
    const StepSizeSchedule s(0.5, 0.3);
    EXPECT_EQ(s.tau(0), 0.0);
    EXPECT_DOUBLE_EQ(s.tau(1), 0.5);
    const double approx = 0.5 * std::pow(1e4, 0.7) / 0.7;
    EXPECT_NEAR(s.tau(10000), approx, 0.02 * approx);
    EXPECT_THROW((void)s.tau(-1), DomainError);
}

TEST(StepSize, TauMatchesReferenceAcrossCheckpoints) {
    const StepSizeSchedule s(0.3, 0.45);
    for (std::int64_t n : {std::int64_t{1}, std::int64_t{17}, std::int64_t{65535}, std::int64_t{65536},
                           std::int64_t{65537}, std::int64_t{200000}, std::int64_t{131072}}) {
        const double ref = static_cast<double>(naive_tau(0.3, 0.45, n));
        EXPECT_NEAR(s.tau(n), ref, 1e-12 * ref) << n;
    }
    // Out-of-order queries reuse the cache and agree.
    EXPECT_NEAR(s.tau(100), static_cast<double>(naive_tau(0.3, 0.45, 100)), 1e-13);
}

TEST(StepSize, TauIsSharedAndThreadSafe) {
    const StepSizeSchedule s(0.5, 0.6);
    std::vector<double> out(8);
    {
        std::vector<std::jthread> ts;
        for (int t = 0; t < 8; ++t) ts.emplace_back([&, t] { out[static_cast<std::size_t>(t)] = s.tau(300000 - t); });
    }
    for (int t = 0; t < 8; ++t) {
        const double ref = static_cast<double>(naive_tau(0.5, 0.6, 300000 - t));
        EXPECT_NEAR(out[static_cast<std::size_t>(t)], ref, 1e-12 * ref);
    }
}

TEST(StepSize, TauBExamples) {
    const StepSizeSchedule s(0.5, 0.3);
    EXPECT_DOUBLE_EQ(s.tau_b(1), 0.5);
    EXPECT_NEAR(s.tau_b(100), 0.5 * (1 + (std::pow(100.0, 0.7) - 1) / 0.7), 1e-12);
    for (std::int64_t n : {1, 10, 100, 1000, 10000}) EXPECT_GE(s.tau_b(n), s.tau(n)) << n;
    EXPECT_THROW((void)s.tau_b(0), DomainError);
}

TEST(StepSize, TauBBoundsTauForManySchedules) {
    for (double a0 : {0.1, 0.5, 2.0})
        for (double rho : {0.05, 0.3, 0.6, 0.95}) {
            const StepSizeSchedule s(a0, rho);
            double prev = 0.0;
            for (std::int64_t n = 1; n <= 100000; n *= 3) {
                EXPECT_GE(s.tau_b(n), s.tau(n) * (1 - 1e-14));
                EXPECT_GT(s.tau_b(n), prev);
                prev = s.tau_b(n);
            }
        }
}

TEST(StepSize, MonotoneAndUnbounded) {
    for (double rho : {0.15, 0.3, 0.45, 0.6, 0.75, 0.9}) {
        const StepSizeSchedule s(0.5, rho);
        for (std::int64_t n = 1; n < 1000; ++n) EXPECT_GT(s.alpha(n), s.alpha(n + 1));
        EXPECT_LT(s.alpha(1'000'000'000), 0.5 * std::pow(1e9, -rho) * (1 + 1e-12));
        EXPECT_GT(s.tau(1'000'000), s.tau(100'000) + 1.0) << rho;
    }
}

TEST(StepSize, SquareSummabilityDichotomy) {
    // sum alpha_k^2 with exponent 2 rho: tail from N1 to N2 compared with the integral bounds.
    auto sq_sum = [](const StepSizeSchedule& s, std::int64_t n) {
        long double acc = 0.0L;
        for (std::int64_t k = 1; k <= n; ++k) acc += static_cast<long double>(s.alpha(k)) * s.alpha(k);
        return static_cast<double>(acc);
    };
    for (double rho : {0.3, 0.45}) {
        const StepSizeSchedule s(0.5, rho);
        const double growth = sq_sum(s, 1'000'000) - sq_sum(s, 1000);
        const double e = 1 - 2 * rho;
        const double lower = 0.25 * (std::pow(1e6 + 1, e) - std::pow(1001.0, e)) / e;
        EXPECT_GE(growth, lower) << rho;
        EXPECT_GT(growth, 0.1) << rho;
    }
    for (double rho : {0.6, 0.75, 0.9}) {
        const StepSizeSchedule s(0.5, rho);
        const double growth = sq_sum(s, 1'000'000) - sq_sum(s, 1000);
        const double tail_bound = 0.25 * std::pow(1000.0, 1 - 2 * rho) / (2 * rho - 1);
        EXPECT_LE(growth, tail_bound) << rho;
    }
}

TEST(StepSize, TableLayout) {
    const StepSizeSchedule s(0.5, 0.6);
    const auto t = s.table(5);
    ASSERT_EQ(t.size(), 6u);
    EXPECT_EQ(t[0], 0.0);
    for (std::int64_t n = 1; n <= 5; ++n) EXPECT_EQ(t[static_cast<std::size_t>(n)], s.alpha(n));
}

TEST(StepSize, EqualityIsByValue) {
    EXPECT_TRUE(StepSizeSchedule(0.5, 0.6) == StepSizeSchedule(0.5, 0.6));
    EXPECT_FALSE(StepSizeSchedule(0.5, 0.6) == StepSizeSchedule(0.5, 0.61));
}
