#pragma once

// Finite-state Markov chains: admission, stationary law, seeded sampling,
// zero-mean Poisson-equation solutions and CLT covariances of functionals.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <random>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace salab {

/// Per-state vectors g(x) in R^d, stored as an n_states x d matrix (row x = g(x)).
class StateVectorTable {
public:
    StateVectorTable() = default;
    explicit StateVectorTable(Eigen::MatrixXd rows);
    StateVectorTable(std::size_t n_states, std::size_t dim);

    [[nodiscard]] std::size_t n_states() const noexcept { return static_cast<std::size_t>(rows_.rows()); }
    [[nodiscard]] std::size_t dim() const noexcept { return static_cast<std::size_t>(rows_.cols()); }

    [[nodiscard]] Eigen::VectorXd at(std::size_t x) const { return rows_.row(static_cast<Eigen::Index>(x)).transpose(); }
    [[nodiscard]] auto row(std::size_t x) const { return rows_.row(static_cast<Eigen::Index>(x)); }
    [[nodiscard]] const Eigen::MatrixXd& matrix() const noexcept { return rows_; }

private:
    Eigen::MatrixXd rows_;
};

/// Per-state matrices M(x), all of the same shape.
class StateMatrixTable {
public:
    StateMatrixTable() = default;
    explicit StateMatrixTable(std::vector<Eigen::MatrixXd> mats);

    [[nodiscard]] std::size_t n_states() const noexcept { return mats_.size(); }
    [[nodiscard]] Eigen::Index rows() const noexcept { return mats_.empty() ? 0 : mats_.front().rows(); }
    [[nodiscard]] Eigen::Index cols() const noexcept { return mats_.empty() ? 0 : mats_.front().cols(); }
    [[nodiscard]] const Eigen::MatrixXd& at(std::size_t x) const { return mats_.at(x); }
    [[nodiscard]] const std::vector<Eigen::MatrixXd>& mats() const noexcept { return mats_; }

private:
    std::vector<Eigen::MatrixXd> mats_;
};

/// Row-stochastic transition matrix with its stationary law and fundamental
/// matrix Z = (I - P + 1 pi^T)^{-1}, both fixed at construction.
class FiniteMarkovChain {
public:
    [[nodiscard]] std::size_t n_states() const noexcept { return static_cast<std::size_t>(P_.rows()); }
    [[nodiscard]] const Eigen::MatrixXd& P() const noexcept { return P_; }
    [[nodiscard]] const Eigen::VectorXd& pi() const noexcept { return pi_; }
    [[nodiscard]] const Eigen::MatrixXd& fundamental() const noexcept { return Z_; }

    /// Eigenvalues of P ordered by decreasing modulus.
    [[nodiscard]] std::vector<std::complex<double>> eigenvalues() const;
    /// |lambda_2|: the second largest eigenvalue modulus.
    [[nodiscard]] double slem() const;

    /// Draws the successor of `state` from a uniform u in [0,1) by inverse CDF.
    [[nodiscard]] std::size_t next_state(std::size_t state, double u) const noexcept {
        const double* cdf = cdf_.data() + state * n_states();
        std::size_t y = 0;
        const std::size_t last = n_states() - 1;
        while (y < last && u >= cdf[y]) ++y;
        return y;
    }
    [[nodiscard]] std::size_t stationary_draw(double u) const noexcept {
        std::size_t y = 0;
        const std::size_t last = n_states() - 1;
        while (y < last && u >= pi_cdf_[y]) ++y;
        return y;
    }

    friend FiniteMarkovChain make_chain(const Eigen::MatrixXd& P);

private:
    FiniteMarkovChain() = default;

    Eigen::MatrixXd P_;
    Eigen::VectorXd pi_;
    Eigen::MatrixXd Z_;
    std::vector<double> cdf_;     // row-major cumulative rows, last entry of each row exactly 1
    std::vector<double> pi_cdf_;
};

/// Admits P after validation; rows are renormalized to exact sums.
/// Throws NonStochastic or ReducibleOrDegenerate.
FiniteMarkovChain make_chain(const Eigen::MatrixXd& P);

/// P = [[a, 1-a], [1-a, a]], a in (0,1).
FiniteMarkovChain two_state(double a);

struct StationaryInit {};
struct FixedInit {
    std::size_t state;
};
using PathInit = std::variant<StationaryInit, FixedInit>;

/// Uniform double in [0,1) with 53 random bits.
inline double uniform01(std::mt19937_64& rng) noexcept {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Stateful sampler; one uniform draw per transition.
class ChainSampler {
public:
    ChainSampler(const FiniteMarkovChain& chain, std::uint64_t seed, PathInit init);

    [[nodiscard]] std::size_t current() const noexcept { return state_; }
    std::size_t step() noexcept {
        state_ = chain_->next_state(state_, uniform01(rng_));
        return state_;
    }

private:
    const FiniteMarkovChain* chain_;
    std::mt19937_64 rng_;
    std::size_t state_ = 0;
};

/// Phi_0 .. Phi_{n_steps}, deterministic in (seed, init).
std::vector<std::size_t> sample_path(const FiniteMarkovChain& chain, std::int64_t n_steps,
                                     std::uint64_t seed, PathInit init = StationaryInit{});

/// pi(g) as a d-vector.
Eigen::VectorXd stationary_mean(const FiniteMarkovChain& chain, const StateVectorTable& g);

/// Zero-mean solution of (P g_hat)(x) = g_hat(x) - g(x) + pi(g).
StateVectorTable poisson_solve_vector(const FiniteMarkovChain& chain, const StateVectorTable& g);

/// Entrywise Poisson solve for matrix-valued forcing.
StateMatrixTable poisson_solve_matrix(const FiniteMarkovChain& chain, const StateMatrixTable& M);

/// (P g)(x) for each state.
StateVectorTable apply_transition(const FiniteMarkovChain& chain, const StateVectorTable& g);

/// Asymptotic covariance of n^{-1/2} sum g(Phi_k), through the Poisson solution:
/// E_pi[g_hat g~^T + g~ g_hat^T - g~ g~^T], symmetrized.
Eigen::MatrixXd clt_covariance(const FiniteMarkovChain& chain, const StateVectorTable& g);

/// Same quantity in martingale form E_pi[g_hat g_hat^T] - E_pi[(P g_hat)(P g_hat)^T].
Eigen::MatrixXd martingale_covariance(const FiniteMarkovChain& chain, const StateVectorTable& g);

}  // namespace salab
