#include "salab/markov_chain.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "salab/errors.hpp"

namespace salab {

namespace {

constexpr double kRowSumTolerance = 1e-9;
constexpr double kPivotThreshold = 1e-12;
constexpr double kStationarityTolerance = 1e-10;

void require_finite(const Eigen::MatrixXd& m, const char* what) {
    if (!m.allFinite()) throw DomainError(std::string(what) + ": non-finite entry");
}

}  // namespace

StateVectorTable::StateVectorTable(Eigen::MatrixXd rows) : rows_(std::move(rows)) {
    require_finite(rows_, "StateVectorTable");
}

StateVectorTable::StateVectorTable(std::size_t n_states, std::size_t dim)
    : rows_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_states), static_cast<Eigen::Index>(dim))) {}

StateMatrixTable::StateMatrixTable(std::vector<Eigen::MatrixXd> mats) : mats_(std::move(mats)) {
    for (const auto& m : mats_) {
        if (m.rows() != mats_.front().rows() || m.cols() != mats_.front().cols())
            throw DomainError("StateMatrixTable: non-uniform shapes");
        require_finite(m, "StateMatrixTable");
    }
}

FiniteMarkovChain make_chain(const Eigen::MatrixXd& P_in) {
    const Eigen::Index n = P_in.rows();
    if (n == 0 || P_in.cols() != n) throw NonStochastic("transition matrix must be square and non-empty");
    if (!P_in.allFinite()) throw NonStochastic("transition matrix has non-finite entries");
    if ((P_in.array() < 0.0).any() || (P_in.array() > 1.0).any())
        throw NonStochastic("transition probabilities must lie in [0,1]");

    Eigen::MatrixXd P = P_in;
    for (Eigen::Index x = 0; x < n; ++x) {
        const double s = P.row(x).sum();
        if (std::abs(s - 1.0) > kRowSumTolerance)
            throw NonStochastic("row " + std::to_string(x) + " sums to " + std::to_string(s));
        P.row(x) /= s;
    }

    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
    const double inv_n = 1.0 / static_cast<double>(n);

    // pi^T (I - P + 1 1^T / n) = 1^T / n
    Eigen::FullPivLU<Eigen::MatrixXd> stat_lu((I - P + Eigen::MatrixXd::Constant(n, n, inv_n)).transpose());
    stat_lu.setThreshold(kPivotThreshold);
    if (!stat_lu.isInvertible()) throw ReducibleOrDegenerate("stationary distribution is not unique");
    Eigen::VectorXd pi = stat_lu.solve(Eigen::VectorXd::Constant(n, inv_n));
    if ((pi.array() < -1e-12).any()) throw ReducibleOrDegenerate("stationary solve produced negative mass");
    pi = pi.cwiseMax(0.0);
    pi /= pi.sum();
    if ((pi.transpose() * P - pi.transpose()).cwiseAbs().maxCoeff() > kStationarityTolerance)
        throw ReducibleOrDegenerate("stationary vector fails pi P = pi");

    Eigen::FullPivLU<Eigen::MatrixXd> fund_lu(I - P + Eigen::VectorXd::Ones(n) * pi.transpose());
    fund_lu.setThreshold(kPivotThreshold);
    if (!fund_lu.isInvertible()) throw ReducibleOrDegenerate("I - P + 1 pi^T is singular");

    FiniteMarkovChain chain;
    chain.P_ = std::move(P);
    chain.pi_ = std::move(pi);
    chain.Z_ = fund_lu.inverse();

    const auto un = static_cast<std::size_t>(n);
    chain.cdf_.resize(un * un);
    for (std::size_t x = 0; x < un; ++x) {
        double acc = 0.0;
        for (std::size_t y = 0; y < un; ++y) {
            acc += chain.P_(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y));
            chain.cdf_[x * un + y] = acc;
        }
        chain.cdf_[x * un + un - 1] = 1.0;
    }
    chain.pi_cdf_.resize(un);
    double acc = 0.0;
    for (std::size_t y = 0; y < un; ++y) {
        acc += chain.pi_(static_cast<Eigen::Index>(y));
        chain.pi_cdf_[y] = acc;
    }
    chain.pi_cdf_[un - 1] = 1.0;
    return chain;
}

FiniteMarkovChain two_state(double a) {
    if (!(a > 0.0 && a < 1.0)) throw DomainError("two_state: a must lie in (0,1)");
    Eigen::MatrixXd P(2, 2);
    P << a, 1.0 - a, 1.0 - a, a;
    return make_chain(P);
}

std::vector<std::complex<double>> FiniteMarkovChain::eigenvalues() const {
    Eigen::EigenSolver<Eigen::MatrixXd> es(P_, false);
    std::vector<std::complex<double>> ev(es.eigenvalues().begin(), es.eigenvalues().end());
    std::stable_sort(ev.begin(), ev.end(),
                     [](const auto& l, const auto& r) { return std::abs(l) > std::abs(r); });
    return ev;
}

double FiniteMarkovChain::slem() const {
    if (n_states() < 2) return 0.0;
    return std::abs(eigenvalues()[1]);
}

ChainSampler::ChainSampler(const FiniteMarkovChain& chain, std::uint64_t seed, PathInit init)
    : chain_(&chain), rng_(seed) {
    if (const auto* fixed = std::get_if<FixedInit>(&init)) {
        if (fixed->state >= chain.n_states()) throw DomainError("initial state out of range");
        state_ = fixed->state;
    } else {
        state_ = chain.stationary_draw(uniform01(rng_));
    }
}

std::vector<std::size_t> sample_path(const FiniteMarkovChain& chain, std::int64_t n_steps,
                                     std::uint64_t seed, PathInit init) {
    if (n_steps < 0) throw DomainError("sample_path: n_steps must be >= 0");
    ChainSampler sampler(chain, seed, init);
    std::vector<std::size_t> path;
    path.reserve(static_cast<std::size_t>(n_steps) + 1);
    path.push_back(sampler.current());
    for (std::int64_t k = 0; k < n_steps; ++k) path.push_back(sampler.step());
    return path;
}

namespace {

void require_dimensioned(const FiniteMarkovChain& chain, std::size_t n_states) {
    if (n_states != chain.n_states()) throw DomainError("table is not dimensioned to the chain");
}

}  // namespace

Eigen::VectorXd stationary_mean(const FiniteMarkovChain& chain, const StateVectorTable& g) {
    require_dimensioned(chain, g.n_states());
    return g.matrix().transpose() * chain.pi();
}

StateVectorTable poisson_solve_vector(const FiniteMarkovChain& chain, const StateVectorTable& g) {
    require_dimensioned(chain, g.n_states());
    const Eigen::RowVectorXd mean = (g.matrix().transpose() * chain.pi()).transpose();
    const Eigen::MatrixXd centered = g.matrix().rowwise() - mean;
    return StateVectorTable(chain.fundamental() * centered);
}

StateMatrixTable poisson_solve_matrix(const FiniteMarkovChain& chain, const StateMatrixTable& M) {
    require_dimensioned(chain, M.n_states());
    const std::size_t n = chain.n_states();
    const Eigen::Index r = M.rows();
    const Eigen::Index c = M.cols();
    // Flatten each M(x) into row x of an n x (r*c) table, solve, unflatten.
    Eigen::MatrixXd flat(static_cast<Eigen::Index>(n), r * c);
    for (std::size_t x = 0; x < n; ++x)
        flat.row(static_cast<Eigen::Index>(x)) = Eigen::Map<const Eigen::RowVectorXd>(M.at(x).data(), r * c);
    const StateVectorTable hat = poisson_solve_vector(chain, StateVectorTable(flat));
    std::vector<Eigen::MatrixXd> out;
    out.reserve(n);
    for (std::size_t x = 0; x < n; ++x) {
        Eigen::RowVectorXd rowx = hat.row(x);
        out.emplace_back(Eigen::Map<const Eigen::MatrixXd>(rowx.data(), r, c));
    }
    return StateMatrixTable(std::move(out));
}

StateVectorTable apply_transition(const FiniteMarkovChain& chain, const StateVectorTable& g) {
    require_dimensioned(chain, g.n_states());
    return StateVectorTable(chain.P() * g.matrix());
}

Eigen::MatrixXd clt_covariance(const FiniteMarkovChain& chain, const StateVectorTable& g) {
    const Eigen::RowVectorXd mean = stationary_mean(chain, g).transpose();
    const Eigen::MatrixXd centered = g.matrix().rowwise() - mean;
    const Eigen::MatrixXd hat = poisson_solve_vector(chain, g).matrix();
    const auto D = chain.pi().asDiagonal();
    const Eigen::MatrixXd cross = hat.transpose() * D * centered;
    const Eigen::MatrixXd sigma = cross + cross.transpose() - centered.transpose() * D * centered;
    return 0.5 * (sigma + sigma.transpose());
}

Eigen::MatrixXd martingale_covariance(const FiniteMarkovChain& chain, const StateVectorTable& g) {
    const Eigen::MatrixXd hat = poisson_solve_vector(chain, g).matrix();
    const Eigen::MatrixXd Phat = chain.P() * hat;
    const auto D = chain.pi().asDiagonal();
    const Eigen::MatrixXd sigma = hat.transpose() * D * hat - Phat.transpose() * D * Phat;
    return 0.5 * (sigma + sigma.transpose());
}

}  // namespace salab
