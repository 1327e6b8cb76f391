#pragma once

// Independent reference computations used by the tests. None of these call
// the library's solvers: they work from matrix powers and truncated series.

#include <cmath>
#include <random>

#include <Eigen/Dense>

namespace oracle {

/// Random row-stochastic matrix with strictly positive entries (irreducible, aperiodic).
inline Eigen::MatrixXd random_stochastic(int n, std::mt19937_64& rng, double floor = 0.02) {
    std::uniform_real_distribution<double> u(floor, 1.0);
    Eigen::MatrixXd P(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) P(i, j) = u(rng);
        P.row(i) /= P.row(i).sum();
    }
    return P;
}

inline Eigen::MatrixXd random_matrix(int r, int c, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> g(0.0, scale);
    Eigen::MatrixXd M(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) M(i, j) = g(rng);
    return M;
}

/// Stationary law from rows of P^(2^k) after repeated squaring.
inline Eigen::VectorXd stationary_by_powers(const Eigen::MatrixXd& P, int squarings = 60) {
    Eigen::MatrixXd Q = P;
    for (int k = 0; k < squarings; ++k) Q = Q * Q;
    Eigen::VectorXd pi = Q.row(0).transpose();
    return pi / pi.sum();
}

/// Second largest eigenvalue modulus by general eigen-decomposition.
inline double slem(const Eigen::MatrixXd& P) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(P);
    std::vector<double> mods;
    for (Eigen::Index i = 0; i < P.rows(); ++i) mods.push_back(std::abs(es.eigenvalues()(i)));
    std::sort(mods.rbegin(), mods.rend());
    return mods.size() > 1 ? mods[1] : 0.0;
}

/// Lag L with slem^L < 1e-12.
inline int truncation_lag(const Eigen::MatrixXd& P) {
    const double s = slem(P);
    if (s < 1e-14) return 1;
    return static_cast<int>(std::ceil(std::log(1e-12) / std::log(s))) + 1;
}

/// Zero-mean Poisson solution as the series sum_{k>=0} P^k g~ (rows are states).
inline Eigen::MatrixXd poisson_series(const Eigen::MatrixXd& P, const Eigen::VectorXd& pi, const Eigen::MatrixXd& g) {
    const Eigen::RowVectorXd mean = pi.transpose() * g;
    const Eigen::MatrixXd gt = g.rowwise() - mean;
    const int L = truncation_lag(P) + 50;
    Eigen::MatrixXd term = gt, sum = gt;
    for (int k = 1; k < L; ++k) {
        term = P * term;
        sum += term;
    }
    return sum;
}

/// sum_{|k| <= L} E_pi[g~(Phi_0) g~(Phi_k)^T].
inline Eigen::MatrixXd autocov_sum(const Eigen::MatrixXd& P, const Eigen::VectorXd& pi, const Eigen::MatrixXd& g) {
    const Eigen::RowVectorXd mean = pi.transpose() * g;
    const Eigen::MatrixXd gt = g.rowwise() - mean;
    const int L = truncation_lag(P);
    const Eigen::MatrixXd D = pi.asDiagonal() * gt;  // pi(x) g~(x)
    Eigen::MatrixXd S = gt.transpose() * D;
    Eigen::MatrixXd Pk = gt;
    for (int k = 1; k <= L; ++k) {
        Pk = P * Pk;  // (P^k g~)(x)
        const Eigen::MatrixXd C = D.transpose() * Pk;
        S += C + C.transpose();
    }
    return S;
}

/// Two-state closed forms for the example model with parameter a.
struct TwoStateClosedForm {
    Eigen::Vector2d upsilon;
    Eigen::Matrix2d sigma_pr;
};

inline TwoStateClosedForm two_state_closed_form(double a, const Eigen::Matrix2d& A0, const Eigen::Matrix2d& A1,
                                                const Eigen::Vector2d& b0, const Eigen::Vector2d& b1) {
    const Eigen::Matrix2d Astar = 0.5 * (A0 + A1);
    const Eigen::Vector2d theta = Astar.inverse() * (0.5 * (b0 + b1));
    const Eigen::Vector2d v = A0 * theta - b0;
    const Eigen::Matrix2d G = Astar.inverse();
    TwoStateClosedForm out;
    out.upsilon = (2 * a - 1) / (4 * (1 - a)) * (A1 - A0) * v;
    out.sigma_pr = a / (1 - a) * G * v * v.transpose() * G.transpose();
    return out;
}

}  // namespace oracle
