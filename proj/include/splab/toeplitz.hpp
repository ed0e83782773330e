#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

namespace splab {

/// Dense symmetric Toeplitz matrix from a derivative-of-autocovariance
/// sequence d(0..n-1); entry (s,t) = d(|s-t|).
Eigen::MatrixXd toeplitz_dense(const std::vector<double>& d, int n);

/// y = T(d) * v without forming the matrix.
Eigen::VectorXd toeplitz_matvec(const std::vector<double>& d,
                                const Eigen::VectorXd& v);

/// Cross-correlation sequence c with c[0] = sum_t a_t b_t and, for h >= 1,
/// c[h] = sum_t (a_{t+h} b_t + a_t b_{t+h}), so that a' T(d) b = dot(d, c)
/// for any symmetric Toeplitz T(d). Lets many quadratic forms against
/// derivative Toeplitz matrices share one O(n^2) pass.
std::vector<double> toeplitz_crosscorr(const Eigen::VectorXd& a,
                                       const Eigen::VectorXd& b);

/// dot(d, c) truncated to the shorter length.
double toeplitz_quadform(const std::vector<double>& d,
                         const std::vector<double>& crosscorr);

/// Sums of the |s-t| = h entries of a symmetric matrix, for h = 0..n-1;
/// Tr(M * T(d)) = dot(d, diag_sums(M)) for symmetric M.
std::vector<double> diagonal_sums(const Eigen::MatrixXd& m);

/// Zero-mean stationary Gaussian covariance Sigma_n with entries
/// gamma(|s-t|). The Cholesky factor is computed lazily on first use with
/// single-fill semantics, so sharing one instance across threads is safe.
class ToeplitzCov {
public:
    ToeplitzCov() = default;
    ToeplitzCov(int n, std::vector<double> gamma);

    int size() const { return n_; }
    const std::vector<double>& acov() const { return gamma_; }
    double operator()(int s, int t) const { return gamma_[std::abs(s - t)]; }

    Eigen::MatrixXd dense() const;

    /// Lazy Cholesky; throws NotPositiveDefinite on breakdown.
    const Eigen::LLT<Eigen::MatrixXd>& llt() const;

    double log_det() const;
    Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
    Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const;
    Eigen::MatrixXd inverse() const;

    /// (x' Sigma^{-1} x, log det Sigma) by the Durbin-Levinson prediction
    /// error decomposition; O(n^2) time, O(n) memory, no matrix formed.
    /// Independent algebraic route to the Cholesky-based values.
    static std::pair<double, double> quadform_logdet(
        const std::vector<double>& gamma, const Eigen::VectorXd& x);

private:
    struct Cache {
        std::once_flag once;
        std::optional<Eigen::LLT<Eigen::MatrixXd>> llt;
        double logdet = 0.0;
    };

    int n_ = 0;
    std::vector<double> gamma_;
    std::shared_ptr<Cache> cache_;
};

} // namespace splab
