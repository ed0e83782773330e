#include "splab/toeplitz.hpp"

#include <cmath>

#include "splab/errors.hpp"

namespace splab {

Eigen::MatrixXd toeplitz_dense(const std::vector<double>& d, int n) {
    Eigen::MatrixXd m(n, n);
    for (int s = 0; s < n; ++s)
        for (int t = 0; t < n; ++t) m(s, t) = d[std::abs(s - t)];
    return m;
}

Eigen::VectorXd toeplitz_matvec(const std::vector<double>& d,
                                const Eigen::VectorXd& v) {
    const int n = static_cast<int>(v.size());
    Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
    for (int s = 0; s < n; ++s) {
        double acc = 0.0;
        for (int t = 0; t < n; ++t) acc += d[std::abs(s - t)] * v[t];
        y[s] = acc;
    }
    return y;
}

std::vector<double> toeplitz_crosscorr(const Eigen::VectorXd& a,
                                       const Eigen::VectorXd& b) {
    const int n = static_cast<int>(a.size());
    std::vector<double> c(n, 0.0);
    c[0] = a.dot(b);
    for (int h = 1; h < n; ++h) {
        double acc = 0.0;
        for (int t = 0; t + h < n; ++t) acc += a[t + h] * b[t] + a[t] * b[t + h];
        c[h] = acc;
    }
    return c;
}

double toeplitz_quadform(const std::vector<double>& d,
                         const std::vector<double>& crosscorr) {
    const size_t m = std::min(d.size(), crosscorr.size());
    double acc = 0.0;
    for (size_t h = 0; h < m; ++h) acc += d[h] * crosscorr[h];
    return acc;
}

std::vector<double> diagonal_sums(const Eigen::MatrixXd& m) {
    const int n = static_cast<int>(m.rows());
    std::vector<double> s(n, 0.0);
    for (int h = 0; h < n; ++h) {
        double acc = 0.0;
        for (int t = 0; t + h < n; ++t) acc += m(t + h, t);
        s[h] = h == 0 ? acc : 2.0 * acc;
    }
    return s;
}

ToeplitzCov::ToeplitzCov(int n, std::vector<double> gamma)
    : n_(n), gamma_(std::move(gamma)), cache_(std::make_shared<Cache>()) {
    if (n_ < 1) throw Error("covariance size must be at least 1");
    if (static_cast<int>(gamma_.size()) < n_)
        throw DimensionMismatch("need autocovariances up to lag n-1");
}

Eigen::MatrixXd ToeplitzCov::dense() const { return toeplitz_dense(gamma_, n_); }

const Eigen::LLT<Eigen::MatrixXd>& ToeplitzCov::llt() const {
    std::call_once(cache_->once, [this] {
        Eigen::LLT<Eigen::MatrixXd> f(dense());
        if (f.info() != Eigen::Success) return; // leave cache empty
        double ld = 0.0;
        for (int i = 0; i < n_; ++i) ld += std::log(f.matrixLLT()(i, i));
        cache_->logdet = 2.0 * ld;
        cache_->llt.emplace(std::move(f));
    });
    if (!cache_->llt)
        throw NotPositiveDefinite(
            "Toeplitz covariance is numerically indefinite (near-boundary "
            "theta or tolerance misconfiguration)");
    return *cache_->llt;
}

double ToeplitzCov::log_det() const {
    llt();
    return cache_->logdet;
}

Eigen::VectorXd ToeplitzCov::solve(const Eigen::VectorXd& rhs) const {
    return llt().solve(rhs);
}

Eigen::MatrixXd ToeplitzCov::solve(const Eigen::MatrixXd& rhs) const {
    return llt().solve(rhs);
}

Eigen::MatrixXd ToeplitzCov::inverse() const {
    return llt().solve(Eigen::MatrixXd::Identity(n_, n_));
}

std::pair<double, double> ToeplitzCov::quadform_logdet(
    const std::vector<double>& gamma, const Eigen::VectorXd& x) {
    const int n = static_cast<int>(x.size());
    if (static_cast<int>(gamma.size()) < n)
        throw DimensionMismatch("need autocovariances up to lag n-1");
    double v = gamma[0];
    if (v <= 0.0) throw NotPositiveDefinite("gamma(0) must be positive");
    double quad = x[0] * x[0] / v;
    double logdet = std::log(v);
    std::vector<double> phi(n, 0.0), prev(n, 0.0);
    for (int t = 1; t < n; ++t) {
        double acc = gamma[t];
        for (int j = 1; j < t; ++j) acc -= prev[j] * gamma[t - j];
        const double kappa = acc / v;
        phi[t] = kappa;
        for (int j = 1; j < t; ++j) phi[j] = prev[j] - kappa * prev[t - j];
        v *= (1.0 - kappa * kappa);
        if (v <= 0.0)
            throw NotPositiveDefinite(
                "Durbin-Levinson innovation variance is not positive");
        double pred = 0.0;
        for (int j = 1; j <= t; ++j) pred += phi[j] * x[t - j];
        const double e = x[t] - pred;
        quad += e * e / v;
        logdet += std::log(v);
        std::swap(phi, prev);
    }
    return {quad, logdet};
}

} // namespace splab
