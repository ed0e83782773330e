#include "splab/arma_model.hpp"

#include <cmath>
#include <complex>

#include <Eigen/Eigenvalues>

#include "splab/errors.hpp"
#include "splab/jet.hpp"

namespace splab {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

/// gamma(0..max_lag) for X_t = sum a_i X_{t-i} + e_t + sum b_j e_{t-j},
/// Var e = sigma2. Templated on the scalar so the same recursion runs in
/// plain doubles and in third-order Taylor arithmetic.
template <class S>
std::vector<S> arma_autocov_impl(const std::vector<S>& a, const std::vector<S>& b,
                                 const S& sigma2, int max_lag, const S& proto) {
    const int p = static_cast<int>(a.size());
    const int q = static_cast<int>(b.size());
    auto C = [&](double v) { return make_like(proto, v); };

    // MA(inf) weights psi_0..psi_q.
    std::vector<S> psi(q + 1, C(0.0));
    psi[0] = C(1.0);
    for (int j = 1; j <= q; ++j) {
        S s = b[j - 1];
        for (int i = 1; i <= std::min(j, p); ++i) s = s + a[i - 1] * psi[j - i];
        psi[j] = s;
    }

    // rhs_k = sigma2 * sum_{j=k}^q b_j psi_{j-k} with b_0 = 1.
    const int max_rhs = std::max(p, q);
    std::vector<S> rhs(max_rhs + 1, C(0.0));
    for (int k = 0; k <= max_rhs; ++k) {
        S s = C(0.0);
        for (int j = k; j <= q; ++j) {
            S term = (j == 0) ? psi[0] : b[j - 1] * psi[j - k];
            s = s + term;
        }
        rhs[k] = sigma2 * s;
    }

    // Linear system for gamma_0..gamma_p:
    //   gamma_k - sum_{i=1}^p a_i gamma_{|k-i|} = rhs_k,  k = 0..p.
    const int m = p + 1;
    std::vector<S> M(static_cast<size_t>(m) * m, C(0.0));
    std::vector<S> r(m, C(0.0));
    for (int k = 0; k <= p; ++k) {
        M[k * m + k] = M[k * m + k] + 1.0;
        for (int i = 1; i <= p; ++i) {
            const int c = std::abs(k - i);
            M[k * m + c] = M[k * m + c] - a[i - 1];
        }
        r[k] = rhs[k];
    }
    // Gaussian elimination with partial pivoting on the scalar value.
    for (int col = 0; col < m; ++col) {
        int piv = col;
        double best = std::abs(scalar_value(M[col * m + col]));
        for (int row = col + 1; row < m; ++row) {
            const double cand = std::abs(scalar_value(M[row * m + col]));
            if (cand > best) {
                best = cand;
                piv = row;
            }
        }
        if (best < 1e-14)
            throw SingularMatrix("autocovariance system is singular");
        if (piv != col) {
            for (int c = 0; c < m; ++c) std::swap(M[col * m + c], M[piv * m + c]);
            std::swap(r[col], r[piv]);
        }
        const S inv_piv = (C(1.0) / M[col * m + col]);
        for (int row = col + 1; row < m; ++row) {
            const S f = M[row * m + col] * inv_piv;
            for (int c = col; c < m; ++c)
                M[row * m + c] = M[row * m + c] - f * M[col * m + c];
            r[row] = r[row] - f * r[col];
        }
    }
    std::vector<S> head(m, C(0.0));
    for (int row = m - 1; row >= 0; --row) {
        S s = r[row];
        for (int c = row + 1; c < m; ++c) s = s - M[row * m + c] * head[c];
        head[row] = s / M[row * m + row];
    }

    std::vector<S> gamma(max_lag + 1, C(0.0));
    for (int h = 0; h <= std::min(max_lag, p); ++h) gamma[h] = head[h];
    for (int h = p + 1; h <= max_lag; ++h) {
        S s = (h <= max_rhs) ? rhs[h] : C(0.0);
        for (int i = 1; i <= p; ++i) s = s + a[i - 1] * gamma[h - i];
        gamma[h] = s;
    }
    return gamma;
}

} // namespace

SpectralModel::SpectralModel(int p, int q, SigmaPolicy policy, double fixed_sigma2,
                             double root_margin)
    : p_(p), q_(q), policy_(policy), fixed_sigma2_(fixed_sigma2),
      root_margin_(root_margin) {
    if (p < 0 || q < 0)
        throw DimensionMismatch("ARMA orders must be non-negative");
    if (policy == SigmaPolicy::fixed && fixed_sigma2 <= 0.0)
        throw NonPositiveVariance("fixed sigma^2 must be positive");
    k_ = p_ + q_ + (policy_ == SigmaPolicy::fixed ? 0 : 1);
    if (k_ < 1)
        throw DimensionMismatch(
            "parameter dimension is zero; free at least one coordinate");
}

SpectralModel SpectralModel::constant_spectrum() {
    return SpectralModel(0, 0, SigmaPolicy::spectrum_level);
}

void SpectralModel::check_dimension(const Eigen::VectorXd& coords) const {
    if (coords.size() != k_)
        throw DimensionMismatch("expected " + std::to_string(k_) +
                                " coordinates, got " + std::to_string(coords.size()));
}

double SpectralModel::max_reciprocal_root(const Eigen::VectorXd& coords,
                                          int which) const {
    const int order = which == 0 ? p_ : q_;
    const int offset = which == 0 ? 0 : p_;
    if (order == 0) return 0.0;
    if (order == 1) return std::abs(coords[offset]);
    // Companion matrix of the reciprocal-root polynomial
    //   lambda^m - a_1 lambda^{m-1} - ... - a_m        (AR)
    //   lambda^m + b_1 lambda^{m-1} + ... + b_m        (MA)
    Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(order, order);
    for (int j = 0; j < order; ++j)
        comp(0, j) = which == 0 ? coords[offset + j] : -coords[offset + j];
    for (int i = 1; i < order; ++i) comp(i, i - 1) = 1.0;
    Eigen::EigenSolver<Eigen::MatrixXd> es(comp, /*computeEigenvectors=*/false);
    double mx = 0.0;
    for (int i = 0; i < order; ++i) mx = std::max(mx, std::abs(es.eigenvalues()[i]));
    return mx;
}

Theta SpectralModel::validate(const Eigen::VectorXd& coords) const {
    check_dimension(coords);
    const double limit = 1.0 / (1.0 + root_margin_);
    if (max_reciprocal_root(coords, 0) > limit)
        throw NonStationary("AR polynomial has a root on or inside the unit "
                            "circle (within the root margin)");
    if (max_reciprocal_root(coords, 1) > limit)
        throw NonInvertible("MA polynomial has a root on or inside the unit "
                            "circle (within the root margin)");
    if (policy_ == SigmaPolicy::spectrum_level && coords[p_ + q_] <= 0.0)
        throw NonPositiveVariance("spectrum level must be positive");
    Theta t;
    t.coords = coords;
    t.validated = true;
    return t;
}

bool SpectralModel::is_valid(const Eigen::VectorXd& coords) const noexcept {
    try {
        validate(coords);
        return true;
    } catch (...) {
        return false;
    }
}

void SpectralModel::require_validated(const Theta& theta) const {
    if (!theta.validated)
        throw Error("theta has not been validated for this model");
    check_dimension(theta.coords);
}

double SpectralModel::sigma2(const Theta& theta) const {
    switch (policy_) {
        case SigmaPolicy::fixed: return fixed_sigma2_;
        case SigmaPolicy::log_variance: return std::exp(theta.coords[p_ + q_]);
        case SigmaPolicy::spectrum_level: return kTwoPi * theta.coords[p_ + q_];
    }
    return fixed_sigma2_;
}

double SpectralModel::spectral_density(const Theta& theta, double omega) const {
    require_validated(theta);
    std::complex<double> A(1.0, 0.0), B(1.0, 0.0);
    for (int j = 1; j <= p_; ++j)
        A -= theta.coords[j - 1] * std::polar(1.0, -j * omega);
    for (int j = 1; j <= q_; ++j)
        B += theta.coords[p_ + j - 1] * std::polar(1.0, -j * omega);
    return sigma2(theta) / kTwoPi * std::norm(B) / std::norm(A);
}

SpectralEval SpectralModel::spectral_partials(const Theta& theta, double omega,
                                              int max_order) const {
    require_validated(theta);
    if (max_order < 1 || max_order > 3)
        throw OrderUnsupported("supported derivative orders are 1..3");

    const Eigen::VectorXd& c = theta.coords;
    std::complex<double> A(1.0, 0.0), B(1.0, 0.0);
    for (int j = 1; j <= p_; ++j) A -= c[j - 1] * std::polar(1.0, -j * omega);
    for (int j = 1; j <= q_; ++j) B += c[p_ + j - 1] * std::polar(1.0, -j * omega);
    const double u = std::norm(A);
    const double v = std::norm(B);
    const double S = sigma2(theta) / kTwoPi * v / u;

    // Normalized per-block derivative tables. The spectrum factorizes as
    // S = const * E(sigma) * v(b) * 1/u(a) over disjoint coordinate blocks,
    // so a mixed partial is S times the product of per-block factors.
    Eigen::VectorXd ar1(p_), ma1(q_);
    Eigen::MatrixXd ar2(p_, p_), ma2(q_, q_);
    Tensor3 ar3(p_);
    {
        Eigen::VectorXd alpha(p_);
        Eigen::MatrixXd alpha2(p_, p_);
        for (int m = 1; m <= p_; ++m)
            alpha[m - 1] = -2.0 * std::real(std::polar(1.0, m * omega) * A) / u;
        for (int m = 1; m <= p_; ++m)
            for (int l = 1; l <= p_; ++l)
                alpha2(m - 1, l - 1) = 2.0 * std::cos((m - l) * omega) / u;
        for (int m = 0; m < p_; ++m) ar1[m] = -alpha[m];
        for (int m = 0; m < p_; ++m)
            for (int l = 0; l < p_; ++l)
                ar2(m, l) = 2.0 * alpha[m] * alpha[l] - alpha2(m, l);
        for (int m = 0; m < p_; ++m)
            for (int l = 0; l < p_; ++l)
                for (int n = 0; n < p_; ++n)
                    ar3(m, l, n) = -6.0 * alpha[m] * alpha[l] * alpha[n] +
                                   2.0 * (alpha2(m, l) * alpha[n] +
                                          alpha2(m, n) * alpha[l] +
                                          alpha2(l, n) * alpha[m]);
        for (int m = 1; m <= q_; ++m)
            ma1[m - 1] = 2.0 * std::real(std::polar(1.0, m * omega) * B) / v;
        for (int m = 1; m <= q_; ++m)
            for (int l = 1; l <= q_; ++l)
                ma2(m - 1, l - 1) = 2.0 * std::cos((m - l) * omega) / v;
    }
    double sg1 = 0.0, sg2 = 0.0, sg3 = 0.0;
    if (policy_ == SigmaPolicy::log_variance) {
        sg1 = sg2 = sg3 = 1.0;
    } else if (policy_ == SigmaPolicy::spectrum_level) {
        sg1 = 1.0 / c[p_ + q_];
        sg2 = sg3 = 0.0;
    }

    enum Block { AR, MA, SIG };
    auto block = [&](int i) { return i < p_ ? AR : (i < p_ + q_ ? MA : SIG); };
    auto f1 = [&](int i) -> double {
        switch (block(i)) {
            case AR: return ar1[i];
            case MA: return ma1[i - p_];
            default: return sg1;
        }
    };
    auto f2 = [&](int i, int j) -> double { // same block only
        switch (block(i)) {
            case AR: return ar2(i, j);
            case MA: return ma2(i - p_, j - p_);
            default: return sg2;
        }
    };
    auto f3 = [&](int i, int j, int l) -> double { // same block only
        switch (block(i)) {
            case AR: return ar3(i, j, l);
            case MA: return 0.0;
            default: return sg3;
        }
    };

    SpectralEval ev;
    ev.value = S;
    ev.order = max_order;
    ev.grad.resize(k_);
    for (int i = 0; i < k_; ++i) ev.grad[i] = S * f1(i);
    // Compute one representative per index multiset and mirror, so the
    // symmetry of hess and third holds bitwise.
    if (max_order >= 2) {
        ev.hess.resize(k_, k_);
        for (int i = 0; i < k_; ++i)
            for (int j = 0; j <= i; ++j) {
                const double val = block(i) == block(j)
                                       ? S * f2(i, j)
                                       : S * f1(i) * f1(j);
                ev.hess(i, j) = ev.hess(j, i) = val;
            }
    }
    if (max_order >= 3) {
        ev.third = Tensor3(k_);
        for (int i = 0; i < k_; ++i)
            for (int j = 0; j <= i; ++j)
                for (int l = 0; l <= j; ++l) {
                    const Block bi = static_cast<Block>(block(i));
                    const Block bj = static_cast<Block>(block(j));
                    const Block bl = static_cast<Block>(block(l));
                    double val;
                    if (bi == bj && bj == bl) {
                        val = S * f3(i, j, l);
                    } else if (bi == bj) {
                        val = S * f2(i, j) * f1(l);
                    } else if (bi == bl) {
                        val = S * f2(i, l) * f1(j);
                    } else if (bj == bl) {
                        val = S * f2(j, l) * f1(i);
                    } else {
                        val = S * f1(i) * f1(j) * f1(l);
                    }
                    ev.third(i, j, l) = ev.third(i, l, j) = ev.third(j, i, l) =
                        ev.third(j, l, i) = ev.third(l, i, j) =
                            ev.third(l, j, i) = val;
                }
    }
    return ev;
}

std::vector<double> SpectralModel::autocovariances(const Theta& theta,
                                                   int max_lag) const {
    require_validated(theta);
    std::vector<double> a(p_), b(q_);
    for (int i = 0; i < p_; ++i) a[i] = theta.coords[i];
    for (int j = 0; j < q_; ++j) b[j] = theta.coords[p_ + j];
    return arma_autocov_impl<double>(a, b, sigma2(theta), max_lag, 0.0);
}

std::vector<double> SpectralModel::autocovariances_quadrature(
    const Theta& theta, int max_lag, const QuadratureConfig& cfg) const {
    require_validated(theta);
    auto integrand = [&](double w, Eigen::Ref<Eigen::VectorXd> out) {
        const double S = spectral_density(theta, w);
        for (int h = 0; h <= max_lag; ++h) out[h] = std::cos(h * w) * S;
    };
    Eigen::VectorXd g = integrate_on_circle(integrand, max_lag + 1, cfg);
    return std::vector<double>(g.data(), g.data() + max_lag + 1);
}

AutocovDerivs SpectralModel::autocov_derivs(const Theta& theta, int max_lag,
                                            int max_order) const {
    require_validated(theta);
    if (max_order < 1 || max_order > 3)
        throw OrderUnsupported("supported derivative orders are 1..3");

    std::vector<Jet3> a(p_), b(q_);
    for (int i = 0; i < p_; ++i)
        a[i] = Jet3::variable(k_, i, theta.coords[i]);
    for (int j = 0; j < q_; ++j)
        b[j] = Jet3::variable(k_, p_ + j, theta.coords[p_ + j]);
    Jet3 s2;
    switch (policy_) {
        case SigmaPolicy::fixed:
            s2 = Jet3::constant(k_, fixed_sigma2_);
            break;
        case SigmaPolicy::log_variance:
            s2 = Jet3::variable(k_, p_ + q_, theta.coords[p_ + q_]).exp();
            break;
        case SigmaPolicy::spectrum_level:
            s2 = kTwoPi * Jet3::variable(k_, p_ + q_, theta.coords[p_ + q_]);
            break;
    }
    const Jet3 proto = Jet3::constant(k_, 0.0);
    std::vector<Jet3> gamma = arma_autocov_impl<Jet3>(a, b, s2, max_lag, proto);

    AutocovDerivs d;
    d.k = k_;
    d.max_lag = max_lag;
    d.order = max_order;
    d.gamma.resize(max_lag + 1);
    d.d1.assign(k_, std::vector<double>(max_lag + 1, 0.0));
    if (max_order >= 2)
        d.d2.assign(static_cast<size_t>(k_) * k_,
                    std::vector<double>(max_lag + 1, 0.0));
    if (max_order >= 3)
        d.d3.assign(static_cast<size_t>(k_) * k_ * k_,
                    std::vector<double>(max_lag + 1, 0.0));
    for (int h = 0; h <= max_lag; ++h) {
        d.gamma[h] = gamma[h].value();
        for (int i = 0; i < k_; ++i) d.d1[i][h] = gamma[h].grad()[i];
        if (max_order >= 2)
            for (int i = 0; i < k_; ++i)
                for (int j = 0; j < k_; ++j)
                    d.d2[i * k_ + j][h] = gamma[h].hess()(i, j);
        if (max_order >= 3)
            for (int i = 0; i < k_; ++i)
                for (int j = 0; j < k_; ++j)
                    for (int l = 0; l < k_; ++l)
                        d.d3[(i * k_ + j) * k_ + l][h] = gamma[h].third()(i, j, l);
    }
    return d;
}

AutocovDerivs SpectralModel::autocov_derivs_quadrature(
    const Theta& theta, int max_lag, int max_order,
    const QuadratureConfig& cfg) const {
    require_validated(theta);
    if (max_order < 1 || max_order > 3)
        throw OrderUnsupported("supported derivative orders are 1..3");
    const int L = max_lag + 1;
    int block = 1 + k_;
    if (max_order >= 2) block += k_ * k_;
    if (max_order >= 3) block += k_ * k_ * k_;
    auto integrand = [&](double w, Eigen::Ref<Eigen::VectorXd> out) {
        const SpectralEval ev = spectral_partials(theta, w, max_order);
        for (int h = 0; h < L; ++h) {
            const double ch = std::cos(h * w);
            int ofs = h * block;
            out[ofs++] = ch * ev.value;
            for (int i = 0; i < k_; ++i) out[ofs++] = ch * ev.grad[i];
            if (max_order >= 2)
                for (int i = 0; i < k_; ++i)
                    for (int j = 0; j < k_; ++j) out[ofs++] = ch * ev.hess(i, j);
            if (max_order >= 3)
                for (int i = 0; i < k_; ++i)
                    for (int j = 0; j < k_; ++j)
                        for (int l = 0; l < k_; ++l)
                            out[ofs++] = ch * ev.third(i, j, l);
        }
    };
    Eigen::VectorXd r = integrate_on_circle(integrand, L * block, cfg);

    AutocovDerivs d;
    d.k = k_;
    d.max_lag = max_lag;
    d.order = max_order;
    d.gamma.resize(L);
    d.d1.assign(k_, std::vector<double>(L, 0.0));
    if (max_order >= 2)
        d.d2.assign(static_cast<size_t>(k_) * k_, std::vector<double>(L, 0.0));
    if (max_order >= 3)
        d.d3.assign(static_cast<size_t>(k_) * k_ * k_, std::vector<double>(L, 0.0));
    for (int h = 0; h < L; ++h) {
        int ofs = h * block;
        d.gamma[h] = r[ofs++];
        for (int i = 0; i < k_; ++i) d.d1[i][h] = r[ofs++];
        if (max_order >= 2)
            for (int i = 0; i < k_; ++i)
                for (int j = 0; j < k_; ++j) d.d2[i * k_ + j][h] = r[ofs++];
        if (max_order >= 3)
            for (int i = 0; i < k_; ++i)
                for (int j = 0; j < k_; ++j)
                    for (int l = 0; l < k_; ++l)
                        d.d3[(i * k_ + j) * k_ + l][h] = r[ofs++];
    }
    return d;
}

std::string SpectralModel::describe() const {
    std::string s = "ARMA(" + std::to_string(p_) + "," + std::to_string(q_) + ")";
    switch (policy_) {
        case SigmaPolicy::fixed:
            s += " sigma2=" + std::to_string(fixed_sigma2_);
            break;
        case SigmaPolicy::log_variance:
            s += " free log sigma2";
            break;
        case SigmaPolicy::spectrum_level:
            s += " spectrum level";
            break;
    }
    return s;
}

} // namespace splab
