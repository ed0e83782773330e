#include "splab/likelihood.hpp"

#include <cmath>
#include <vector>

#include "splab/errors.hpp"

namespace splab {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454836;

/// Shared solve products for the derivative formulas at one (theta, x, n).
struct SolveWorkspace {
    int n = 0;
    int k = 0;
    AutocovDerivs d;
    ToeplitzCov cov;
    Eigen::MatrixXd inv;             // Sigma^-1
    std::vector<double> ds_inv;      // diagonal sums of Sigma^-1
    std::vector<Eigen::MatrixXd> C;  // C_i = Sigma^-1 dS_i
    std::vector<Eigen::MatrixXd> A;  // A_i = Sigma^-1 dS_i Sigma^-1
    std::vector<std::vector<double>> ds_A;
};

SolveWorkspace make_workspace(const SpectralModel& model, const Theta& theta,
                              int n, int deriv_order) {
    SolveWorkspace w;
    w.n = n;
    w.k = model.dim();
    w.d = model.autocov_derivs(theta, n - 1, deriv_order);
    w.cov = ToeplitzCov(n, w.d.gamma);
    w.inv = w.cov.inverse();
    w.ds_inv = diagonal_sums(w.inv);
    if (deriv_order >= 2) {
        w.C.resize(w.k);
        for (int i = 0; i < w.k; ++i)
            w.C[i] = w.inv * toeplitz_dense(w.d.first(i), n);
    }
    if (deriv_order >= 3) {
        w.A.resize(w.k);
        w.ds_A.resize(w.k);
        for (int i = 0; i < w.k; ++i) {
            w.A[i] = w.C[i] * w.inv;
            w.ds_A[i] = diagonal_sums(w.A[i]);
        }
    }
    return w;
}

TraceQuantities traces_from_workspace(const SolveWorkspace& w) {
    const int k = w.k;
    const int n = w.n;
    const double norm = 1.0 / (2.0 * n);
    TraceQuantities tq;
    tq.n = n;
    tq.Jp.resize(k, k);
    tq.h.resize(k, k);
    tq.Gp = Tensor3(k);
    tq.Tp = Tensor3(k);
    tq.Np = Tensor3(k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) {
            tq.Jp(i, j) =
                norm * w.C[i].cwiseProduct(w.C[j].transpose()).sum();
            tq.h(i, j) = norm * toeplitz_quadform(w.d.second(i, j), w.ds_inv);
        }
    if (w.d.order >= 3) {
        for (int a = 0; a < k; ++a)
            for (int i = 0; i < k; ++i)
                for (int j = 0; j < k; ++j) {
                    tq.Gp(a, i, j) =
                        norm * toeplitz_quadform(w.d.second(i, j), w.ds_A[a]);
                    tq.Np(a, i, j) =
                        norm * toeplitz_quadform(w.d.third(a, i, j), w.ds_inv);
                }
        // Tr(C_a C_b C_c) via cached pair products.
        for (int a = 0; a < k; ++a)
            for (int b = 0; b < k; ++b) {
                const Eigen::MatrixXd P = w.C[a] * w.C[b];
                for (int c = 0; c < k; ++c)
                    tq.Tp(a, b, c) =
                        norm * P.cwiseProduct(w.C[c].transpose()).sum();
            }
    }
    return tq;
}

} // namespace

ToeplitzCov covariance_matrix(const SpectralModel& model, const Theta& theta,
                              int n) {
    model.require_validated(theta);
    if (n < 1) throw Error("sample size must be at least 1");
    return ToeplitzCov(n, model.autocovariances(theta, n - 1));
}

double log_likelihood(const SpectralModel& model, const Theta& theta,
                      const Eigen::VectorXd& x, bool full_constant) {
    const int n = static_cast<int>(x.size());
    ToeplitzCov cov = covariance_matrix(model, theta, n);
    const double quad = x.dot(cov.solve(x));
    double l = -0.5 * quad - 0.5 * cov.log_det();
    if (full_constant) l -= 0.5 * n * kLogTwoPi;
    return l;
}

double log_likelihood_durbin(const SpectralModel& model, const Theta& theta,
                             const Eigen::VectorXd& x, bool full_constant) {
    model.require_validated(theta);
    const int n = static_cast<int>(x.size());
    const std::vector<double> gamma = model.autocovariances(theta, n - 1);
    const auto [quad, logdet] = ToeplitzCov::quadform_logdet(gamma, x);
    double l = -0.5 * quad - 0.5 * logdet;
    if (full_constant) l -= 0.5 * n * kLogTwoPi;
    return l;
}

LikelihoodDerivs log_likelihood_partials(const SpectralModel& model,
                                         const Theta& theta,
                                         const Eigen::VectorXd& x,
                                         int max_order) {
    model.require_validated(theta);
    if (max_order < 1 || max_order > 3)
        throw OrderUnsupported("supported derivative orders are 1..3");
    const int n = static_cast<int>(x.size());
    const int k = model.dim();
    const SolveWorkspace w = make_workspace(model, theta, n, max_order);
    const double norm = 1.0 / (2.0 * n);

    LikelihoodDerivs out;
    out.order = max_order;

    const Eigen::VectorXd wv = w.cov.solve(x);
    const std::vector<double> cc_ww = toeplitz_crosscorr(wv, wv);

    // L_i = (1/2n) (x' B~_i x - Tr(Sigma^-1 dS_i)) with B~_i = S^-1 dS_i S^-1.
    out.L1.resize(k);
    for (int i = 0; i < k; ++i)
        out.L1[i] = norm * (toeplitz_quadform(w.d.first(i), cc_ww) -
                            toeplitz_quadform(w.d.first(i), w.ds_inv));
    if (max_order < 2) return out;

    std::vector<Eigen::VectorXd> u(k), z(k);
    for (int i = 0; i < k; ++i) {
        u[i] = toeplitz_matvec(w.d.first(i), wv);
        z[i] = w.cov.solve(u[i]);
    }

    const TraceQuantities tq = traces_from_workspace(w);

    // L_ij = x' S_ij x + J'_ij - h_ij.
    out.L2.resize(k, k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j <= i; ++j) {
            const double quad =
                norm * (toeplitz_quadform(w.d.second(i, j), cc_ww) -
                        2.0 * u[i].dot(z[j]));
            out.L2(i, j) = out.L2(j, i) = quad + tq.Jp(i, j) - tq.h(i, j);
        }
    if (max_order < 3) return out;

    // Cross-correlations for the triple quadratic forms.
    std::vector<std::vector<double>> cc_zz(static_cast<size_t>(k) * k);
    std::vector<std::vector<double>> cc_wz(k);
    for (int a = 0; a < k; ++a) {
        cc_wz[a] = toeplitz_crosscorr(wv, z[a]);
        for (int c = a; c < k; ++c) {
            cc_zz[a * k + c] = toeplitz_crosscorr(z[a], z[c]);
            if (c != a) cc_zz[c * k + a] = cc_zz[a * k + c];
        }
    }

    out.L3 = Tensor3(k);
    for (int kk = 0; kk < k; ++kk)
        for (int i = 0; i <= kk; ++i)
            for (int j = 0; j <= i; ++j) {
                // x' S_kij x: all 6 first-derivative triples, minus the 6
                // mixed second-derivative terms (3 symmetric pairs), plus
                // the third-derivative quadratic form.
                double triple = 0.0;
                const int idx[3] = {kk, i, j};
                const int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                         {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
                for (const auto& p : perms) {
                    const int a = idx[p[0]], b = idx[p[1]], c = idx[p[2]];
                    // z_a' dS_b z_c
                    triple += toeplitz_quadform(w.d.first(b), cc_zz[a * k + c]);
                }
                double second = 0.0;
                second += toeplitz_quadform(w.d.second(kk, i), cc_wz[j]);
                second += toeplitz_quadform(w.d.second(kk, j), cc_wz[i]);
                second += toeplitz_quadform(w.d.second(i, j), cc_wz[kk]);
                const double third_qf =
                    toeplitz_quadform(w.d.third(kk, i, j), cc_ww);
                const double xSx = norm * (triple - 2.0 * second + third_qf);

                const double trace_part =
                    (tq.Gp(j, kk, i) + tq.Gp(i, kk, j) + tq.Gp(kk, i, j)) -
                    (tq.Tp(kk, i, j) + tq.Tp(i, kk, j)) - tq.Np(kk, i, j);
                const double val = xSx + trace_part;
                out.L3(kk, i, j) = out.L3(kk, j, i) = out.L3(i, kk, j) = val;
                out.L3(i, j, kk) = out.L3(j, kk, i) = out.L3(j, i, kk) = val;
            }
    return out;
}

Eigen::VectorXd sample_path(const SpectralModel& model, const Theta& theta,
                            int n, RngStream& rng) {
    ToeplitzCov cov = covariance_matrix(model, theta, n);
    const Eigen::VectorXd z = rng.normals(n);
    return cov.llt().matrixL() * z;
}

Eigen::VectorXd sample_path(const SpectralModel& model, const Theta& theta,
                            int n, uint64_t seed, uint64_t stream) {
    RngStream rng(seed, stream);
    return sample_path(model, theta, n, rng);
}

TraceQuantities trace_quantities(const SpectralModel& model, const Theta& theta,
                                 int n) {
    model.require_validated(theta);
    if (n < 2) throw Error("trace quantities need n >= 2");
    const SolveWorkspace w = make_workspace(model, theta, n, 3);
    return traces_from_workspace(w);
}

ExpectedDerivs expected_derivatives(const TraceQuantities& tq) {
    const int k = static_cast<int>(tq.Jp.rows());
    ExpectedDerivs ed;
    ed.n = tq.n;
    ed.m2 = -tq.Jp;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(ed.m2);
    if (!lu.isInvertible())
        throw SingularMatrix("m_ij is singular; degenerate parameterization");
    ed.m2_inv = lu.inverse();
    ed.m3 = Tensor3(k);
    ed.nm21 = Tensor3(k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j)
            for (int l = 0; l < k; ++l) {
                ed.m3(i, j, l) = 2.0 * (tq.Tp(i, j, l) + tq.Tp(j, i, l)) -
                                 (tq.Gp(i, j, l) + tq.Gp(j, i, l) + tq.Gp(l, i, j));
                ed.nm21(i, j, l) =
                    tq.Gp(l, i, j) - tq.Tp(i, j, l) - tq.Tp(j, i, l);
            }
    return ed;
}

} // namespace splab
