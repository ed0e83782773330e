#include "splab/geometry.hpp"

#include <cmath>
#include <limits>

#include "splab/stats.hpp"

#include <Eigen/Cholesky>

#include "splab/errors.hpp"

namespace splab {

namespace {

constexpr double kInv4Pi = 1.0 / (4.0 * M_PI);
constexpr double kInv2Pi = 1.0 / (2.0 * M_PI);

/// FD sweeps need the integral to be a smooth function of theta, so the node
/// count must not jump between stencil points: disable refinement and use a
/// generous fixed grid.
QuadratureConfig pinned(QuadratureConfig cfg) {
    cfg.adaptive = false;
    cfg.min_nodes = std::max(cfg.min_nodes, 2048);
    return cfg;
}

Eigen::MatrixXd metric_by_quadrature(const SpectralModel& model,
                                     const Theta& theta,
                                     const QuadratureConfig& cfg) {
    const int k = model.dim();
    auto integrand = [&](double w, Eigen::Ref<Eigen::VectorXd> out) {
        const SpectralEval ev = model.spectral_partials(theta, w, 1);
        int ofs = 0;
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j)
                out[ofs++] = ev.grad[i] * ev.grad[j] / (ev.value * ev.value);
    };
    const Eigen::VectorXd r = integrate_on_circle(integrand, k * k, cfg);
    Eigen::MatrixXd g(k, k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) g(i, j) = kInv4Pi * r[i * k + j];
    return g;
}

double log_sqrt_det(const Eigen::MatrixXd& g) {
    Eigen::LLT<Eigen::MatrixXd> llt(g);
    if (llt.info() != Eigen::Success)
        throw SingularMatrix("metric is not positive definite");
    double ld = 0.0;
    for (int i = 0; i < g.rows(); ++i) ld += std::log(llt.matrixLLT()(i, i));
    return ld;
}

Eigen::VectorXd field_gradient(const ScalarField& phi, const Eigen::VectorXd& x,
                               const FdConfig& fd) {
    if (phi.grad) return phi.grad(x);
    const int k = static_cast<int>(x.size());
    Eigen::VectorXd g(k);
    for (int i = 0; i < k; ++i) {
        const double h = fd.rel_step * (1.0 + std::abs(x[i]));
        Eigen::VectorXd xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        g[i] = (phi.value(xp) - phi.value(xm)) / (2.0 * h);
    }
    return g;
}

bool in_domain(const MetricField& m, const Eigen::VectorXd& x) {
    return !m.in_domain || m.in_domain(x);
}

} // namespace

GeometryTensors geometry_at(const SpectralModel& model, const Theta& theta,
                            const QuadratureConfig& cfg) {
    model.require_validated(theta);
    const int k = model.dim();
    const int k2 = k * k, k3 = k2 * k, k4 = k3 * k;
    const int dim = k2 + k3 + k4 + k4 + k3 + k4;
    auto integrand = [&](double w, Eigen::Ref<Eigen::VectorXd> out) {
        const SpectralEval ev = model.spectral_partials(theta, w, 3);
        const double S = ev.value;
        Eigen::VectorXd r(k);
        for (int i = 0; i < k; ++i) r[i] = ev.grad[i] / S;
        int ofs = 0;
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j) out[ofs++] = kInv4Pi * r[i] * r[j];
        for (int a = 0; a < k; ++a)
            for (int i = 0; i < k; ++i)
                for (int j = 0; j < k; ++j)
                    out[ofs++] = kInv4Pi * r[a] * ev.hess(i, j) / S;
        for (int a = 0; a < k; ++a)
            for (int i = 0; i < k; ++i)
                for (int j = 0; j < k; ++j)
                    for (int l = 0; l < k; ++l)
                        out[ofs++] = kInv4Pi * r[a] * ev.third(i, j, l) / S;
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j)
                for (int a = 0; a < k; ++a)
                    for (int b = 0; b < k; ++b)
                        out[ofs++] =
                            kInv4Pi * ev.hess(i, j) * ev.hess(a, b) / (S * S);
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j)
                for (int l = 0; l < k; ++l)
                    out[ofs++] = kInv2Pi * r[i] * r[j] * r[l];
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j)
                for (int a = 0; a < k; ++a)
                    for (int b = 0; b < k; ++b)
                        out[ofs++] = kInv4Pi * r[i] * r[j] * ev.hess(a, b) / S;
    };
    const Eigen::VectorXd res = integrate_on_circle(integrand, dim, cfg);

    GeometryTensors gt;
    gt.theta = theta.coords;
    gt.g.resize(k, k);
    gt.Gm = Tensor3(k);
    gt.M = Tensor4(k);
    gt.N = Tensor4(k);
    gt.T = Tensor3(k);
    gt.L = Tensor4(k);
    int ofs = 0;
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) gt.g(i, j) = res[ofs++];
    for (int a = 0; a < k; ++a)
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j) gt.Gm(a, i, j) = res[ofs++];
    for (int a = 0; a < k; ++a)
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j)
                for (int l = 0; l < k; ++l) gt.M(a, i, j, l) = res[ofs++];
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j)
            for (int a = 0; a < k; ++a)
                for (int b = 0; b < k; ++b) gt.N(i, j, a, b) = res[ofs++];
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j)
            for (int l = 0; l < k; ++l) gt.T(i, j, l) = res[ofs++];
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j)
            for (int a = 0; a < k; ++a)
                for (int b = 0; b < k; ++b) gt.L(i, j, a, b) = res[ofs++];

    Eigen::LLT<Eigen::MatrixXd> llt(gt.g);
    if (llt.info() != Eigen::Success)
        throw SingularMatrix("Fisher metric is not positive definite");
    gt.g_inv = llt.solve(Eigen::MatrixXd::Identity(k, k));

    gt.eG = Tensor3(k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j)
            for (int l = 0; l < k; ++l)
                gt.eG(i, j, l) = gt.Gm(i, j, l) - gt.T(i, j, l);
    gt.T1 = Eigen::VectorXd::Zero(k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j)
            for (int l = 0; l < k; ++l) gt.T1[i] += gt.T(i, j, l) * gt.g_inv(j, l);
    return gt;
}

Eigen::MatrixXd spectral_metric_at(const SpectralModel& model, const Theta& theta,
                                   const QuadratureConfig& cfg) {
    model.require_validated(theta);
    return metric_by_quadrature(model, theta, cfg);
}

ScalarField constant_field(double c) {
    ScalarField f;
    f.value = [c](const Eigen::VectorXd&) { return c; };
    f.grad = [c](const Eigen::VectorXd& x) {
        return Eigen::VectorXd::Zero(x.size()).eval();
    };
    return f;
}

MetricField flat_metric(int k) {
    MetricField m;
    m.metric = [k](const Eigen::VectorXd&) {
        return Eigen::MatrixXd::Identity(k, k).eval();
    };
    return m;
}

MetricField spectral_metric_field(const SpectralModel& model,
                                  const QuadratureConfig& cfg) {
    const QuadratureConfig fixed = pinned(cfg);
    MetricField m;
    m.metric = [model, fixed](const Eigen::VectorXd& x) {
        return metric_by_quadrature(model, model.validate(x), fixed);
    };
    m.in_domain = [model](const Eigen::VectorXd& x) { return model.is_valid(x); };
    return m;
}

Eigen::VectorXd jeffreys_log_gradient(const SpectralModel& model,
                                      const Theta& theta,
                                      const QuadratureConfig& cfg,
                                      const FdConfig& fd) {
    model.require_validated(theta);
    const int k = model.dim();
    const QuadratureConfig fixed = pinned(cfg);
    Eigen::VectorXd out(k);
    for (int j = 0; j < k; ++j) {
        const double h = fd.rel_step * (1.0 + std::abs(theta.coords[j]));
        Eigen::VectorXd xp = theta.coords, xm = theta.coords;
        xp[j] += h;
        xm[j] -= h;
        if (!model.is_valid(xp) || !model.is_valid(xm))
            throw StencilOutOfDomain(
                "Jeffreys gradient stencil leaves the validated region");
        const double lp =
            log_sqrt_det(metric_by_quadrature(model, model.validate(xp), fixed));
        const double lm =
            log_sqrt_det(metric_by_quadrature(model, model.validate(xm), fixed));
        out[j] = (lp - lm) / (2.0 * h);
    }
    return out;
}

Eigen::VectorXd jeffreys_log_gradient_tensors(const GeometryTensors& gt) {
    const int k = static_cast<int>(gt.g.rows());
    Eigen::VectorXd out = Eigen::VectorXd::Zero(k);
    // eG^k_{jk} + T_j/2 with the first index raised by g^{-1}.
    for (int j = 0; j < k; ++j) {
        double acc = 0.0;
        for (int a = 0; a < k; ++a)
            for (int b = 0; b < k; ++b) acc += gt.g_inv(a, b) * gt.eG(b, j, a);
        out[j] = acc + 0.5 * gt.T1[j];
    }
    return out;
}

double laplace_beltrami(const ScalarField& phi, const Eigen::VectorXd& theta,
                        const MetricField& metric, const FdConfig& fd) {
    const int k = static_cast<int>(theta.size());
    if (!in_domain(metric, theta))
        throw StencilOutOfDomain("theta is outside the metric domain");

    auto flux = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        // V(x) = sqrt(det g) g^{-1} grad phi
        const Eigen::MatrixXd g = metric.metric(x);
        Eigen::LLT<Eigen::MatrixXd> llt(g);
        if (llt.info() != Eigen::Success)
            throw SingularMatrix("metric is not positive definite");
        double ld = 0.0;
        for (int i = 0; i < k; ++i) ld += std::log(llt.matrixLLT()(i, i));
        const Eigen::VectorXd gp = field_gradient(phi, x, fd);
        return std::exp(ld) * llt.solve(gp);
    };

    // Every point the outer difference and any nested gradient difference
    // will touch must stay inside the metric domain.
    auto check_stencil = [&](const Eigen::VectorXd& x) {
        if (!in_domain(metric, x))
            throw StencilOutOfDomain(
                "Laplace-Beltrami stencil leaves the metric domain");
        if (phi.grad) return;
        for (int l = 0; l < k; ++l) {
            const double hl = fd.rel_step * (1.0 + std::abs(x[l]));
            Eigen::VectorXd yp = x, ym = x;
            yp[l] += hl;
            ym[l] -= hl;
            if (!in_domain(metric, yp) || !in_domain(metric, ym))
                throw StencilOutOfDomain(
                    "Laplace-Beltrami stencil leaves the metric domain");
        }
    };

    const double sqrt_g0 = std::exp(log_sqrt_det(metric.metric(theta)));
    double div = 0.0;
    for (int j = 0; j < k; ++j) {
        const double h = fd.rel_step * (1.0 + std::abs(theta[j]));
        Eigen::VectorXd xp = theta, xm = theta;
        xp[j] += h;
        xm[j] -= h;
        check_stencil(xp);
        check_stencil(xm);
        div += (flux(xp)[j] - flux(xm)[j]) / (2.0 * h);
    }
    return div / sqrt_g0;
}

SuperharmonicReport check_superharmonic(const ScalarField& h,
                                        const std::vector<Eigen::VectorXd>& grid,
                                        const MetricField& metric,
                                        double tol_super, const FdConfig& fd,
                                        int threads) {
    SuperharmonicReport rep;
    rep.tol = tol_super;
    rep.positive = true;
    rep.min_h = std::numeric_limits<double>::infinity();
    rep.max_laplacian = -std::numeric_limits<double>::infinity();
    // Nodes are independent; sweep in parallel, reduce in index order.
    std::vector<double> hv(grid.size()), lap(grid.size());
    parallel_for(static_cast<long>(grid.size()), threads, [&](long i) {
        hv[i] = h.value(grid[i]);
        lap[i] = laplace_beltrami(h, grid[i], metric, fd);
    });
    for (size_t i = 0; i < grid.size(); ++i) {
        if (hv[i] <= 0.0) rep.positive = false;
        rep.min_h = std::min(rep.min_h, hv[i]);
        if (lap[i] > rep.max_laplacian) {
            rep.max_laplacian = lap[i];
            rep.worst_node = grid[i];
        }
        ++rep.nodes_checked;
    }
    rep.pass = rep.nodes_checked > 0 && rep.positive &&
               rep.max_laplacian <= tol_super;
    return rep;
}

} // namespace splab
