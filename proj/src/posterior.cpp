#include "splab/posterior.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Cholesky>

#include "splab/errors.hpp"
#include "splab/geometry.hpp"
#include "splab/rng.hpp"

namespace splab {

namespace {

double value_at(const SpectralModel& model, const Eigen::VectorXd& coords,
                const Eigen::VectorXd& x) {
    return log_likelihood_durbin(model, model.validate(coords), x);
}

} // namespace

FitResult fit_mle(const SpectralModel& model, const Eigen::VectorXd& x,
                  const Theta& init, const FitOptions& opt) {
    model.require_validated(init);
    const int k = model.dim();
    const int n = static_cast<int>(x.size());
    RngStream jitter_rng(opt.jitter_seed, 0);

    for (int attempt = 0; attempt <= opt.max_restarts; ++attempt) {
        Eigen::VectorXd theta = init.coords;
        if (attempt > 0) {
            for (int i = 0; i < k; ++i)
                theta[i] = init.coords[i] +
                           opt.init_jitter * (1.0 + std::abs(init.coords[i])) *
                               jitter_rng.normal();
            if (!model.is_valid(theta)) continue;
        }

        double f = -value_at(model, theta, x) / n;
        Eigen::VectorXd grad =
            -log_likelihood_partials(model, model.validate(theta), x, 1).L1;
        Eigen::MatrixXd H = Eigen::MatrixXd::Identity(k, k);
        bool converged = false;
        int iter = 0;
        for (; iter < opt.max_iterations; ++iter) {
            const double scale = 1.0 + std::abs(f);
            if (grad.lpNorm<Eigen::Infinity>() <= opt.tol_grad * scale) {
                converged = true;
                break;
            }
            Eigen::VectorXd dir = -H * grad;
            if (dir.dot(grad) >= 0.0) { // reset on loss of descent
                H = Eigen::MatrixXd::Identity(k, k);
                dir = -grad;
            }
            // Backtracking line search; invalid parameter points shrink too.
            double step = 1.0;
            double f_new = f;
            Eigen::VectorXd theta_new = theta;
            bool accepted = false;
            for (int ls = 0; ls < 60; ++ls) {
                Eigen::VectorXd cand = theta + step * dir;
                if (model.is_valid(cand)) {
                    double fc;
                    try {
                        fc = -value_at(model, cand, x) / n;
                    } catch (const NotPositiveDefinite&) {
                        fc = std::numeric_limits<double>::infinity();
                    }
                    if (fc <= f + 1e-4 * step * grad.dot(dir)) {
                        theta_new = cand;
                        f_new = fc;
                        accepted = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if (!accepted) break;
            Eigen::VectorXd grad_new =
                -log_likelihood_partials(model, model.validate(theta_new), x, 1).L1;
            const Eigen::VectorXd s = theta_new - theta;
            const Eigen::VectorXd y = grad_new - grad;
            const double sy = s.dot(y);
            if (sy > 1e-14) {
                const Eigen::VectorXd Hy = H * y;
                const double yHy = y.dot(Hy);
                H += ((sy + yHy) / (sy * sy)) * (s * s.transpose()) -
                     (Hy * s.transpose() + s * Hy.transpose()) / sy;
            }
            theta = theta_new;
            f = f_new;
            grad = grad_new;
        }
        if (!converged) continue;

        FitResult res;
        res.theta_hat = model.validate(theta);
        res.loglik = log_likelihood(model, res.theta_hat, x);
        res.grad_norm = grad.lpNorm<Eigen::Infinity>();
        res.iterations = iter;
        res.restarts = attempt;
        res.J_n = -log_likelihood_partials(model, res.theta_hat, x, 2).L2;
        Eigen::LLT<Eigen::MatrixXd> llt(res.J_n);
        if (llt.info() != Eigen::Success)
            throw HessianNotPD(
                "observed information at the optimum is not positive definite "
                "(saddle point or boundary)");
        return res;
    }
    throw DidNotConverge("MLE search failed after " +
                         std::to_string(opt.max_restarts + 1) + " starts");
}

GaussianMoments gaussian_moments(const Eigen::MatrixXd& J_n, int n,
                                 bool want_fourth) {
    const int k = static_cast<int>(J_n.rows());
    Eigen::LLT<Eigen::MatrixXd> llt(J_n);
    if (llt.info() != Eigen::Success)
        throw SingularMatrix("J_n must be positive definite");
    GaussianMoments m;
    m.I2 = llt.solve(Eigen::MatrixXd::Identity(k, k)) / n;
    if (want_fourth) {
        m.I4 = Tensor4(k);
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j)
                for (int a = 0; a < k; ++a)
                    for (int b = 0; b < k; ++b)
                        m.I4(i, j, a, b) = m.I2(i, j) * m.I2(a, b) +
                                           m.I2(i, a) * m.I2(j, b) +
                                           m.I2(i, b) * m.I2(j, a);
    }
    return m;
}

Eigen::VectorXd posterior_shift(const SpectralModel& model,
                                const Eigen::VectorXd& x, const FitResult& fit,
                                const Prior& prior, const QuadratureConfig& cfg,
                                const FdConfig& fd) {
    const int k = model.dim();
    const int n = static_cast<int>(x.size());
    const LikelihoodDerivs ld =
        log_likelihood_partials(model, fit.theta_hat, x, 3);
    const GaussianMoments gm = gaussian_moments(fit.J_n, n);
    const Eigen::VectorXd dlogf = prior.log_gradient(model, fit.theta_hat, cfg, fd);

    Eigen::VectorXd B = Eigen::VectorXd::Zero(k);
    for (int i = 0; i < k; ++i) {
        double cubic = 0.0;
        for (int a = 0; a < k; ++a)
            for (int b = 0; b < k; ++b)
                for (int c = 0; c < k; ++c)
                    cubic += ld.L3(a, b, c) * gm.I4(a, b, c, i);
        B[i] = n / 6.0 * cubic + gm.I2.row(i).dot(dlogf);
    }
    return B;
}

BayesSpectralEstimate bayes_spectral_from_shift(const SpectralModel& model,
                                                const FitResult& fit,
                                                const Eigen::VectorXd& shift,
                                                int n,
                                                const Eigen::VectorXd& omega_grid,
                                                double eps_floor) {
    const int k = model.dim();
    const int nw = static_cast<int>(omega_grid.size());
    const GaussianMoments gm = gaussian_moments(fit.J_n, n, false);
    BayesSpectralEstimate est;
    est.omega = omega_grid;
    est.values.resize(nw);
    est.method = "expansion-moment";
    for (int w = 0; w < nw; ++w) {
        const SpectralEval ev =
            model.spectral_partials(fit.theta_hat, omega_grid[w], 2);
        double v = ev.value + ev.grad.dot(shift);
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j) v += 0.5 * ev.hess(i, j) * gm.I2(i, j);
        est.values[w] = v;
    }
    for (int w = 0; w < nw; ++w) {
        if (est.values[w] < eps_floor) {
            est.values[w] = eps_floor;
            ++est.floored;
        }
    }
    return est;
}

BayesSpectralEstimate bayes_spectral_expansion(
    const SpectralModel& model, const Eigen::VectorXd& x, const FitResult& fit,
    const Prior& prior, const Eigen::VectorXd& omega_grid, ExpansionForm form,
    const QuadratureConfig& cfg, const FdConfig& fd, double eps_floor) {
    const int k = model.dim();
    const int n = static_cast<int>(x.size());
    const int nw = static_cast<int>(omega_grid.size());

    BayesSpectralEstimate est;
    est.omega = omega_grid;
    est.values.resize(nw);

    if (form == ExpansionForm::moment) {
        const Eigen::VectorXd B = posterior_shift(model, x, fit, prior, cfg, fd);
        return bayes_spectral_from_shift(model, fit, B, n, omega_grid, eps_floor);
    } else {
        est.method = "expansion-geometric";
        const GeometryTensors gt = geometry_at(model, fit.theta_hat, cfg);
        const Eigen::VectorXd ratio =
            prior.log_ratio_gradient(model, fit.theta_hat, cfg, fd);
        const Eigen::VectorXd F = ratio + 0.5 * gt.T1;
        // Gm^l_{ij} = g^{lm} Gm_{m,ij}
        Tensor3 Gmu(k);
        for (int l = 0; l < k; ++l)
            for (int i = 0; i < k; ++i)
                for (int j = 0; j < k; ++j) {
                    double acc = 0.0;
                    for (int m = 0; m < k; ++m)
                        acc += gt.g_inv(l, m) * gt.Gm(m, i, j);
                    Gmu(l, i, j) = acc;
                }
        for (int w = 0; w < nw; ++w) {
            const SpectralEval ev =
                model.spectral_partials(fit.theta_hat, omega_grid[w], 2);
            double v = ev.value;
            for (int i = 0; i < k; ++i)
                for (int j = 0; j < k; ++j) {
                    double corr = ev.hess(i, j);
                    for (int l = 0; l < k; ++l) corr -= Gmu(l, i, j) * ev.grad[l];
                    v += gt.g_inv(i, j) * corr / (2.0 * n);
                    v += gt.g_inv(i, j) * F[i] * ev.grad[j] / n;
                }
            est.values[w] = v;
        }
    }

    for (int w = 0; w < nw; ++w) {
        if (est.values[w] < eps_floor) {
            est.values[w] = eps_floor;
            ++est.floored;
        }
    }
    return est;
}

OracleEstimate bayes_spectral_oracle(const SpectralModel& model,
                                     const Eigen::VectorXd& x,
                                     const FitResult& fit, const Prior& prior,
                                     const Eigen::VectorXd& omega_grid,
                                     const OracleConfig& ocfg,
                                     const QuadratureConfig& cfg) {
    const int k = model.dim();
    if (k > 3)
        throw Error("the posterior-integration oracle is limited to k <= 3");
    const int n = static_cast<int>(x.size());
    const int nw = static_cast<int>(omega_grid.size());

    int nodes = ocfg.nodes_per_dim;
    if (nodes <= 0) nodes = k == 1 ? 129 : (k == 2 ? 65 : 33);

    const GaussianMoments gm = gaussian_moments(fit.J_n, n, false);
    Eigen::VectorXd sd(k);
    for (int i = 0; i < k; ++i) sd[i] = std::sqrt(gm.I2(i, i));

    // Tensor grid theta_hat + sd * t, t uniform in [-hw, hw].
    long total = 1;
    for (int i = 0; i < k; ++i) total *= nodes;
    const double hw = ocfg.half_width_sds;
    const double dt = 2.0 * hw / (nodes - 1);

    QuadratureConfig fixed = cfg;
    fixed.adaptive = false;
    fixed.min_nodes = std::max(fixed.min_nodes, 1024);

    double mass = 0.0;
    double boundary_mass = 0.0;
    Eigen::VectorXd mean_acc = Eigen::VectorXd::Zero(k);
    Eigen::VectorXd s_acc = Eigen::VectorXd::Zero(nw);
    std::vector<int> idx(k, 0);
    const double lhat = log_likelihood_durbin(model, fit.theta_hat, x);
    for (long flat = 0; flat < total; ++flat) {
        long rem = flat;
        bool on_boundary = false;
        Eigen::VectorXd coords = fit.theta_hat.coords;
        for (int i = 0; i < k; ++i) {
            idx[i] = static_cast<int>(rem % nodes);
            rem /= nodes;
            if (idx[i] == 0 || idx[i] == nodes - 1) on_boundary = true;
            coords[i] += sd[i] * (-hw + dt * idx[i]);
        }
        if (!model.is_valid(coords)) continue;
        const Theta t = model.validate(coords);
        double w;
        try {
            w = std::exp(log_likelihood_durbin(model, t, x) - lhat) *
                prior.density(model, t, fixed);
        } catch (const NotPositiveDefinite&) {
            continue;
        }
        // Interior nodes adjacent to an invalid point also count as boundary.
        if (!on_boundary) {
            for (int i = 0; i < k && !on_boundary; ++i) {
                Eigen::VectorXd nb = coords;
                nb[i] += sd[i] * dt;
                if (!model.is_valid(nb)) on_boundary = true;
                nb[i] -= 2.0 * sd[i] * dt;
                if (!model.is_valid(nb)) on_boundary = true;
            }
        }
        mass += w;
        if (on_boundary) boundary_mass += w;
        mean_acc += w * coords;
        for (int ww = 0; ww < nw; ++ww)
            s_acc[ww] += w * model.spectral_density(t, omega_grid[ww]);
    }
    if (mass <= 0.0)
        throw Error("oracle posterior mass is zero on the integration grid");

    OracleEstimate out;
    out.estimate.omega = omega_grid;
    out.estimate.values = s_acc / mass;
    out.estimate.method = "oracle-quadrature";
    out.posterior_mean = mean_acc / mass;
    out.boundary_mass = boundary_mass / mass;
    out.estimate.truncated = out.boundary_mass > ocfg.boundary_mass_tol;
    return out;
}

BiasResult mle_bias(const SpectralModel& model, const Theta& theta0, int n,
                    const QuadratureConfig& cfg) {
    model.require_validated(theta0);
    const int k = model.dim();
    BiasResult out;

    const TraceQuantities tq = trace_quantities(model, theta0, n);
    const ExpectedDerivs ed = expected_derivatives(tq);
    out.finite_n.resize(k);
    for (int i = 0; i < k; ++i) {
        double t1 = 0.0, t2 = 0.0;
        for (int l = 0; l < k; ++l)
            for (int a = 0; a < k; ++a)
                for (int m = 0; m < k; ++m)
                    t1 += ed.m2_inv(i, l) * ed.nm21(l, a, m) * ed.m2_inv(a, m);
        for (int a = 0; a < k; ++a)
            for (int b = 0; b < k; ++b)
                for (int c = 0; c < k; ++c)
                    t2 += ed.m2_inv(i, a) * ed.m3(a, b, c) * ed.m2_inv(b, c);
        out.finite_n[i] = t1 / n + 0.5 * t2 / n;
    }

    const GeometryTensors gt = geometry_at(model, theta0, cfg);
    out.geometric.resize(k);
    for (int i = 0; i < k; ++i) {
        double acc = 0.0;
        for (int l = 0; l < k; ++l)
            for (int a = 0; a < k; ++a)
                for (int b = 0; b < k; ++b)
                    acc += gt.g_inv(i, l) * gt.Gm(l, a, b) * gt.g_inv(a, b);
        out.geometric[i] = -acc / (2.0 * n);
    }
    return out;
}

} // namespace splab
