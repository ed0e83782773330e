#include "splab/risk.hpp"

#include <algorithm>
#include <cmath>

#include "splab/errors.hpp"
#include "splab/stats.hpp"

namespace splab {

namespace {

QuadratureConfig pinned(QuadratureConfig cfg) {
    cfg.adaptive = false;
    cfg.min_nodes = std::max(cfg.min_nodes, 2048);
    return cfg;
}

struct RepOutcome {
    int status = -1; // 0 ok, 1 fit failure
    double kl_primary = 0.0;
    double kl_secondary = 0.0;
    int floored_primary = 0;
    int floored_secondary = 0;
};

uint64_t cell_seed_for(uint64_t seed, int n) {
    return mix64(seed ^ (static_cast<uint64_t>(n) * kGolden));
}

} // namespace

double kl_divergence(const Eigen::VectorXd& s0, const Eigen::VectorXd& shat) {
    if (s0.size() != shat.size())
        throw DimensionMismatch("spectral fields must share the grid");
    const int n = static_cast<int>(s0.size());
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        if (!(s0[i] > 0.0) || !(shat[i] > 0.0))
            throw NonPositiveDensity("spectral fields must be positive");
        const double r = s0[i] / shat[i];
        acc += r - 1.0 - std::log(r);
    }
    // uniform circle grid: weight 2*pi/n, measure dw/(4*pi)
    return acc / (2.0 * n);
}

double kl_divergence(const std::function<double(double)>& s0,
                     const std::function<double(double)>& shat,
                     const QuadratureConfig& cfg) {
    auto integrand = [&](double w) {
        const double a = s0(w);
        const double b = shat(w);
        if (!(a > 0.0) || !(b > 0.0))
            throw NonPositiveDensity("spectral fields must be positive");
        const double r = a / b;
        return (r - 1.0 - std::log(r)) / (4.0 * M_PI);
    };
    return integrate_on_circle(integrand, cfg);
}

RiskReport mc_risk(const SpectralModel& model, const Theta& theta0,
                   const Prior& prior, int n, int reps, uint64_t seed,
                   Estimator estimator, const RiskOptions& opt) {
    model.require_validated(theta0);
    if (reps < 2) throw Error("mc_risk needs reps >= 2");

    const QuadratureGrid grid = periodic_grid(opt.omega_nodes);
    Eigen::VectorXd s0(opt.omega_nodes);
    for (int i = 0; i < opt.omega_nodes; ++i)
        s0[i] = model.spectral_density(theta0, grid.nodes[i]);

    std::vector<RepOutcome> out(reps);
    parallel_for(reps, opt.threads, [&](long r) {
        RngStream rng(seed, static_cast<uint64_t>(r));
        const Eigen::VectorXd x = sample_path(model, theta0, n, rng);
        FitResult fit;
        try {
            fit = fit_mle(model, x, theta0, opt.fit);
        } catch (const DidNotConverge&) {
            out[r].status = 1;
            return;
        } catch (const HessianNotPD&) {
            out[r].status = 1;
            return;
        } catch (const NotPositiveDefinite&) {
            out[r].status = 1;
            return;
        }
        BayesSpectralEstimate est;
        if (estimator == Estimator::expansion) {
            est = bayes_spectral_expansion(model, x, fit, prior, grid.nodes,
                                           opt.form, opt.quad, opt.fd);
        } else {
            est = bayes_spectral_oracle(model, x, fit, prior, grid.nodes,
                                        opt.oracle, opt.quad)
                      .estimate;
        }
        out[r].status = 0;
        out[r].kl_primary = kl_divergence(s0, est.values);
        out[r].floored_primary = est.floored;
    });

    RiskReport rep;
    rep.theta0 = theta0.coords;
    rep.prior = prior.name();
    rep.estimator = estimator == Estimator::expansion ? "expansion" : "oracle";
    rep.n = n;
    rep.reps = reps;
    rep.seed = seed;
    std::vector<double> kls;
    kls.reserve(reps);
    for (const RepOutcome& o : out) {
        if (o.status == 1) {
            ++rep.fit_failures;
        } else {
            kls.push_back(o.kl_primary);
            rep.floored += o.floored_primary;
        }
    }
    if (rep.fit_failures > opt.max_fit_failure_rate * reps)
        throw TooManyFitFailures(std::to_string(rep.fit_failures) + " of " +
                                 std::to_string(reps) + " fits failed");
    const MeanSe ms = mean_se(kls);
    rep.completed = static_cast<int>(kls.size());
    rep.mean = ms.mean;
    rep.se = ms.se;
    return rep;
}

AsymptoticRisk asymptotic_risk(const SpectralModel& model, const Theta& theta0,
                               const Prior& prior, const QuadratureConfig& cfg,
                               const FdConfig& fd) {
    model.require_validated(theta0);
    const int k = model.dim();
    const GeometryTensors gt = geometry_at(model, theta0, cfg);
    const Eigen::VectorXd phi = prior.log_ratio_gradient(model, theta0, cfg, fd);
    const Eigen::VectorXd F = phi + 0.5 * gt.T1;

    AsymptoticRisk out;
    out.grad_term = 0.5 * phi.dot(gt.g_inv * phi);
    const ScalarField ratio = prior.ratio_field(model, cfg);
    const MetricField metric = spectral_metric_field(model, cfg);
    const double u0 = ratio.value(theta0.coords);
    if (!(u0 > 0.0))
        throw NonPositiveDensity("prior ratio f/pi_J must be positive");
    out.laplace_term = -laplace_beltrami(ratio, theta0.coords, metric, fd) / u0;
    out.diff_vs_jeffreys = out.grad_term + out.laplace_term;

    // f_part = 1/2 g^{ij} F_i F_j + eG^l_{lk} V^k + d_k V^k, V^k = g^{kj} F_j.
    const Eigen::VectorXd V = gt.g_inv * F;
    double conn = 0.0;
    for (int kk = 0; kk < k; ++kk) {
        double c = 0.0;
        for (int l = 0; l < k; ++l)
            for (int m = 0; m < k; ++m) c += gt.g_inv(l, m) * gt.eG(m, l, kk);
        conn += c * V[kk];
    }
    const QuadratureConfig fixed = pinned(cfg);
    auto Vfield = [&](const Eigen::VectorXd& coords) -> Eigen::VectorXd {
        if (!model.is_valid(coords))
            throw StencilOutOfDomain(
                "asymptotic-risk stencil leaves the validated region");
        const Theta t = model.validate(coords);
        const GeometryTensors g = geometry_at(model, t, fixed);
        const Eigen::VectorXd p = prior.log_ratio_gradient(model, t, fixed, fd);
        return g.g_inv * (p + 0.5 * g.T1);
    };
    double divergence = 0.0;
    for (int kk = 0; kk < k; ++kk) {
        const double h = fd.rel_step * (1.0 + std::abs(theta0.coords[kk]));
        Eigen::VectorXd xp = theta0.coords, xm = theta0.coords;
        xp[kk] += h;
        xm[kk] -= h;
        divergence += (Vfield(xp)[kk] - Vfield(xm)[kk]) / (2.0 * h);
    }
    out.f_part = 0.5 * F.dot(gt.g_inv * F) + conn + divergence;
    return out;
}

DominanceResult dominance_experiment(const SpectralModel& model,
                                     const Theta& theta0, const ScalarField& h,
                                     const std::string& h_name,
                                     const std::vector<Eigen::VectorXd>& check_grid,
                                     const std::vector<int>& n_grid,
                                     uint64_t seed,
                                     const DominanceOptions& opt) {
    model.require_validated(theta0);


    DominanceResult result;
    result.h_name = h_name;
    const MetricField metric = spectral_metric_field(model, opt.risk.quad);
    result.check =
        check_superharmonic(h, check_grid, metric, opt.tol_super, opt.risk.fd);
    if (!result.check.pass) return result;

    const Prior prior_j = Prior::jeffreys();
    const Prior prior_h = Prior::jeffreys_times(h, h_name);
    const double asymptote =
        asymptotic_risk(model, theta0, prior_h, opt.risk.quad, opt.risk.fd)
            .diff_vs_jeffreys;

    const QuadratureGrid grid = periodic_grid(opt.risk.omega_nodes);
    Eigen::VectorXd s0(opt.risk.omega_nodes);
    for (int i = 0; i < opt.risk.omega_nodes; ++i)
        s0[i] = model.spectral_density(theta0, grid.nodes[i]);

    for (const int n : n_grid) {
        const uint64_t cseed = cell_seed_for(seed, n);

        std::vector<RepOutcome> out;
        auto run_block = [&](long lo, long hi) {
            out.resize(hi);
            parallel_for(hi - lo, opt.risk.threads, [&](long idx) {
                const long r = lo + idx;
                RngStream rng(cseed, static_cast<uint64_t>(r));
                const Eigen::VectorXd x = sample_path(model, theta0, n, rng);
                FitResult fit;
                try {
                    fit = fit_mle(model, x, theta0, opt.risk.fit);
                } catch (const DidNotConverge&) {
                    out[r].status = 1;
                    return;
                } catch (const HessianNotPD&) {
                    out[r].status = 1;
                    return;
                } catch (const NotPositiveDefinite&) {
                    out[r].status = 1;
                    return;
                }
                // One fit serves both priors: shifts differ by I2 d(log h).
                const Eigen::VectorXd B_j = posterior_shift(
                    model, x, fit, prior_j, opt.risk.quad, opt.risk.fd);
                const Eigen::VectorXd dlogh = prior_h.log_ratio_gradient(
                    model, fit.theta_hat, opt.risk.quad, opt.risk.fd);
                const GaussianMoments gm = gaussian_moments(fit.J_n, n, false);
                const Eigen::VectorXd B_h = B_j + gm.I2 * dlogh;
                const BayesSpectralEstimate est_j =
                    bayes_spectral_from_shift(model, fit, B_j, n, grid.nodes);
                const BayesSpectralEstimate est_h =
                    bayes_spectral_from_shift(model, fit, B_h, n, grid.nodes);
                out[r].status = 0;
                out[r].kl_primary = kl_divergence(s0, est_j.values);
                out[r].kl_secondary = kl_divergence(s0, est_h.values);
                out[r].floored_primary = est_j.floored;
                out[r].floored_secondary = est_h.floored;
            });
        };

        int reps = opt.reps;
        if (reps <= 0) {
            // Pilot-variance rule: size the cell so the paired t statistic
            // reaches target_t at the asymptotically predicted difference.
            run_block(0, opt.pilot_reps);
            std::vector<double> d;
            for (long r = 0; r < opt.pilot_reps; ++r)
                if (out[r].status == 0)
                    d.push_back(out[r].kl_primary - out[r].kl_secondary);
            const MeanSe pilot = mean_se(d);
            const double predicted =
                std::abs(asymptote) / (static_cast<double>(n) * n);
            if (predicted > 0.0 && pilot.sd > 0.0) {
                const double want = opt.target_t * pilot.sd / predicted;
                reps = static_cast<int>(std::ceil(want * want));
            } else {
                reps = opt.max_reps;
            }
            reps = std::clamp(reps, std::max(opt.min_reps, opt.pilot_reps),
                              opt.max_reps);
            run_block(opt.pilot_reps, reps);
        } else {
            run_block(0, reps);
        }

        DominanceCell cell;
        cell.n = n;
        cell.reps = reps;
        cell.cell_seed = cseed;
        cell.asymptote = asymptote;
        std::vector<double> kj, kh, d;
        for (long r = 0; r < reps; ++r) {
            const RepOutcome& o = out[r];
            if (o.status == 1) {
                ++cell.fit_failures;
                continue;
            }
            kj.push_back(o.kl_primary);
            kh.push_back(o.kl_secondary);
            d.push_back(o.kl_primary - o.kl_secondary);
            cell.floored_jeffreys += o.floored_primary;
            cell.floored_h += o.floored_secondary;
        }
        if (cell.fit_failures > opt.risk.max_fit_failure_rate * reps)
            throw TooManyFitFailures(std::to_string(cell.fit_failures) +
                                     " fit failures at n = " +
                                     std::to_string(n));
        const MeanSe mj = mean_se(kj);
        const MeanSe mh = mean_se(kh);
        const MeanSe md = mean_se(d);
        cell.completed = static_cast<int>(d.size());
        cell.risk_jeffreys = mj.mean;
        cell.risk_h = mh.mean;
        cell.diff = md.mean;
        cell.diff_se = md.se;
        cell.unpaired_se = std::sqrt(mj.se * mj.se + mh.se * mh.se);
        cell.t_stat = md.se > 0.0 ? md.mean / md.se : 0.0;
        cell.n2_diff = static_cast<double>(n) * n * md.mean;

        if (opt.oracle_audit_reps > 0) {
            // Re-run a few replications with the quadrature oracle as an
            // audit of the expansion estimates.
            const int audit = static_cast<int>(std::min<long>(opt.oracle_audit_reps, reps));
            double worst = 0.0;
            const double scale = s0.mean();
            for (int r = 0; r < audit; ++r) {
                RngStream rng(cseed, static_cast<uint64_t>(r));
                const Eigen::VectorXd x = sample_path(model, theta0, n, rng);
                FitResult fit;
                try {
                    fit = fit_mle(model, x, theta0, opt.risk.fit);
                } catch (const Error&) {
                    continue;
                }
                const BayesSpectralEstimate est = bayes_spectral_expansion(
                    model, x, fit, prior_h, grid.nodes, ExpansionForm::moment,
                    opt.risk.quad, opt.risk.fd);
                const OracleEstimate oe =
                    bayes_spectral_oracle(model, x, fit, prior_h, grid.nodes,
                                          opt.risk.oracle, opt.risk.quad);
                worst = std::max(worst, (est.values - oe.estimate.values)
                                            .cwiseAbs()
                                            .maxCoeff() /
                                            scale);
            }
            cell.audit_reps = audit;
            cell.audit_max_rel_diff = worst;
        }
        result.cells.push_back(cell);
    }
    return result;
}

} // namespace splab
