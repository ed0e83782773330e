#include "splab/prior.hpp"

#include <cmath>
#include <utility>

#include <Eigen/Cholesky>

#include "splab/errors.hpp"

namespace splab {

namespace {

double sqrt_det(const Eigen::MatrixXd& g) {
    Eigen::LLT<Eigen::MatrixXd> llt(g);
    if (llt.info() != Eigen::Success)
        throw SingularMatrix("metric is not positive definite");
    double ld = 0.0;
    for (int i = 0; i < g.rows(); ++i) ld += std::log(llt.matrixLLT()(i, i));
    return std::exp(ld);
}

Eigen::VectorXd fd_gradient(const ScalarField& f, const Eigen::VectorXd& x,
                            const FdConfig& fd) {
    if (f.grad) return f.grad(x);
    const int k = static_cast<int>(x.size());
    Eigen::VectorXd g(k);
    for (int i = 0; i < k; ++i) {
        const double h = fd.rel_step * (1.0 + std::abs(x[i]));
        Eigen::VectorXd xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        g[i] = (f.value(xp) - f.value(xm)) / (2.0 * h);
    }
    return g;
}

} // namespace

Prior Prior::jeffreys() {
    Prior p;
    p.kind_ = Kind::jeffreys;
    p.name_ = "jeffreys";
    return p;
}

Prior Prior::jeffreys_times(ScalarField h, std::string name) {
    Prior p;
    p.kind_ = Kind::jeffreys_times_h;
    p.name_ = std::move(name);
    p.field_ = std::move(h);
    return p;
}

Prior Prior::custom_log_density(ScalarField log_f, std::string name) {
    Prior p;
    p.kind_ = Kind::custom;
    p.name_ = std::move(name);
    p.field_ = std::move(log_f);
    return p;
}

Eigen::VectorXd Prior::log_gradient(const SpectralModel& model, const Theta& theta,
                                    const QuadratureConfig& cfg,
                                    const FdConfig& fd) const {
    switch (kind_) {
        case Kind::jeffreys:
            return jeffreys_log_gradient(model, theta, cfg, fd);
        case Kind::jeffreys_times_h: {
            const Eigen::VectorXd base = jeffreys_log_gradient(model, theta, cfg, fd);
            const double hv = field_.value(theta.coords);
            if (hv <= 0.0)
                throw NonPositiveDensity("prior factor h must be positive");
            return base + fd_gradient(field_, theta.coords, fd) / hv;
        }
        case Kind::custom:
            return fd_gradient(field_, theta.coords, fd);
    }
    return Eigen::VectorXd();
}

Eigen::VectorXd Prior::log_ratio_gradient(const SpectralModel& model,
                                          const Theta& theta,
                                          const QuadratureConfig& cfg,
                                          const FdConfig& fd) const {
    switch (kind_) {
        case Kind::jeffreys:
            return Eigen::VectorXd::Zero(model.dim());
        case Kind::jeffreys_times_h: {
            const double hv = field_.value(theta.coords);
            if (hv <= 0.0)
                throw NonPositiveDensity("prior factor h must be positive");
            return fd_gradient(field_, theta.coords, fd) / hv;
        }
        case Kind::custom:
            return fd_gradient(field_, theta.coords, fd) -
                   jeffreys_log_gradient(model, theta, cfg, fd);
    }
    return Eigen::VectorXd();
}

double Prior::density(const SpectralModel& model, const Theta& theta,
                      const QuadratureConfig& cfg) const {
    switch (kind_) {
        case Kind::jeffreys:
            return sqrt_det(spectral_metric_at(model, theta, cfg));
        case Kind::jeffreys_times_h: {
            const double hv = field_.value(theta.coords);
            if (hv <= 0.0)
                throw NonPositiveDensity("prior factor h must be positive");
            return sqrt_det(spectral_metric_at(model, theta, cfg)) * hv;
        }
        case Kind::custom:
            return std::exp(field_.value(theta.coords));
    }
    return 0.0;
}

ScalarField Prior::ratio_field(const SpectralModel& model,
                               const QuadratureConfig& cfg) const {
    switch (kind_) {
        case Kind::jeffreys:
            return constant_field(1.0);
        case Kind::jeffreys_times_h:
            return field_;
        case Kind::custom: {
            ScalarField f;
            ScalarField logf = field_;
            QuadratureConfig fixed = cfg;
            fixed.adaptive = false;
            fixed.min_nodes = std::max(fixed.min_nodes, 2048);
            f.value = [model, logf, fixed](const Eigen::VectorXd& x) {
                const Theta t = model.validate(x);
                return std::exp(logf.value(x)) /
                       sqrt_det(spectral_metric_at(model, t, fixed));
            };
            return f;
        }
    }
    return constant_field(1.0);
}

} // namespace splab
