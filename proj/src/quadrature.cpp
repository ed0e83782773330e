#include "splab/quadrature.hpp"

#include <cmath>

#include "splab/errors.hpp"

namespace splab {

QuadratureGrid periodic_grid(int n) {
    QuadratureGrid g;
    g.nodes.resize(n);
    g.weights.resize(n);
    const double h = 2.0 * M_PI / n;
    for (int j = 0; j < n; ++j) {
        g.nodes[j] = -M_PI + j * h;
        g.weights[j] = h;
    }
    return g;
}

QuadratureGrid gauss_legendre_grid(int n) {
    // Nodes/weights on [-1,1] by Newton iteration on the Legendre recurrence,
    // then affine map to [-pi, pi].
    QuadratureGrid g;
    g.nodes.resize(n);
    g.weights.resize(n);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (x * p0 - p1) / (x * x - 1.0);
            const double dx = p0 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        const double w = 2.0 / ((1.0 - x * x) * pp * pp);
        g.nodes[i] = -M_PI * x;
        g.nodes[n - 1 - i] = M_PI * x;
        g.weights[i] = M_PI * w;
        g.weights[n - 1 - i] = M_PI * w;
    }
    return g;
}

namespace {

Eigen::VectorXd eval_on_grid(
    const std::function<void(double, Eigen::Ref<Eigen::VectorXd>)>& f, int dim,
    const QuadratureGrid& grid) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(dim);
    Eigen::VectorXd buf(dim);
    for (int j = 0; j < grid.nodes.size(); ++j) {
        buf.setZero();
        f(grid.nodes[j], buf);
        acc += grid.weights[j] * buf;
    }
    return acc;
}

bool close_enough(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double tol) {
    for (int i = 0; i < a.size(); ++i) {
        if (std::abs(a[i] - b[i]) > tol * (1.0 + std::abs(b[i]))) return false;
    }
    return true;
}

} // namespace

Eigen::VectorXd integrate_on_circle(
    const std::function<void(double, Eigen::Ref<Eigen::VectorXd>)>& integrand,
    int dim, const QuadratureConfig& cfg) {
    const bool trap = cfg.rule == QuadratureConfig::Rule::trapezoid;
    int n = cfg.min_nodes;
    Eigen::VectorXd prev =
        eval_on_grid(integrand, dim, trap ? periodic_grid(n) : gauss_legendre_grid(n));
    if (!cfg.adaptive) return prev;
    while (n < cfg.max_nodes) {
        Eigen::VectorXd cur;
        if (trap) {
            // The doubled grid is the old grid plus its midpoints.
            const double h = 2.0 * M_PI / n;
            Eigen::VectorXd mid_acc = Eigen::VectorXd::Zero(dim);
            Eigen::VectorXd buf(dim);
            for (int j = 0; j < n; ++j) {
                buf.setZero();
                integrand(-M_PI + (j + 0.5) * h, buf);
                mid_acc += h * buf;
            }
            cur = 0.5 * (prev + mid_acc);
        } else {
            cur = eval_on_grid(integrand, dim, gauss_legendre_grid(2 * n));
        }
        n *= 2;
        if (close_enough(prev, cur, cfg.tol)) return cur;
        prev = std::move(cur);
    }
    throw QuadratureNotConverged("quadrature did not converge within " +
                                 std::to_string(cfg.max_nodes) + " nodes");
}

double integrate_on_circle(const std::function<double(double)>& integrand,
                           const QuadratureConfig& cfg) {
    auto wrap = [&](double w, Eigen::Ref<Eigen::VectorXd> out) { out[0] = integrand(w); };
    return integrate_on_circle(wrap, 1, cfg)[0];
}

} // namespace splab
