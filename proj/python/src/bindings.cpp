// Python bindings for the main library operations.

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "splab/errors.hpp"
#include "splab/experiment.hpp"
#include "splab/likelihood.hpp"
#include "splab/posterior.hpp"
#include "splab/risk.hpp"

namespace py = pybind11;
using namespace splab;

namespace {

py::array_t<double> tensor3_array(const Tensor3& t) {
    const int k = t.dim();
    py::array_t<double> a({k, k, k});
    auto r = a.mutable_unchecked<3>();
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j)
            for (int l = 0; l < k; ++l) r(i, j, l) = t(i, j, l);
    return a;
}

py::array_t<double> tensor4_array(const Tensor4& t) {
    const int k = t.dim();
    py::array_t<double> a({k, k, k, k});
    auto r = a.mutable_unchecked<4>();
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j)
            for (int l = 0; l < k; ++l)
                for (int m = 0; m < k; ++m) r(i, j, l, m) = t(i, j, l, m);
    return a;
}

SigmaPolicy policy_from(const std::string& s) {
    if (s == "fixed") return SigmaPolicy::fixed;
    if (s == "log_variance") return SigmaPolicy::log_variance;
    if (s == "spectrum_level") return SigmaPolicy::spectrum_level;
    throw ConfigInvalid("unknown sigma policy: " + s);
}

Prior prior_from(const std::optional<std::string>& h) {
    if (!h) return Prior::jeffreys();
    if (*h == "jeffreys") return Prior::jeffreys();
    return Prior::jeffreys_times(named_h_field(*h), *h);
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "ARMA spectral-density lab: exact Gaussian likelihoods, "
              "information geometry, Bayes spectral estimates and KL risk";

    py::register_exception<Error>(m, "SplabError");

    py::class_<Theta>(m, "Theta")
        .def_property_readonly("coords",
                               [](const Theta& t) { return t.coords; })
        .def_property_readonly("validated",
                               [](const Theta& t) { return t.validated; });

    py::class_<SpectralModel>(m, "SpectralModel")
        .def(py::init([](int p, int q, const std::string& sigma, double sigma2,
                         double root_margin) {
                 return SpectralModel(p, q, policy_from(sigma), sigma2,
                                      root_margin);
             }),
             py::arg("p"), py::arg("q"), py::arg("sigma") = "fixed",
             py::arg("sigma2") = 1.0, py::arg("root_margin") = 1e-6)
        .def_static("constant_spectrum", &SpectralModel::constant_spectrum)
        .def_property_readonly("dim", &SpectralModel::dim)
        .def_property_readonly("p", &SpectralModel::ar_order)
        .def_property_readonly("q", &SpectralModel::ma_order)
        .def("validate", &SpectralModel::validate, py::arg("coords"))
        .def("is_valid", &SpectralModel::is_valid, py::arg("coords"))
        .def("spectral_density", &SpectralModel::spectral_density,
             py::arg("theta"), py::arg("omega"))
        .def(
            "spectral_partials",
            [](const SpectralModel& mdl, const Theta& t, double w, int order) {
                const SpectralEval ev = mdl.spectral_partials(t, w, order);
                py::dict d;
                d["value"] = ev.value;
                d["grad"] = ev.grad;
                if (order >= 2) d["hess"] = ev.hess;
                if (order >= 3) d["third"] = tensor3_array(ev.third);
                return d;
            },
            py::arg("theta"), py::arg("omega"), py::arg("max_order") = 2)
        .def(
            "autocovariances",
            [](const SpectralModel& mdl, const Theta& t, int max_lag,
               const std::string& method) {
                if (method == "recursion") return mdl.autocovariances(t, max_lag);
                if (method == "quadrature")
                    return mdl.autocovariances_quadrature(t, max_lag);
                throw ConfigInvalid("method must be recursion or quadrature");
            },
            py::arg("theta"), py::arg("max_lag"),
            py::arg("method") = "recursion")
        .def("__repr__", &SpectralModel::describe);

    m.def("sample_path",
          py::overload_cast<const SpectralModel&, const Theta&, int, uint64_t,
                            uint64_t>(&sample_path),
          py::arg("model"), py::arg("theta"), py::arg("n"), py::arg("seed"),
          py::arg("stream") = 0);

    m.def("log_likelihood", &log_likelihood, py::arg("model"), py::arg("theta"),
          py::arg("x"), py::arg("full_constant") = false);

    m.def(
        "fit_mle",
        [](const SpectralModel& mdl, const Eigen::VectorXd& x, const Theta& init) {
            const FitResult fit = fit_mle(mdl, x, init);
            py::dict d;
            d["theta_hat"] = fit.theta_hat.coords;
            d["J_n"] = fit.J_n;
            d["loglik"] = fit.loglik;
            d["iterations"] = fit.iterations;
            d["grad_norm"] = fit.grad_norm;
            return d;
        },
        py::arg("model"), py::arg("x"), py::arg("init"));

    m.def(
        "geometry",
        [](const SpectralModel& mdl, const Theta& t) {
            const GeometryTensors gt = geometry_at(mdl, t);
            py::dict d;
            d["g"] = gt.g;
            d["g_inv"] = gt.g_inv;
            d["T1"] = gt.T1;
            d["Gm"] = tensor3_array(gt.Gm);
            d["eG"] = tensor3_array(gt.eG);
            d["T"] = tensor3_array(gt.T);
            d["M"] = tensor4_array(gt.M);
            d["N"] = tensor4_array(gt.N);
            d["L"] = tensor4_array(gt.L);
            return d;
        },
        py::arg("model"), py::arg("theta"));

    m.def(
        "jeffreys_log_gradient",
        [](const SpectralModel& mdl, const Theta& t) {
            return jeffreys_log_gradient(mdl, t);
        },
        py::arg("model"), py::arg("theta"));

    m.def(
        "kl_divergence",
        [](const Eigen::VectorXd& s0, const Eigen::VectorXd& shat) {
            return kl_divergence(s0, shat);
        },
        py::arg("s0"), py::arg("shat"),
        "KL spectral divergence on a shared uniform grid over [-pi, pi)");

    m.def(
        "bayes_spectral",
        [](const SpectralModel& mdl, const Eigen::VectorXd& x, const Theta& init,
           const Eigen::VectorXd& omega, const std::optional<std::string>& h,
           const std::string& method) {
            const FitResult fit = fit_mle(mdl, x, init);
            const Prior prior = prior_from(h);
            py::dict d;
            d["theta_hat"] = fit.theta_hat.coords;
            if (method == "oracle") {
                const OracleEstimate oe =
                    bayes_spectral_oracle(mdl, x, fit, prior, omega);
                d["values"] = oe.estimate.values;
                d["posterior_mean"] = oe.posterior_mean;
                d["truncated"] = oe.estimate.truncated;
            } else {
                const ExpansionForm form = method == "expansion-geometric"
                                               ? ExpansionForm::geometric
                                               : ExpansionForm::moment;
                const BayesSpectralEstimate est =
                    bayes_spectral_expansion(mdl, x, fit, prior, omega, form);
                d["values"] = est.values;
                d["floored"] = est.floored;
            }
            return d;
        },
        py::arg("model"), py::arg("x"), py::arg("init"), py::arg("omega"),
        py::arg("h") = py::none(), py::arg("method") = "expansion-moment");

    m.def(
        "mle_bias",
        [](const SpectralModel& mdl, const Theta& t0, int n) {
            const BiasResult b = mle_bias(mdl, t0, n);
            py::dict d;
            d["finite_n"] = b.finite_n;
            d["geometric"] = b.geometric;
            return d;
        },
        py::arg("model"), py::arg("theta0"), py::arg("n"));

    m.def(
        "asymptotic_risk",
        [](const SpectralModel& mdl, const Theta& t0,
           const std::optional<std::string>& h) {
            const AsymptoticRisk r = asymptotic_risk(mdl, t0, prior_from(h));
            py::dict d;
            d["f_part"] = r.f_part;
            d["diff_vs_jeffreys"] = r.diff_vs_jeffreys;
            d["grad_term"] = r.grad_term;
            d["laplace_term"] = r.laplace_term;
            return d;
        },
        py::arg("model"), py::arg("theta0"), py::arg("h") = py::none());

    m.def(
        "mc_risk",
        [](const SpectralModel& mdl, const Theta& t0,
           const std::optional<std::string>& h, int n, int reps, uint64_t seed,
           const std::string& estimator, int threads) {
            RiskOptions opt;
            opt.threads = threads;
            const RiskReport r = mc_risk(
                mdl, t0, prior_from(h), n, reps, seed,
                estimator == "oracle" ? Estimator::oracle : Estimator::expansion,
                opt);
            py::dict d;
            d["mean"] = r.mean;
            d["se"] = r.se;
            d["reps"] = r.reps;
            d["completed"] = r.completed;
            d["floored"] = r.floored;
            d["fit_failures"] = r.fit_failures;
            return d;
        },
        py::arg("model"), py::arg("theta0"), py::arg("h"), py::arg("n"),
        py::arg("reps"), py::arg("seed"), py::arg("estimator") = "expansion",
        py::arg("threads") = 0);

    m.def(
        "check_superharmonic",
        [](const SpectralModel& mdl, const std::string& h,
           const std::vector<double>& lo, const std::vector<double>& hi,
           const std::vector<int>& count, double clearance, double tol) {
            GridConfig g;
            g.lo = lo;
            g.hi = hi;
            g.count = count;
            g.clearance = clearance;
            const SuperharmonicReport rep =
                check_superharmonic(named_h_field(h), build_grid(mdl, g),
                                    spectral_metric_field(mdl), tol);
            py::dict d;
            d["pass"] = rep.pass;
            d["positive"] = rep.positive;
            d["min_h"] = rep.min_h;
            d["max_laplacian"] = rep.max_laplacian;
            d["nodes"] = rep.nodes_checked;
            if (rep.worst_node.size() > 0) d["worst_node"] = rep.worst_node;
            return d;
        },
        py::arg("model"), py::arg("h"), py::arg("lo"), py::arg("hi"),
        py::arg("count"), py::arg("clearance") = 0.05, py::arg("tol") = 1e-8);

    m.def(
        "dominance_experiment",
        [](const SpectralModel& mdl, const Theta& t0, const std::string& h,
           const std::vector<double>& lo, const std::vector<double>& hi,
           const std::vector<int>& count, const std::vector<int>& n_grid,
           uint64_t seed, int reps, int threads) {
            GridConfig g;
            g.lo = lo;
            g.hi = hi;
            g.count = count;
            g.clearance = 0.1;
            DominanceOptions opt;
            opt.reps = reps;
            opt.risk.threads = threads;
            const DominanceResult res = dominance_experiment(
                mdl, t0, named_h_field(h), h, build_grid(mdl, g), n_grid, seed,
                opt);
            py::list cells;
            for (const DominanceCell& c : res.cells) {
                py::dict d;
                d["n"] = c.n;
                d["reps"] = c.reps;
                d["risk_jeffreys"] = c.risk_jeffreys;
                d["risk_h"] = c.risk_h;
                d["diff"] = c.diff;
                d["diff_se"] = c.diff_se;
                d["t"] = c.t_stat;
                d["n2_diff"] = c.n2_diff;
                d["asymptote"] = c.asymptote;
                cells.append(d);
            }
            py::dict out;
            out["h_pass"] = res.check.pass;
            out["cells"] = cells;
            return out;
        },
        py::arg("model"), py::arg("theta0"), py::arg("h"), py::arg("lo"),
        py::arg("hi"), py::arg("count"), py::arg("n_grid"), py::arg("seed"),
        py::arg("reps"), py::arg("threads") = 0);

    m.def(
        "run_experiment_json",
        [](const std::string& config_text, const std::string& out_dir) {
            ExperimentConfig cfg = parse_config(config_text);
            if (!out_dir.empty()) cfg.out_dir = out_dir;
            const ReportBundle bundle = run_experiment(cfg);
            emit_report(bundle, cfg.out_dir, {"csv", "json", "svg"});
            return py::make_tuple(bundle.hash, bundle.all_pass());
        },
        py::arg("config_text"), py::arg("out_dir") = "",
        "Run a full experiment config and write the report bundle; returns "
        "(config_hash, all_pass)");
}
