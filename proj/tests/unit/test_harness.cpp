#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "splab/errors.hpp"
#include "splab/experiment.hpp"

using namespace splab;
namespace fs = std::filesystem;

namespace {

std::string minimal_config = R"({
  "seed": 7,
  "omega_nodes": 128,
  "jobs": [
    {"kind": "geometry-table", "name": "geo", "model": {"p": 1, "q": 0},
     "theta_points": [[0.5]]},
    {"kind": "dominance-experiment", "name": "dom", "model": {"p": 2, "q": 0},
     "theta0": [0.3, 0.2], "h": "one_plus_a2",
     "grid": {"lo": [-1.5, -0.8], "hi": [1.5, 0.8], "count": [7, 7],
              "clearance": 0.1},
     "n_grid": [64], "reps": 80}
  ]
})";

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in), {});
}

} // namespace

TEST_CASE("config round-trips losslessly through the canonical text") {
    ExperimentConfig a = parse_config(minimal_config);
    const std::string ca = canonical_config_text(a);
    ExperimentConfig b = parse_config(ca);
    CHECK(canonical_config_text(b) == ca);
    CHECK(config_hash(a) == config_hash(b));
}

TEST_CASE("absent keys mean defaults and do not change the hash") {
    ExperimentConfig a = parse_config(R"({
      "jobs": [{"kind": "geometry-table", "name": "g",
                "model": {"p": 1, "q": 0}, "theta_points": [[0.1]]}]})");
    ExperimentConfig b = parse_config(R"({
      "seed": 1, "omega_nodes": 512,
      "jobs": [{"kind": "geometry-table", "name": "g",
                "model": {"p": 1, "q": 0}, "theta_points": [[0.1]]}]})");
    CHECK(config_hash(a) == config_hash(b));
}

TEST_CASE("config validation names the offending key") {
    // empty n_grid
    try {
        parse_config(R"({"jobs": [{"kind": "dominance-experiment", "name": "d",
          "model": {"p": 2, "q": 0}, "theta0": [0.3, 0.2],
          "grid": {"lo": [-1, -0.8], "hi": [1, 0.8], "count": [5, 5]},
          "n_grid": []}]})");
        FAIL("expected ConfigInvalid");
    } catch (const ConfigInvalid& e) {
        CHECK(std::string(e.what()).find("n_grid") != std::string::npos);
    }
    // unknown key
    CHECK_THROWS_AS(parse_config(R"({"sneed": 1, "jobs": [
        {"kind": "geometry-table", "name": "g", "model": {"p": 1, "q": 0},
         "theta_points": [[0.1]]}]})"),
                    ConfigInvalid);
    // duplicate job names
    CHECK_THROWS_AS(parse_config(R"({"jobs": [
        {"kind": "geometry-table", "name": "g", "model": {"p": 1, "q": 0},
         "theta_points": [[0.1]]},
        {"kind": "geometry-table", "name": "g", "model": {"p": 1, "q": 0},
         "theta_points": [[0.2]]}]})"),
                    ConfigInvalid);
    // unknown h
    CHECK_THROWS_AS(named_h_field("not_a_field"), ConfigInvalid);
    // unknown kind
    CHECK_THROWS_AS(parse_config(R"({"jobs": [
        {"kind": "mystery", "name": "m", "model": {"p": 1, "q": 0}}]})"),
                    ConfigInvalid);
    // bad JSON
    CHECK_THROWS_AS(parse_config("{"), ConfigInvalid);
}

TEST_CASE("grid builder keeps clearance inside the AR(2) triangle") {
    SpectralModel ar2(2, 0);
    GridConfig g;
    g.lo = {-1.8, -0.95};
    g.hi = {1.8, 0.95};
    g.count = {13, 13};
    g.clearance = 0.1;
    const auto nodes = build_grid(ar2, g);
    CHECK(nodes.size() > 20);
    for (const auto& v : nodes) {
        CHECK(ar2.is_valid(v));
        for (int i = 0; i < 2; ++i) {
            Eigen::VectorXd p = v, m = v;
            p[i] += g.clearance;
            m[i] -= g.clearance;
            CHECK(ar2.is_valid(p));
            CHECK(ar2.is_valid(m));
        }
    }
}

TEST_CASE("named prior factors have consistent gradients") {
    for (const char* name : {"one", "arcsine", "one_plus_a2"}) {
        ScalarField f = named_h_field(name);
        Eigen::VectorXd x(2);
        x << 0.3, 0.2;
        const Eigen::VectorXd g = f.grad(x);
        for (int i = 0; i < 2; ++i) {
            Eigen::VectorXd p = x, m = x;
            p[i] += 1e-6;
            m[i] -= 1e-6;
            const double fd = (f.value(p) - f.value(m)) / 2e-6;
            CHECK(g[i] == doctest::Approx(fd).epsilon(1e-6));
        }
    }
}

TEST_CASE("experiment runs produce byte-identical reports") {
    ExperimentConfig cfg = parse_config(minimal_config);
    cfg.threads = 2;
    const ReportBundle b1 = run_experiment(cfg);
    cfg.threads = 1;
    const ReportBundle b2 = run_experiment(cfg);
    REQUIRE(b1.jobs.size() == b2.jobs.size());
    for (size_t i = 0; i < b1.jobs.size(); ++i) {
        CHECK(b1.jobs[i].csv == b2.jobs[i].csv);
        CHECK(b1.jobs[i].summary.dump() == b2.jobs[i].summary.dump());
    }
    CHECK(b1.hash == b2.hash);

    const fs::path dir1 = fs::temp_directory_path() / "splab_rep1";
    const fs::path dir2 = fs::temp_directory_path() / "splab_rep2";
    fs::remove_all(dir1);
    fs::remove_all(dir2);
    emit_report(b1, dir1.string(), {"csv", "json", "svg"});
    emit_report(b2, dir2.string(), {"csv", "json", "svg"});
    for (const char* f : {"geo.csv", "dom.csv", "summary.json"})
        CHECK(slurp(dir1 / f) == slurp(dir2 / f));
}

TEST_CASE("dominance CSV follows the documented schema") {
    ExperimentConfig cfg = parse_config(minimal_config);
    cfg.threads = 2;
    const ReportBundle bundle = run_experiment(cfg);
    const JobResult* dom = nullptr;
    for (const auto& j : bundle.jobs)
        if (j.name == "dom") dom = &j;
    REQUIRE(dom != nullptr);
    CHECK(dom->csv.rfind("config_hash,n,reps,risk_jeffreys,risk_h,diff,"
                         "diff_se,n2_diff,asymptote,floored_count,seed\n",
                         0) == 0);
    // every row carries the config hash and the cell seed
    std::istringstream rows(dom->csv);
    std::string line;
    std::getline(rows, line);
    while (std::getline(rows, line)) {
        CHECK(line.rfind(bundle.hash + ",", 0) == 0);
        CHECK(line.find_last_of(',') != std::string::npos);
    }
    // the SVG is a self-contained document with per-prior series and the
    // asymptote overlay
    CHECK(dom->svg.find("<svg") != std::string::npos);
    CHECK(dom->svg.find("Jeffreys") != std::string::npos);
    CHECK(dom->svg.find("one_plus_a2") != std::string::npos);
    CHECK(dom->svg.find("asymptote") != std::string::npos);
    // summary carries the superharmonic verdict
    CHECK(dom->summary["superharmonic"]["pass"].get<bool>());
}

TEST_CASE("a failed verdict is visible through all_pass") {
    // An impossible superharmonic tolerance makes the check job fail
    // deterministically; the CLI maps this to exit code 2.
    ExperimentConfig cfg = parse_config(R"({
      "tol_super": -1.0,
      "jobs": [
        {"kind": "superharmonic-check", "name": "impossible",
         "model": {"p": 2, "q": 0}, "h": "one_plus_a2",
         "grid": {"lo": [-1.5, -0.8], "hi": [1.5, 0.8], "count": [5, 5],
                  "clearance": 0.1}}
      ]})");
    cfg.threads = 2;
    const ReportBundle bundle = run_experiment(cfg);
    CHECK_FALSE(bundle.all_pass());
    CHECK_FALSE(bundle.jobs[0].pass);
}

TEST_CASE("named factors guard their coordinate requirements") {
    ScalarField f = named_h_field("one_plus_a2");
    CHECK_THROWS_AS(f.value(Eigen::VectorXd::Constant(1, 0.5)),
                    DimensionMismatch);
    ScalarField a = named_h_field("arcsine");
    CHECK_THROWS_AS(a.value(Eigen::VectorXd::Constant(1, 1.5)), Error);
}
