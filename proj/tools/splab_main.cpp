// Command line driver: runs experiment configs and writes report bundles.
//
// Exit codes: 0 success, 1 operational error (bad config, IO, computation),
// 2 when any scientific verdict in the report fails.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"

#include "splab/errors.hpp"
#include "splab/experiment.hpp"

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw splab::IoError("cannot read config file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"spectral-prior laboratory experiment driver"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::string formats_csv = "csv,json,svg";
    int jobs = -1;
    long long seed_override = -1;

    CLI::App* run = app.add_subcommand("run", "run an experiment config");
    run->add_option("config", config_path, "path to the JSON config")
        ->required();
    run->add_option("--jobs", jobs, "worker thread count (0 = hardware)");
    run->add_option("--out", out_dir, "output directory (overrides config)");
    run->add_option("--formats", formats_csv,
                    "comma separated subset of csv,json,svg");
    run->add_option("--seed", seed_override, "master seed (overrides config)");

    CLI11_PARSE(app, argc, argv);

    try {
        splab::ExperimentConfig cfg =
            splab::parse_config(read_file(config_path));
        if (seed_override >= 0)
            cfg.seed = static_cast<uint64_t>(seed_override);
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (jobs >= 0) {
            cfg.threads = jobs;
        } else if (const char* env = std::getenv("SPLAB_JOBS")) {
            cfg.threads = std::atoi(env);
        }

        std::set<std::string> formats;
        std::stringstream fs(formats_csv);
        std::string tok;
        while (std::getline(fs, tok, ',')) {
            if (tok.empty()) continue;
            if (tok != "csv" && tok != "json" && tok != "svg")
                throw splab::ConfigInvalid("unknown format: " + tok);
            formats.insert(tok);
        }

        const splab::ReportBundle bundle = splab::run_experiment(cfg);
        splab::emit_report(bundle, cfg.out_dir, formats);

        for (const splab::JobResult& job : bundle.jobs)
            std::cout << (job.pass ? "[pass] " : "[FAIL] ") << job.name << " ("
                      << job.kind << "): " << job.note << "\n";
        std::cout << "config hash " << bundle.hash << ", reports in "
                  << cfg.out_dir << "\n";
        return bundle.all_pass() ? 0 : 2;
    } catch (const splab::ConfigInvalid& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
