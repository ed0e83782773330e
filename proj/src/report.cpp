#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "splab/errors.hpp"
#include "splab/experiment.hpp"

namespace splab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// Write-temp-then-rename so a crash never leaves a half-written report.
void atomic_write(const fs::path& path, const std::string& payload) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string());
        out.write(payload.data(),
                  static_cast<std::streamsize>(payload.size()));
        if (!out) throw IoError("short write to " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
}

} // namespace

void emit_report(const ReportBundle& bundle, const std::string& out_dir,
                 const std::set<std::string>& formats) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir + ": " + ec.message());

    if (formats.count("csv")) {
        for (const JobResult& job : bundle.jobs)
            if (!job.csv.empty())
                atomic_write(fs::path(out_dir) / (job.name + ".csv"), job.csv);
    }
    if (formats.count("svg")) {
        for (const JobResult& job : bundle.jobs)
            if (!job.svg.empty())
                atomic_write(fs::path(out_dir) / (job.name + ".svg"), job.svg);
    }
    if (formats.count("json")) {
        json summary;
        summary["schema_version"] = 1;
        summary["config_hash"] = bundle.hash;
        summary["config"] = json::parse(bundle.canonical_config);
        summary["all_pass"] = bundle.all_pass();
        json jobs;
        for (const JobResult& job : bundle.jobs) {
            json jj = job.summary;
            jj["kind"] = job.kind;
            jj["pass"] = job.pass;
            jj["note"] = job.note;
            jobs[job.name] = jj;
        }
        summary["jobs"] = jobs;
        atomic_write(fs::path(out_dir) / "summary.json", summary.dump(2) + "\n");

        // Wall-clock metadata lives apart from the deterministic payload.
        const auto now = std::chrono::system_clock::now();
        const std::time_t tt = std::chrono::system_clock::to_time_t(now);
        char stamp[64];
        std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ",
                      std::gmtime(&tt));
        json meta;
        meta["written_at"] = stamp;
        meta["config_hash"] = bundle.hash;
        atomic_write(fs::path(out_dir) / "run_meta.json", meta.dump(2) + "\n");
    }
}

} // namespace splab
