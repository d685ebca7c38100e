#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "frakdiff/harness/config.hpp"
#include "frakdiff/harness/experiments.hpp"
#include "frakdiff/harness/report.hpp"

namespace frakdiff::harness {

enum ExitCode : int { kOk = 0, kBoundViolation = 1, kInvalidInput = 2, kRuntimeFailure = 3 };

struct Invocation {
    std::string config_path;
    std::optional<std::string> expected_kind;  ///< subcommand; must agree with the config
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
    unsigned threads = 1;
    std::string version = "unknown";
};

struct Outcome {
    int code = kOk;
    std::vector<std::string> files;
};

inline json load_json_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigurationError("cannot open config file " + path);
    try {
        return json::parse(f);
    } catch (const json::parse_error& e) {
        throw SchemaError(path + ": " + e.what());
    }
}

/// Writes `<dir>/<stem>.csv`, one `<stem>_<suffix>.csv` per extra table and `<stem>.json`.
inline std::vector<std::string> write_report(const ExperimentConfig& cfg, const Report& rep, const std::string& dir,
                                             const std::string& version, unsigned threads, double seconds) {
    std::filesystem::create_directories(dir);
    const auto base = (std::filesystem::path(dir) / cfg.output.stem).string();
    std::vector<std::string> files{base + ".csv"};
    write_file(files[0], rep.table.to_csv());
    for (const auto& [suffix, t] : rep.extra_tables) {
        files.push_back(base + "_" + suffix + ".csv");
        write_file(files.back(), t.to_csv());
    }
    json summary = {{"kind", to_string(cfg.kind)},
                    {"version", version},
                    {"seed", cfg.seed},
                    {"threads", threads},
                    {"config", cfg.source},
                    {"rows", rep.table.rows().size()},
                    {"results", rep.results},
                    {"warnings", rep.warnings},
                    {"violations", rep.violations},
                    {"status", rep.violations.empty() ? "ok" : "bound-violation"},
                    {"wall_time_seconds", seconds},
                    {"row_wall_time_seconds", rep.row_seconds}};
    json written = json::array();
    for (const auto& f : files) written.push_back(std::filesystem::path(f).filename().string());
    summary["csv_files"] = written;
    files.push_back(base + ".json");
    write_file(files.back(), summary.dump(2) + "\n");
    return files;
}

/// Full CLI pipeline with error reporting on `err`; never throws.
inline Outcome run_and_write(const Invocation& inv, std::ostream& err = std::cerr) {
    Outcome out;
    try {
        json j = load_json_file(inv.config_path);
        if (inv.expected_kind && j.is_object()) {
            if (!j.contains("kind")) j["kind"] = *inv.expected_kind;
            else if (j["kind"] != *inv.expected_kind)
                throw SchemaError("/kind: config is '" + j["kind"].dump() + "' but the subcommand is '" +
                                  *inv.expected_kind + "'");
        }
        ExperimentConfig cfg = parse_config(j);
        if (inv.seed) cfg.seed = *inv.seed;
        const std::string dir = inv.out_dir ? *inv.out_dir : cfg.output.dir;
        const auto t0 = std::chrono::steady_clock::now();
        Report rep = run_experiment(cfg, RunOptions{std::max(1u, inv.threads)});
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        out.files = write_report(cfg, rep, dir, inv.version, inv.threads, secs);
        for (const auto& w : rep.warnings) err << "warning: " << w << "\n";
        if (!rep.violations.empty()) {
            for (const auto& v : rep.violations) err << "bound violated: " << v << "\n";
            out.code = kBoundViolation;
        }
    } catch (const SchemaError& e) {
        err << "config error: " << e.what() << "\n";
        out.code = kInvalidInput;
    } catch (const ConfigurationError& e) {
        err << "config error: " << e.what() << "\n";
        out.code = kInvalidInput;
    } catch (const InputError& e) {
        err << "invalid input: " << e.what() << "\n";
        out.code = kInvalidInput;
    } catch (const PreconditionError& e) {
        err << "precondition failed: " << e.what() << "\n";
        out.code = kInvalidInput;
    } catch (const SizeGuardError& e) {
        err << "size guard: " << e.what() << "\n";
        out.code = kInvalidInput;
    } catch (const UnsupportedError& e) {
        err << "unsupported: " << e.what() << "\n";
        out.code = kInvalidInput;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        out.code = kRuntimeFailure;
    }
    return out;
}

}  // namespace frakdiff::harness
