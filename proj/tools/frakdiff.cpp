// Command-line front end: one subcommand per experiment kind.
#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "frakdiff/harness/harness.hpp"

#ifndef FRAKDIFF_VERSION
#define FRAKDIFF_VERSION "unknown"
#endif

namespace {

unsigned default_threads() {
    if (const char* env = std::getenv("FRAKDIFF_THREADS")) {
        try {
            const long v = std::stol(env);
            if (v >= 1) return static_cast<unsigned>(v);
        } catch (...) {
        }
        std::cerr << "warning: ignoring invalid FRAKDIFF_THREADS='" << env << "'\n";
    }
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    namespace h = frakdiff::harness;
    CLI::App app{"Fractional diffusion simulation and verification harness"};
    app.set_version_flag("--version", std::string(FRAKDIFF_VERSION));
    app.require_subcommand(1);

    h::Invocation inv;
    inv.version = FRAKDIFF_VERSION;
    inv.threads = default_threads();
    std::string out_dir;
    std::uint64_t seed = 0;

    for (const auto& [kind, name] : h::kind_names()) {
        auto* sub = app.add_subcommand(name, "Run a " + name + " experiment");
        sub->add_option("-c,--config", inv.config_path, "JSON experiment config")->required()->check(CLI::ExistingFile);
        sub->add_option("-o,--out", out_dir, "Output directory (overrides output.dir)");
        sub->add_option("--seed", seed, "RNG seed (overrides the config)");
        sub->add_option("--threads", inv.threads, "Worker threads (default: FRAKDIFF_THREADS or 1)")
            ->check(CLI::PositiveNumber);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : h::kInvalidInput;
    }

    for (auto* sub : app.get_subcommands()) {
        inv.expected_kind = sub->get_name();
        if (sub->count("--out")) inv.out_dir = out_dir;
        if (sub->count("--seed")) inv.seed = seed;
    }
    const auto outcome = h::run_and_write(inv, std::cerr);
    for (const auto& f : outcome.files) std::cout << f << "\n";
    return outcome.code;
}
