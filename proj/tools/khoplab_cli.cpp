// Command-line front end; everything goes through the khoplab C API.

#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "khoplab.h"

namespace {

void print_line(const char* line, void*) {
    std::fprintf(stderr, "%s\n", line);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"khoplab — multi-hop reasoning laboratory"};
    app.set_version_flag("--version", std::string(khop_version()));

    std::string config_path;
    std::string out_dir;
    std::string seed;
    int workers = 0;
    bool resume = false;
    bool quiet = false;

    app.add_option("--config", config_path, "JSON run configuration")->required();
    app.add_option("--out", out_dir, "output root directory (overrides config)");
    app.add_option("--seed", seed, "top-level seed (overrides config)");
    app.add_option("--workers", workers, "sweep worker count (overrides config)");
    app.add_flag("--resume", resume, "resume training from the last checkpoint");
    app.add_flag("--quiet", quiet, "suppress progress output");

    const char* subcommands[] = {"gen", "train", "eval", "sweep", "probe", "patch", "oracle"};
    std::string chosen;
    for (const char* name : subcommands) {
        CLI::App* sub = app.add_subcommand(name);
        sub->callback([&chosen, name]() { chosen = name; });
    }
    app.require_subcommand(1);

    CLI11_PARSE(app, argc, argv);

    khop_session* session = nullptr;
    khop_status status = khop_session_open(config_path.c_str(), &session);
    if (status != KHOP_OK) {
        std::fprintf(stderr, "error (%s): %s\n", khop_status_name(status), khop_last_error());
        return 1;
    }

    if (!out_dir.empty()) {
        khop_session_set(session, "out", out_dir.c_str());
    }
    if (!seed.empty()) {
        khop_session_set(session, "seed", seed.c_str());
    }
    if (workers > 0) {
        khop_session_set(session, "workers", std::to_string(workers).c_str());
    }
    if (resume) {
        khop_session_set(session, "resume", "1");
    }
    if (!quiet) {
        khop_session_set_logger(session, print_line, nullptr);
    }

    status = khop_session_run(session, chosen.c_str());
    if (status != KHOP_OK) {
        std::fprintf(stderr, "error (%s): %s\n", khop_status_name(status),
                     khop_session_error(session));
        khop_session_close(session);
        return 1;
    }
    std::printf("%s\n", khop_session_run_dir(session, chosen.c_str()));
    khop_session_close(session);
    return 0;
}
