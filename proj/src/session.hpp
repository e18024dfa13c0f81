#pragma once

#include <filesystem>
#include <functional>

#include "artifacts.hpp"
#include "data.hpp"
#include "runcfg.hpp"

namespace khop {

// Graph, vocabulary and tokenized splits derived from one RunConfig.
struct World {
    EntityGraph graph;
    Vocab vocab;
    DatasetSplit split;
    TokenizedData train;
    TokenizedData test;
    int context_length = 0;

    ModelConfig model_config(const RunConfig& cfg) const;
};

World build_world(const RunConfig& cfg);

// One experiment run: owns the config, resolves the run directory from the
// config content hash, and executes subcommands. Re-running a subcommand with
// an identical config reproduces identical artifacts.
class Session {
public:
    explicit Session(RunConfig cfg);

    using Logger = std::function<void(const std::string&)>;
    void set_logger(Logger logger) { log_ = std::move(logger); }

    const RunConfig& config() const { return cfg_; }
    RunConfig& config() { return cfg_; }

    // gen | train | eval | sweep | probe | patch | oracle.
    std::filesystem::path run(const std::string& subcommand);

    std::filesystem::path run_dir(const std::string& subcommand) const;

private:
    void log(const std::string& line) const {
        if (log_) {
            log_(line);
        }
    }

    std::filesystem::path run_gen();
    std::filesystem::path run_train();
    std::filesystem::path run_eval();
    std::filesystem::path run_sweep();
    std::filesystem::path run_probe();
    std::filesystem::path run_patch();
    std::filesystem::path run_oracle();

    RunConfig cfg_;
    Logger log_;
};

// Single sweep cell: dataset + model + training at one grid point. Exposed
// for the sweep engine and the acceptance suite.
struct SweepCellSpec {
    std::string tag;
    int hops = 2;
    int ratio = 1;
    int depth = 0;      // 0 = config model depth
    int constraint = 0; // 0 = unconstrained; else hops 1-2 restricted to this
    TrainMode mode = TrainMode::baseline;
};

struct SweepCellResult {
    std::string tag;
    std::string status; // ok | infeasible
    double final_accuracy = -1.0;
    double best_accuracy = -1.0;
    bool learned = false;
    int steps_run = 0;
    int first_step_at_threshold = -1;
    std::uint64_t train_count = 0;
    std::uint64_t test_count = 0;
};

SweepCellResult run_sweep_cell(const RunConfig& base, const SweepCellSpec& spec,
                               const std::filesystem::path& cell_dir,
                               const Session::Logger& log = {});

} // namespace khop
