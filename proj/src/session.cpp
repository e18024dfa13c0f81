#include "session.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "eval.hpp"
#include "patch.hpp"
#include "probe.hpp"
#include "theory.hpp"

namespace khop {

using nlohmann::json;
namespace fs = std::filesystem;

ModelConfig World::model_config(const RunConfig& cfg) const {
    ModelConfig m = cfg.model;
    m.vocab_size = vocab.size();
    if (m.context_length <= 0) {
        m.context_length = context_length;
    }
    m.validate();
    return m;
}

World build_world(const RunConfig& cfg) {
    World w;
    w.graph = sample_entity_graph(cfg.graph.entities, cfg.graph.relations, cfg.graph.layers,
                                  cfg.seed);
    w.vocab = Vocab::build(w.graph);
    w.split = build_task_split(w.graph, cfg.task, cfg.seed);
    w.context_length =
        cfg.model.context_length > 0 ? cfg.model.context_length : corpus_context_length(w.graph);
    w.train = tokenize_train(w.vocab, w.graph, w.split, w.context_length);
    w.test = tokenize_queries(w.vocab, w.graph, w.split.test_set, w.context_length);
    return w;
}

Session::Session(RunConfig cfg) : cfg_(std::move(cfg)) {
    Eigen::setNbThreads(1); // deterministic numerics; parallelism is per cell
}

fs::path Session::run_dir(const std::string& subcommand) const {
    return fs::path(cfg_.out) / hex64(cfg_.checksum()) / subcommand;
}

fs::path Session::run(const std::string& subcommand) {
    if (subcommand == "gen") {
        return run_gen();
    }
    if (subcommand == "train") {
        return run_train();
    }
    if (subcommand == "eval") {
        return run_eval();
    }
    if (subcommand == "sweep") {
        return run_sweep();
    }
    if (subcommand == "probe") {
        return run_probe();
    }
    if (subcommand == "patch") {
        return run_patch();
    }
    if (subcommand == "oracle") {
        return run_oracle();
    }
    fail(ErrorCode::invalid_argument, "unknown subcommand '" + subcommand + "'");
}

namespace {

// Standing choices that the paper leaves open; recorded with every run.
void add_choice_notes(ManifestBuilder& m) {
    m.add_note("overlap_rule", "contiguous-subchain (start entity + next m relations)");
    m.add_note("tokenizer", "word-level, single-token entities, explicit answer-slot token");
    m.add_note("weight_tying", "input and output embeddings tied");
    m.add_note("dropout", "0");
    m.add_note("curriculum_optimizer", "moments carried across stages, scheduler restarts");
    m.add_note("word_order", "first letter applied first: w1..wk maps e to wk(...w1(e))");
    m.add_note("precision_bits_default", "32 (float32 engine)");
}

std::string question_record(const Vocab& vocab, const EntityGraph& g, const Query& q) {
    RenderedInstance r = render_question_instance(vocab, g, q);
    json rec;
    rec["kind"] = "question";
    rec["hops"] = q.hops();
    rec["source"] = q.source;
    rec["relations"] = q.relations;
    rec["bridges"] = q.bridges;
    rec["answer"] = q.answer;
    rec["text"] = r.text;
    rec["tokens"] = r.tokens;
    rec["answer_position"] = r.answer_position;
    rec["entity_position"] = r.entity_position;
    rec["hop_positions"] = r.hop_positions;
    return rec.dump();
}

std::string profile_record(const Vocab& vocab, const EntityGraph& g, EntityId e) {
    RenderedInstance r = render_profile_instance(vocab, g, e);
    json rec;
    rec["kind"] = "profile";
    rec["entity"] = e;
    rec["name"] = g.entity_names[e];
    rec["text"] = r.text;
    rec["tokens"] = r.tokens;
    return rec.dump();
}

void write_jsonl(const fs::path& path, const RunConfig& cfg, const World& w, bool train_file) {
    std::vector<std::string> lines;
    if (train_file) {
        for (EntityId e : w.split.profiles) {
            lines.push_back(profile_record(w.vocab, w.graph, e));
        }
        for (const auto& set : w.split.train_sets) {
            for (std::size_t i = 0; i < set.size(); ++i) {
                lines.push_back(question_record(w.vocab, w.graph, set.query(i)));
            }
        }
    } else {
        for (std::size_t i = 0; i < w.split.test_set.size(); ++i) {
            lines.push_back(question_record(w.vocab, w.graph, w.split.test_set.query(i)));
        }
    }
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& l : lines) {
        h = fnv1a64(l.data(), l.size(), h);
        h = fnv1a64("\n", 1, h);
    }
    json header;
    header["kind"] = "header";
    header["seed"] = cfg.seed;
    header["entities"] = w.graph.num_entities();
    header["relations"] = w.graph.num_relations();
    header["layers"] = w.graph.num_layers;
    header["hops"] = cfg.task.hops;
    header["mode"] = train_mode_name(cfg.task.mode);
    header["budget_ratio"] = w.split.budget_ratio;
    header["base_budget"] = w.split.base_budget;
    header["overlap_filtered"] = w.split.overlap_filtered;
    header["overlap_rule"] = "contiguous-subchain";
    header["records"] = lines.size();
    header["checksum"] = hex64(h);

    std::ofstream out(path, std::ios::binary);
    require(out.good(), ErrorCode::io, "cannot open " + path.string());
    out << header.dump() << "\n";
    for (const auto& l : lines) {
        out << l << "\n";
    }
    require(out.good(), ErrorCode::io, "write failed for " + path.string());
}

std::string fmt_step(std::uint64_t step) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%06llu", static_cast<unsigned long long>(step));
    return buf;
}

struct CsvWriter {
    std::ostringstream out;

    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i > 0) {
                out << ",";
            }
            out << cells[i];
        }
        out << "\n";
    }
};

std::string fmt_acc(double v) {
    if (v < 0) {
        return "";
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", 100.0 * v);
    return buf;
}

} // namespace

fs::path Session::run_gen() {
    World w = build_world(cfg_);
    ManifestBuilder m(run_dir("gen"), "gen", cfg_.canonical_json());
    add_choice_notes(m);

    save_graph(w.graph, m.dir() / "graph.txt");
    m.add_file(m.dir() / "graph.txt");

    json vocab_json = json::array();
    for (const auto& t : w.vocab.tokens()) {
        vocab_json.push_back(t);
    }
    write_text_file(m.dir() / "vocab.json",
                    json{{"checksum", hex64(w.vocab.checksum())}, {"tokens", vocab_json}}.dump(2) +
                        "\n");
    m.add_file(m.dir() / "vocab.json");

    write_jsonl(m.dir() / "train.jsonl", cfg_, w, true);
    m.add_file(m.dir() / "train.jsonl");
    write_jsonl(m.dir() / "test.jsonl", cfg_, w, false);
    m.add_file(m.dir() / "test.jsonl");

    m.write();
    log("gen: " + std::to_string(w.split.train_record_count()) + " train records, " +
        std::to_string(w.split.test_set.size()) + " test records");
    return m.dir();
}

fs::path Session::run_train() {
    World w = build_world(cfg_);
    const ModelConfig mc = w.model_config(cfg_);
    const fs::path dir = run_dir("train");
    fs::create_directories(dir);

    ModelState state;
    ModelParams adam_m;
    ModelParams adam_v;
    bool resumed = false;
    if (cfg_.resume) {
        // Continue from the newest checkpoint, if any.
        std::vector<fs::path> ckpts;
        if (fs::exists(dir)) {
            for (const auto& entry : fs::directory_iterator(dir)) {
                const std::string name = entry.path().filename().string();
                if (name.starts_with("ckpt-") && name.ends_with(".bin")) {
                    ckpts.push_back(entry.path());
                }
            }
        }
        if (!ckpts.empty()) {
            std::sort(ckpts.begin(), ckpts.end());
            LoadedCheckpoint ck = load_checkpoint(ckpts.back());
            require(ck.has_optimizer, ErrorCode::state,
                    "resume: checkpoint lacks optimizer state");
            state = std::move(ck.state);
            adam_m = std::move(ck.adam_m);
            adam_v = std::move(ck.adam_v);
            resumed = true;
            log("resuming from " + ckpts.back().filename().string());
        }
    }
    if (!resumed) {
        for (const auto& entry : fs::directory_iterator(dir)) {
            const std::string name = entry.path().filename().string();
            if ((name.starts_with("ckpt-") && name.ends_with(".bin")) || name == "metrics.jsonl") {
                fs::remove(entry.path());
            }
        }
        state = init_model(mc, cfg_.seed);
        adam_m = ModelParams::shaped(mc);
        adam_v = ModelParams::shaped(mc);
    }

    // Metrics are append-only; on resume, drop records past the checkpoint.
    const fs::path metrics_path = dir / "metrics.jsonl";
    if (resumed && fs::exists(metrics_path)) {
        std::istringstream in(read_text_file(metrics_path));
        std::ostringstream keep;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) {
                continue;
            }
            const auto rec = json::parse(line);
            if (rec.at("step").get<std::uint64_t>() <= state.step) {
                keep << line << "\n";
            }
        }
        write_text_file(metrics_path, keep.str());
    } else if (!resumed) {
        write_text_file(metrics_path, "");
    }
    std::ofstream metrics(metrics_path, std::ios::app | std::ios::binary);

    const StagePlan plan =
        StagePlan::make(cfg_.task.mode, cfg_.task.hops, cfg_.train.max_steps, cfg_.stage_steps);

    TrainHooks hooks;
    hooks.log = log_;
    hooks.metric = [&metrics](const std::string& rec) { metrics << rec << "\n"; };
    hooks.checkpoint = [&](const ModelState& s, const ModelParams& am, const ModelParams& av,
                           int stage) {
        json extra;
        extra["stage"] = stage;
        save_checkpoint(dir / ("ckpt-" + fmt_step(s.step) + ".bin"), s, &am, &av, extra.dump());
    };

    TrainResult result =
        train(state, adam_m, adam_v, plan, cfg_.train, w.train, &w.test, hooks);
    metrics.close();

    ManifestBuilder m(dir, "train", cfg_.canonical_json());
    add_choice_notes(m);
    json res;
    res["steps_run"] = result.steps_run;
    res["final_loss"] = result.final_loss;
    res["final_accuracy"] = result.final_accuracy;
    res["best_accuracy"] = result.best_accuracy;
    res["first_step_at_threshold"] = result.first_step_at_threshold;
    res["early_stopped"] = result.early_stopped;
    res["final_checkpoint"] = "ckpt-" + fmt_step(state.step) + ".bin";
    res["params"] = state.params.count();
    res["vocab_size"] = mc.vocab_size;
    res["train_records"] = w.split.train_record_count();
    res["stages"] = plan.stages.size();
    write_text_file(dir / "result.json", res.dump(2) + "\n");

    m.add_file(dir / "result.json");
    m.add_file(metrics_path);
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (name.starts_with("ckpt-") && name.ends_with(".bin")) {
            m.add_file(entry.path());
        }
    }
    m.write();
    return dir;
}

fs::path Session::run_eval() {
    require(!cfg_.eval_checkpoint.empty(), ErrorCode::config,
            "eval.checkpoint must point to a checkpoint file");
    LoadedCheckpoint ck = load_checkpoint(cfg_.eval_checkpoint);
    World w = build_world(cfg_);
    require(ck.state.config.vocab_size == w.vocab.size(), ErrorCode::config,
            "eval: checkpoint vocabulary does not match the configured dataset");

    const auto preds = predict_answers(ck.state.config, ck.state.params, w.test, {},
                                       cfg_.eval_batch);
    std::size_t hits = 0;
    CsvWriter csv;
    csv.row({"instance", "gold_token", "predicted_token", "correct"});
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const bool ok = preds[i] == w.test.instances[i].answer_token;
        hits += ok ? 1 : 0;
        csv.row({std::to_string(i), std::to_string(w.test.instances[i].answer_token),
                 std::to_string(preds[i]), ok ? "1" : "0"});
    }
    const double acc = static_cast<double>(hits) / static_cast<double>(preds.size());

    ManifestBuilder m(run_dir("eval"), "eval", cfg_.canonical_json());
    add_choice_notes(m);
    write_text_file(m.dir() / "predictions.csv", csv.out.str());
    m.add_file(m.dir() / "predictions.csv");
    json res;
    res["accuracy"] = acc;
    res["instances"] = preds.size();
    res["checkpoint"] = cfg_.eval_checkpoint;
    res["checkpoint_step"] = ck.state.step;
    write_text_file(m.dir() / "eval.json", res.dump(2) + "\n");
    m.add_file(m.dir() / "eval.json");
    m.write();
    log("eval: accuracy " + std::to_string(acc));
    return m.dir();
}

SweepCellResult run_sweep_cell(const RunConfig& base, const SweepCellSpec& spec,
                               const fs::path& cell_dir, const Session::Logger& log) {
    fs::create_directories(cell_dir);
    const fs::path result_path = cell_dir / "result.json";
    if (fs::exists(result_path)) {
        // Cells are pure functions of their spec; reuse the previous result.
        const json j = json::parse(read_text_file(result_path));
        SweepCellResult r;
        r.tag = spec.tag;
        r.status = j.at("status").get<std::string>();
        r.final_accuracy = j.at("final_accuracy").get<double>();
        r.best_accuracy = j.at("best_accuracy").get<double>();
        r.learned = j.at("learned").get<bool>();
        r.steps_run = j.at("steps_run").get<int>();
        r.first_step_at_threshold = j.at("first_step_at_threshold").get<int>();
        r.train_count = j.at("train_count").get<std::uint64_t>();
        r.test_count = j.at("test_count").get<std::uint64_t>();
        return r;
    }

    RunConfig cfg = base;
    cfg.task.hops = spec.hops;
    cfg.task.budget_ratio = spec.ratio;
    cfg.task.mode = spec.mode;
    if (spec.constraint > 0) {
        std::vector<int> counts(spec.hops, cfg.graph.relations);
        counts[0] = spec.constraint;
        if (spec.hops >= 2) {
            counts[1] = spec.constraint;
        }
        cfg.task.constraint = RelationConstraint{counts};
    }
    if (spec.depth > 0) {
        cfg.model.n_layers = spec.depth;
    }
    if (base.sweep.max_steps > 0) {
        cfg.train.max_steps = base.sweep.max_steps;
    }
    cfg.train.early_stop_accuracy = base.sweep.early_stop_accuracy;

    SweepCellResult result;
    result.tag = spec.tag;

    // Clamp the test size to the held-out remainder, mirroring the paper's
    // smaller 2-hop test set; too small a remainder makes the cell
    // infeasible, like the empty cells of the budget table.
    EntityGraph graph = sample_entity_graph(cfg.graph.entities, cfg.graph.relations,
                                            cfg.graph.layers, cfg.seed);
    QuerySpace space(graph, spec.hops,
                     cfg.task.constraint ? &*cfg.task.constraint : nullptr);
    const std::uint64_t bg = default_base_budget(graph, cfg.task.base_budget_fraction);
    const std::uint64_t want_train = bg * static_cast<std::uint64_t>(spec.ratio);
    const std::uint64_t min_test = std::min<std::uint64_t>(cfg.task.test_size, 50);
    if (want_train + min_test > space.size()) {
        result.status = "infeasible";
        result.train_count = want_train;
        json j;
        j["status"] = result.status;
        j["final_accuracy"] = result.final_accuracy;
        j["best_accuracy"] = result.best_accuracy;
        j["learned"] = false;
        j["steps_run"] = 0;
        j["first_step_at_threshold"] = -1;
        j["train_count"] = result.train_count;
        j["test_count"] = 0;
        j["tag"] = spec.tag;
        write_text_file(result_path, j.dump(2) + "\n");
        return result;
    }
    cfg.task.test_size = std::min<std::uint64_t>(cfg.task.test_size, space.size() - want_train);

    World w = build_world(cfg);
    const ModelConfig mc = w.model_config(cfg);

    // Per-cell seed stream so cells are independent of enumeration order.
    TrainConfig tc = cfg.train;
    tc.seed = fnv1a64(spec.tag) ^ cfg.seed;
    ModelState state = init_model(mc, tc.seed);
    ModelParams adam_m = ModelParams::shaped(mc);
    ModelParams adam_v = ModelParams::shaped(mc);

    std::ofstream metrics(cell_dir / "metrics.jsonl", std::ios::binary);
    TrainHooks hooks;
    hooks.metric = [&metrics](const std::string& rec) { metrics << rec << "\n"; };
    if (log) {
        hooks.log = [&](const std::string& line) { log("[" + spec.tag + "] " + line); };
    }
    hooks.checkpoint = [&](const ModelState& s, const ModelParams& am, const ModelParams& av,
                           int stage) {
        json extra;
        extra["stage"] = stage;
        extra["tag"] = spec.tag;
        save_checkpoint(cell_dir / ("ckpt-" + fmt_step(s.step) + ".bin"), s, &am, &av,
                        extra.dump());
    };

    const StagePlan plan = StagePlan::make(spec.mode, spec.hops, tc.max_steps, base.stage_steps);
    TrainResult tr = train(state, adam_m, adam_v, plan, tc, w.train, &w.test, hooks);
    metrics.close();

    result.status = "ok";
    result.final_accuracy = tr.final_accuracy;
    result.best_accuracy = tr.best_accuracy;
    result.learned = tr.best_accuracy >= base.sweep.learned_threshold;
    result.steps_run = tr.steps_run;
    result.first_step_at_threshold = tr.first_step_at_threshold;
    result.train_count = w.split.train_query_count();
    result.test_count = w.split.test_set.size();

    json j;
    j["status"] = result.status;
    j["final_accuracy"] = result.final_accuracy;
    j["best_accuracy"] = result.best_accuracy;
    j["learned"] = result.learned;
    j["steps_run"] = result.steps_run;
    j["first_step_at_threshold"] = result.first_step_at_threshold;
    j["train_count"] = result.train_count;
    j["test_count"] = result.test_count;
    j["tag"] = spec.tag;
    j["final_checkpoint"] = "ckpt-" + fmt_step(state.step) + ".bin";
    write_text_file(result_path, j.dump(2) + "\n");
    return result;
}

fs::path Session::run_sweep() {
    const SweepConfig& sw = cfg_.sweep;
    std::vector<SweepCellSpec> specs;

    if (sw.axis == "budget") {
        for (const auto& mode_name : sw.modes) {
            const TrainMode mode = parse_train_mode(mode_name);
            for (int h : sw.hops) {
                for (int r : sw.ratios) {
                    if (mode != TrainMode::baseline && h < 3) {
                        continue;
                    }
                    SweepCellSpec s;
                    s.tag = mode_name + "-h" + std::to_string(h) + "-x" + std::to_string(r);
                    s.hops = h;
                    s.ratio = r;
                    s.mode = mode;
                    specs.push_back(std::move(s));
                }
            }
        }
    } else if (sw.axis == "depth") {
        require(sw.ratios.size() == sw.hops.size(), ErrorCode::config,
                "sweep.ratios must pair one budget ratio with each entry of sweep.hops for the "
                "depth axis");
        for (std::size_t i = 0; i < sw.hops.size(); ++i) {
            for (int depth : sw.depths) {
                SweepCellSpec s;
                s.tag = "d" + std::to_string(depth) + "-h" + std::to_string(sw.hops[i]) + "-x" +
                        std::to_string(sw.ratios[i]);
                s.hops = sw.hops[i];
                s.ratio = sw.ratios[i];
                s.depth = depth;
                specs.push_back(std::move(s));
            }
        }
    } else { // constraint
        require(!sw.constraint_grid.empty(), ErrorCode::config,
                "sweep.constraint_grid must not be empty for the constraint axis");
        for (int c : sw.constraint_grid) {
            for (int r : sw.ratios) {
                SweepCellSpec s;
                s.tag = "c" + std::to_string(c) + "-x" + std::to_string(r);
                s.hops = cfg_.task.hops;
                s.ratio = r;
                s.constraint = c;
                specs.push_back(std::move(s));
            }
        }
    }

    const fs::path dir = run_dir("sweep");
    fs::create_directories(dir / "cells");

    std::vector<SweepCellResult> results(specs.size());
    const int workers = std::max(1, cfg_.workers);
    if (workers == 1) {
        for (std::size_t i = 0; i < specs.size(); ++i) {
            log("cell " + specs[i].tag + " (" + std::to_string(i + 1) + "/" +
                std::to_string(specs.size()) + ")");
            results[i] = run_sweep_cell(cfg_, specs[i], dir / "cells" / specs[i].tag, log_);
        }
    } else {
        // Static round-robin partition: deterministic regardless of timing.
        std::vector<std::thread> pool;
        for (int t = 0; t < workers; ++t) {
            pool.emplace_back([&, t]() {
                for (std::size_t i = t; i < specs.size(); i += workers) {
                    results[i] = run_sweep_cell(cfg_, specs[i], dir / "cells" / specs[i].tag,
                                                Session::Logger{});
                }
            });
        }
        for (auto& th : pool) {
            th.join();
        }
    }

    ManifestBuilder m(dir, "sweep", cfg_.canonical_json());
    add_choice_notes(m);

    // Accuracy table mirroring the budget-table layout: rows are
    // (mode x hops) or (hops) for depth, columns the swept values.
    CsvWriter table;
    json summary;
    summary["axis"] = sw.axis;
    json cells = json::array();
    for (const auto& r : results) {
        json c;
        c["tag"] = r.tag;
        c["status"] = r.status;
        c["final_accuracy"] = r.final_accuracy;
        c["best_accuracy"] = r.best_accuracy;
        c["learned"] = r.learned;
        c["steps_run"] = r.steps_run;
        c["first_step_at_threshold"] = r.first_step_at_threshold;
        c["train_count"] = r.train_count;
        c["test_count"] = r.test_count;
        cells.push_back(std::move(c));
    }
    summary["cells"] = cells;

    auto find_result = [&](const std::string& tag) -> const SweepCellResult* {
        for (const auto& r : results) {
            if (r.tag == tag) {
                return &r;
            }
        }
        return nullptr;
    };

    if (sw.axis == "budget") {
        std::vector<std::string> head = {"dataset"};
        for (int r : sw.ratios) {
            head.push_back("x" + std::to_string(r));
        }
        table.row(head);
        json minimal = json::object();
        for (const auto& mode_name : sw.modes) {
            for (int h : sw.hops) {
                if (parse_train_mode(mode_name) != TrainMode::baseline && h < 3) {
                    continue;
                }
                std::vector<std::string> row = {mode_name + "-" + std::to_string(h) + "-hop"};
                int min_ratio = -1;
                for (int r : sw.ratios) {
                    const auto* cell = find_result(mode_name + "-h" + std::to_string(h) + "-x" +
                                                   std::to_string(r));
                    row.push_back(cell && cell->status == "ok" ? fmt_acc(cell->best_accuracy)
                                                               : "");
                    if (cell && cell->learned && min_ratio < 0) {
                        min_ratio = r;
                    }
                }
                table.row(row);
                minimal[mode_name + "-" + std::to_string(h) + "-hop"] = min_ratio;
            }
        }
        summary["minimal_learned_ratio"] = minimal;
    } else if (sw.axis == "depth") {
        std::vector<std::string> head = {"dataset"};
        for (int d : sw.depths) {
            head.push_back(std::to_string(d) + "-layers");
        }
        table.row(head);
        json minimal = json::object();
        for (std::size_t i = 0; i < sw.hops.size(); ++i) {
            std::vector<std::string> row = {std::to_string(sw.hops[i]) + "-hop-x" +
                                            std::to_string(sw.ratios[i])};
            int min_depth = -1;
            for (int d : sw.depths) {
                const auto* cell =
                    find_result("d" + std::to_string(d) + "-h" + std::to_string(sw.hops[i]) +
                                "-x" + std::to_string(sw.ratios[i]));
                row.push_back(cell && cell->status == "ok" ? fmt_acc(cell->best_accuracy) : "");
                if (cell && cell->learned && min_depth < 0) {
                    min_depth = d;
                }
            }
            table.row(row);
            minimal[std::to_string(sw.hops[i]) + "-hop"] = min_depth;
        }
        summary["minimal_learned_depth"] = minimal;
    } else {
        std::vector<std::string> head = {"constraint"};
        for (int r : sw.ratios) {
            head.push_back("x" + std::to_string(r));
        }
        table.row(head);
        json minimal = json::object();
        for (int c : sw.constraint_grid) {
            std::vector<std::string> row = {"(" + std::to_string(c) + "," + std::to_string(c) +
                                            ")"};
            int min_ratio = -1;
            for (int r : sw.ratios) {
                const auto* cell =
                    find_result("c" + std::to_string(c) + "-x" + std::to_string(r));
                row.push_back(cell && cell->status == "ok" ? fmt_acc(cell->best_accuracy) : "");
                if (cell && cell->learned && min_ratio < 0) {
                    min_ratio = r;
                }
            }
            table.row(row);
            minimal[std::to_string(c)] = min_ratio;
        }
        summary["minimal_learned_ratio"] = minimal;
    }

    write_text_file(dir / "table.csv", table.out.str());
    m.add_file(dir / "table.csv");
    write_text_file(dir / "summary.json", summary.dump(2) + "\n");
    m.add_file(dir / "summary.json");
    for (const auto& spec : specs) {
        m.add_file(dir / "cells" / spec.tag / "result.json");
    }
    m.write();
    return dir;
}

fs::path Session::run_probe() {
    require(!cfg_.probe.checkpoint.empty(), ErrorCode::config,
            "probe.checkpoint must point to a checkpoint file");
    LoadedCheckpoint ck = load_checkpoint(cfg_.probe.checkpoint);
    World w = build_world(cfg_);
    require(ck.state.config.vocab_size == w.vocab.size(), ErrorCode::config,
            "probe: checkpoint vocabulary does not match the configured dataset");

    std::vector<std::size_t> idx(std::min<std::size_t>(w.test.size(), cfg_.probe.max_instances));
    std::iota(idx.begin(), idx.end(), 0);

    std::vector<int> positions;
    if (cfg_.probe.positions == "answer") {
        positions.push_back(w.test.instances[0].answer_position);
    }
    ProbeOptions opts;
    opts.max_iters = cfg_.probe.max_iters;
    opts.train_fraction = cfg_.probe.train_fraction;
    ProbeGrid grid = probe_grid(w.graph, ck.state.config, ck.state.params, w.test, idx, positions,
                                cfg_.seed, opts);

    ManifestBuilder m(run_dir("probe"), "probe", cfg_.canonical_json());
    add_choice_notes(m);
    CsvWriter csv;
    std::vector<std::string> head = {"layer", "position"};
    for (int hop = 1; hop <= grid.hops; ++hop) {
        head.push_back(std::to_string(hop) + "-hop");
    }
    csv.row(head);
    for (int l = 0; l < grid.n_layers; ++l) {
        for (std::size_t p = 0; p < grid.positions.size(); ++p) {
            std::vector<std::string> row = {std::to_string(l),
                                            std::to_string(grid.positions[p])};
            for (int hop = 1; hop <= grid.hops; ++hop) {
                row.push_back(std::to_string(grid.at(l, static_cast<int>(p), hop)));
            }
            csv.row(row);
        }
    }
    write_text_file(m.dir() / "probe_grid.csv", csv.out.str());
    m.add_file(m.dir() / "probe_grid.csv");

    json meta;
    meta["checkpoint"] = cfg_.probe.checkpoint;
    meta["checkpoint_step"] = ck.state.step;
    meta["instances"] = idx.size();
    meta["classes"] = grid.classes;
    meta["chance"] = 1.0 / grid.classes;
    meta["split_seed"] = cfg_.seed;
    meta["train_fraction"] = cfg_.probe.train_fraction;
    write_text_file(m.dir() / "probe_meta.json", meta.dump(2) + "\n");
    m.add_file(m.dir() / "probe_meta.json");
    m.write();
    return m.dir();
}

namespace {

void write_patch_csv(const fs::path& path, const std::vector<PatchReport>& reports) {
    CsvWriter csv;
    std::vector<std::string> head = {"family", "layer"};
    if (!reports.empty()) {
        for (int p : reports[0].positions) {
            head.push_back("pos" + std::to_string(p));
        }
    }
    csv.row(head);
    for (const auto& r : reports) {
        for (int l = 0; l < r.effects.rows(); ++l) {
            std::vector<std::string> row = {std::to_string(r.family), std::to_string(l)};
            for (int p = 0; p < r.effects.cols(); ++p) {
                row.push_back(std::to_string(r.effects(l, p)));
            }
            csv.row(row);
        }
    }
    write_text_file(path, csv.out.str());
}

} // namespace

fs::path Session::run_patch() {
    World w = build_world(cfg_);
    PatchOptions opts;
    opts.site = cfg_.patch.site == "residual" ? PatchSite::residual : PatchSite::mlp_out;
    opts.families = cfg_.patch.families;
    if (opts.families.empty()) {
        for (int f = 1; f <= cfg_.task.hops; ++f) {
            opts.families.push_back(f);
        }
    }
    opts.all_positions = cfg_.patch.positions == "all";
    opts.max_instances = cfg_.patch.instances;
    opts.rejection_cap = cfg_.patch.rejection_cap;
    opts.seed = cfg_.seed;

    ManifestBuilder m(run_dir("patch"), "patch", cfg_.canonical_json());
    add_choice_notes(m);
    json meta;
    meta["site"] = cfg_.patch.site;
    meta["families"] = opts.families;
    meta["instances_requested"] = opts.max_instances;
    meta["rejection_cap"] = opts.rejection_cap;
    meta["seed"] = cfg_.seed;

    std::vector<fs::path> checkpoints;
    if (cfg_.patch.across_checkpoints) {
        require(!cfg_.patch.checkpoint_dir.empty(), ErrorCode::config,
                "patch.checkpoint_dir is required when across_checkpoints is set");
        for (const auto& entry : fs::directory_iterator(cfg_.patch.checkpoint_dir)) {
            const std::string name = entry.path().filename().string();
            if (name.starts_with("ckpt-") && name.ends_with(".bin")) {
                checkpoints.push_back(entry.path());
            }
        }
        std::sort(checkpoints.begin(), checkpoints.end());
        require(!checkpoints.empty(), ErrorCode::config,
                "patch: no checkpoints found in " + cfg_.patch.checkpoint_dir);
    } else {
        require(!cfg_.patch.checkpoint.empty(), ErrorCode::config,
                "patch.checkpoint must point to a checkpoint file");
        checkpoints.emplace_back(cfg_.patch.checkpoint);
    }

    json files = json::array();
    for (const auto& ckpath : checkpoints) {
        LoadedCheckpoint ck = load_checkpoint(ckpath);
        require(ck.state.config.vocab_size == w.vocab.size(), ErrorCode::config,
                "patch: checkpoint vocabulary does not match the configured dataset");
        auto reports = patch_sweep(ck.state.config, ck.state.params, w.test, opts);
        const std::string fname = cfg_.patch.across_checkpoints
                                      ? "patch-" + fmt_step(ck.state.step) + ".csv"
                                      : "patch.csv";
        write_patch_csv(m.dir() / fname, reports);
        m.add_file(m.dir() / fname);
        json entry;
        entry["file"] = fname;
        entry["checkpoint"] = ckpath.string();
        entry["step"] = ck.state.step;
        json used = json::array();
        for (const auto& r : reports) {
            used.push_back({{"family", r.family},
                            {"instances_used", r.instances_used},
                            {"skipped", r.skipped}});
        }
        entry["families"] = used;
        files.push_back(std::move(entry));
        log("patch: " + fname);
    }
    meta["reports"] = files;
    write_text_file(m.dir() / "patch_meta.json", meta.dump(2) + "\n");
    m.add_file(m.dir() / "patch_meta.json");
    m.write();
    return m.dir();
}

fs::path Session::run_oracle() {
    const OracleConfig& oc = cfg_.oracle;
    ManifestBuilder m(run_dir("oracle"), "oracle", cfg_.canonical_json());
    add_choice_notes(m);

    CsvWriter csv;
    csv.row({"k", "word_count", "distinct_count", "fibonacci", "ratio_bound", "counts_match",
             "all_distinct", "bound_num", "bound_den", "bound_value"});
    bool all_ok = true;
    for (int k = 1; k <= oc.k_max; ++k) {
        // The construction needs k <= n-1; grow n with k up to n_max.
        const int n = std::min(oc.n_max, std::max(2, k + 1));
        if (k > n - 1) {
            break;
        }
        auto [f, g] = build_fg(n);
        const auto census = enumerate_ggfree_compositions(f, g, k);
        const std::uint64_t fib = fib_count(k);
        const double ratio = ggfree_lower_bound(k);
        const bool counts_match = census.word_count == fib &&
                                  static_cast<double>(fib) >= ratio;
        const bool all_distinct = census.distinct_count == census.word_count;
        all_ok = all_ok && counts_match && all_distinct;
        const Rational bound =
            depth_lower_bound({k, oc.precision_bits, oc.d_model, oc.heads});
        csv.row({std::to_string(k), std::to_string(census.word_count),
                 std::to_string(census.distinct_count), std::to_string(fib),
                 std::to_string(ratio), counts_match ? "1" : "0", all_distinct ? "1" : "0",
                 std::to_string(bound.num), std::to_string(bound.den),
                 std::to_string(bound.value())});
    }
    write_text_file(m.dir() / "oracle.csv", csv.out.str());
    m.add_file(m.dir() / "oracle.csv");

    json meta;
    meta["n_max"] = oc.n_max;
    meta["k_max"] = oc.k_max;
    meta["precision_bits"] = oc.precision_bits;
    meta["d_model"] = oc.d_model;
    meta["heads"] = oc.heads;
    meta["all_checks_passed"] = all_ok;
    write_text_file(m.dir() / "oracle_meta.json", meta.dump(2) + "\n");
    m.add_file(m.dir() / "oracle_meta.json");
    m.write();
    require(all_ok, ErrorCode::state, "oracle: verification failed");
    return m.dir();
}

} // namespace khop
