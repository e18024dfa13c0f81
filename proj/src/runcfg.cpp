#include "runcfg.hpp"

#include <fstream>

#include <json.hpp>

#include "rng.hpp"

namespace khop {

using nlohmann::json;

namespace {

[[noreturn]] void bad_field(const std::string& path, const std::string& why) {
    fail(ErrorCode::config, "config field " + path + ": " + why);
}

// Typed field access with path-qualified error reporting.
template <typename T>
T get_or(const json& j, const std::string& parent, const std::string& key, T fallback) {
    if (!j.contains(key)) {
        return fallback;
    }
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        bad_field(parent.empty() ? key : parent + "." + key, "wrong type");
    }
}

void check_known_keys(const json& j, const std::string& parent,
                      std::initializer_list<const char*> known) {
    if (!j.is_object()) {
        bad_field(parent.empty() ? "(root)" : parent, "must be an object");
    }
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* k : known) {
            if (key == k) {
                ok = true;
                break;
            }
        }
        if (!ok) {
            bad_field(parent.empty() ? key : parent + "." + key, "unknown field");
        }
    }
}

} // namespace

RunConfig parse_run_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        fail(ErrorCode::config, std::string("config is not valid JSON: ") + e.what());
    }
    check_known_keys(j, "", {"seed", "out", "workers", "resume", "graph", "task", "model",
                             "train", "eval", "sweep", "probe", "patch", "oracle"});

    RunConfig c;
    c.seed = get_or<std::uint64_t>(j, "", "seed", 0);
    c.out = get_or<std::string>(j, "", "out", "runs");
    c.workers = get_or<int>(j, "", "workers", 1);
    c.resume = get_or<bool>(j, "", "resume", false);
    if (c.workers < 1) {
        bad_field("workers", "must be >= 1");
    }

    if (j.contains("graph")) {
        const auto& g = j.at("graph");
        check_known_keys(g, "graph", {"entities", "relations", "layers"});
        c.graph.entities = get_or<int>(g, "graph", "entities", c.graph.entities);
        c.graph.relations = get_or<int>(g, "graph", "relations", c.graph.relations);
        c.graph.layers = get_or<int>(g, "graph", "layers", c.graph.layers);
    }
    if (c.graph.layers < 2) {
        bad_field("graph.layers", "must be >= 2");
    }
    if (c.graph.entities < c.graph.layers) {
        bad_field("graph.entities", "must be >= graph.layers");
    }
    if (c.graph.entities % c.graph.layers != 0) {
        bad_field("graph.entities", "must be divisible by graph.layers");
    }
    if (c.graph.relations < 1) {
        bad_field("graph.relations", "must be >= 1");
    }

    if (j.contains("task")) {
        const auto& t = j.at("task");
        check_known_keys(t, "task",
                         {"hops", "budget_ratio", "mode", "test_size", "base_budget_fraction",
                          "aux_budgets", "relation_constraint", "filter_test_overlap"});
        c.task.hops = get_or<int>(t, "task", "hops", c.task.hops);
        c.task.budget_ratio = get_or<int>(t, "task", "budget_ratio", c.task.budget_ratio);
        c.task.mode = parse_train_mode(get_or<std::string>(t, "task", "mode", "baseline"));
        c.task.test_size = get_or<std::uint64_t>(t, "task", "test_size", c.task.test_size);
        c.task.base_budget_fraction =
            get_or<double>(t, "task", "base_budget_fraction", c.task.base_budget_fraction);
        auto aux = get_or<std::vector<std::uint64_t>>(t, "task", "aux_budgets", {});
        c.task.aux_budgets = aux;
        auto rc = get_or<std::vector<int>>(t, "task", "relation_constraint", {});
        if (!rc.empty()) {
            c.task.constraint = RelationConstraint{rc};
        }
        if (t.contains("filter_test_overlap") && !t.at("filter_test_overlap").is_null()) {
            c.task.filter_test_overlap =
                get_or<bool>(t, "task", "filter_test_overlap", false);
        }
    }
    if (c.task.hops < 1 || c.task.hops > c.graph.layers - 1) {
        bad_field("task.hops", "must be in 1..graph.layers-1");
    }
    if (c.task.budget_ratio < 1) {
        bad_field("task.budget_ratio", "must be >= 1");
    }
    if (c.task.base_budget_fraction <= 0.0 || c.task.base_budget_fraction > 1.0) {
        bad_field("task.base_budget_fraction", "must be in (0,1]");
    }

    c.model.context_length = 0; // 0 = fit the corpus
    if (j.contains("model")) {
        const auto& m = j.at("model");
        check_known_keys(m, "model",
                         {"layers", "heads", "d_model", "d_mlp", "context_length", "rope_base",
                          "init_std", "dropout_rate"});
        c.model.n_layers = get_or<int>(m, "model", "layers", c.model.n_layers);
        c.model.n_heads = get_or<int>(m, "model", "heads", c.model.n_heads);
        c.model.d_model = get_or<int>(m, "model", "d_model", c.model.d_model);
        c.model.d_mlp = get_or<int>(m, "model", "d_mlp", c.model.d_mlp);
        c.model.context_length = get_or<int>(m, "model", "context_length", 0);
        c.model.rope_base = get_or<float>(m, "model", "rope_base", c.model.rope_base);
        c.model.init_std = get_or<float>(m, "model", "init_std", c.model.init_std);
        c.model.dropout_rate = get_or<float>(m, "model", "dropout_rate", c.model.dropout_rate);
    }

    if (j.contains("train")) {
        const auto& t = j.at("train");
        check_known_keys(t, "train",
                         {"lr", "adam_eps", "beta1", "beta2", "weight_decay", "warmup",
                          "min_lr_factor", "batch", "grad_accum", "max_steps",
                          "checkpoint_every", "eval_every", "log_every", "early_stop_accuracy",
                          "stage_steps"});
        c.train.lr_peak = get_or<float>(t, "train", "lr", c.train.lr_peak);
        c.train.adam_eps = get_or<float>(t, "train", "adam_eps", c.train.adam_eps);
        c.train.beta1 = get_or<float>(t, "train", "beta1", c.train.beta1);
        c.train.beta2 = get_or<float>(t, "train", "beta2", c.train.beta2);
        c.train.weight_decay = get_or<float>(t, "train", "weight_decay", c.train.weight_decay);
        c.train.warmup_steps = get_or<int>(t, "train", "warmup", c.train.warmup_steps);
        c.train.min_lr_factor = get_or<float>(t, "train", "min_lr_factor", c.train.min_lr_factor);
        c.train.batch_size = get_or<int>(t, "train", "batch", c.train.batch_size);
        c.train.grad_accum = get_or<int>(t, "train", "grad_accum", c.train.grad_accum);
        c.train.max_steps = get_or<int>(t, "train", "max_steps", c.train.max_steps);
        c.train.checkpoint_every =
            get_or<int>(t, "train", "checkpoint_every", c.train.checkpoint_every);
        c.train.eval_every = get_or<int>(t, "train", "eval_every", c.train.eval_every);
        c.train.log_every = get_or<int>(t, "train", "log_every", c.train.log_every);
        c.train.early_stop_accuracy =
            get_or<double>(t, "train", "early_stop_accuracy", c.train.early_stop_accuracy);
        c.stage_steps = get_or<std::vector<int>>(t, "train", "stage_steps", {});
    }

    if (j.contains("eval")) {
        const auto& e = j.at("eval");
        check_known_keys(e, "eval", {"batch", "checkpoint"});
        c.eval_batch = get_or<int>(e, "eval", "batch", c.eval_batch);
        c.eval_checkpoint = get_or<std::string>(e, "eval", "checkpoint", "");
    }
    if (c.eval_batch < 1) {
        bad_field("eval.batch", "must be >= 1");
    }

    if (j.contains("sweep")) {
        const auto& s = j.at("sweep");
        check_known_keys(s, "sweep",
                         {"axis", "hops", "ratios", "depths", "constraint_grid", "modes",
                          "max_steps", "early_stop_accuracy", "learned_threshold"});
        c.sweep.axis = get_or<std::string>(s, "sweep", "axis", c.sweep.axis);
        c.sweep.hops = get_or<std::vector<int>>(s, "sweep", "hops", c.sweep.hops);
        c.sweep.ratios = get_or<std::vector<int>>(s, "sweep", "ratios", c.sweep.ratios);
        c.sweep.depths = get_or<std::vector<int>>(s, "sweep", "depths", c.sweep.depths);
        c.sweep.constraint_grid =
            get_or<std::vector<int>>(s, "sweep", "constraint_grid", c.sweep.constraint_grid);
        c.sweep.modes = get_or<std::vector<std::string>>(s, "sweep", "modes", c.sweep.modes);
        c.sweep.max_steps = get_or<int>(s, "sweep", "max_steps", c.sweep.max_steps);
        c.sweep.early_stop_accuracy =
            get_or<double>(s, "sweep", "early_stop_accuracy", c.sweep.early_stop_accuracy);
        c.sweep.learned_threshold =
            get_or<double>(s, "sweep", "learned_threshold", c.sweep.learned_threshold);
        if (c.sweep.axis != "budget" && c.sweep.axis != "depth" && c.sweep.axis != "constraint") {
            bad_field("sweep.axis", "must be budget, depth or constraint");
        }
        for (const auto& m : c.sweep.modes) {
            parse_train_mode(m);
        }
    }

    if (j.contains("probe")) {
        const auto& p = j.at("probe");
        check_known_keys(p, "probe",
                         {"checkpoint", "positions", "max_instances", "max_iters",
                          "train_fraction"});
        c.probe.checkpoint = get_or<std::string>(p, "probe", "checkpoint", "");
        c.probe.positions = get_or<std::string>(p, "probe", "positions", c.probe.positions);
        c.probe.max_instances = get_or<int>(p, "probe", "max_instances", c.probe.max_instances);
        c.probe.max_iters = get_or<int>(p, "probe", "max_iters", c.probe.max_iters);
        c.probe.train_fraction =
            get_or<double>(p, "probe", "train_fraction", c.probe.train_fraction);
        if (c.probe.positions != "answer" && c.probe.positions != "all") {
            bad_field("probe.positions", "must be answer or all");
        }
    }

    if (j.contains("patch")) {
        const auto& p = j.at("patch");
        check_known_keys(p, "patch",
                         {"checkpoint", "site", "families", "positions", "instances",
                          "rejection_cap", "across_checkpoints", "checkpoint_dir"});
        c.patch.checkpoint = get_or<std::string>(p, "patch", "checkpoint", "");
        c.patch.site = get_or<std::string>(p, "patch", "site", c.patch.site);
        c.patch.families = get_or<std::vector<int>>(p, "patch", "families", {});
        c.patch.positions = get_or<std::string>(p, "patch", "positions", c.patch.positions);
        c.patch.instances = get_or<int>(p, "patch", "instances", c.patch.instances);
        c.patch.rejection_cap = get_or<int>(p, "patch", "rejection_cap", c.patch.rejection_cap);
        c.patch.across_checkpoints =
            get_or<bool>(p, "patch", "across_checkpoints", c.patch.across_checkpoints);
        c.patch.checkpoint_dir = get_or<std::string>(p, "patch", "checkpoint_dir", "");
        if (c.patch.site != "residual" && c.patch.site != "mlp_out") {
            bad_field("patch.site", "must be residual or mlp_out");
        }
        if (c.patch.positions != "answer" && c.patch.positions != "all") {
            bad_field("patch.positions", "must be answer or all");
        }
    }

    if (j.contains("oracle")) {
        const auto& o = j.at("oracle");
        check_known_keys(o, "oracle", {"n_max", "k_max", "precision_bits", "d_model", "heads"});
        c.oracle.n_max = get_or<int>(o, "oracle", "n_max", c.oracle.n_max);
        c.oracle.k_max = get_or<int>(o, "oracle", "k_max", c.oracle.k_max);
        c.oracle.precision_bits =
            get_or<int>(o, "oracle", "precision_bits", c.oracle.precision_bits);
        c.oracle.d_model = get_or<int>(o, "oracle", "d_model", c.oracle.d_model);
        c.oracle.heads = get_or<int>(o, "oracle", "heads", c.oracle.heads);
        if (c.oracle.n_max < 2) {
            bad_field("oracle.n_max", "must be >= 2");
        }
        if (c.oracle.k_max < 1) {
            bad_field("oracle.k_max", "must be >= 1");
        }
    }

    return c;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorCode::io, "cannot open config file " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_run_config(text);
}

std::string RunConfig::canonical_json() const {
    json j;
    j["seed"] = seed;
    j["out"] = out;
    j["workers"] = workers;
    j["graph"] = {{"entities", graph.entities},
                  {"relations", graph.relations},
                  {"layers", graph.layers}};
    json t;
    t["hops"] = task.hops;
    t["budget_ratio"] = task.budget_ratio;
    t["mode"] = train_mode_name(task.mode);
    t["test_size"] = task.test_size;
    t["base_budget_fraction"] = task.base_budget_fraction;
    t["aux_budgets"] = task.aux_budgets;
    t["relation_constraint"] =
        task.constraint ? json(task.constraint->per_hop_counts) : json::array();
    if (task.filter_test_overlap) {
        t["filter_test_overlap"] = *task.filter_test_overlap;
    }
    j["task"] = t;
    j["model"] = {{"layers", model.n_layers},
                  {"heads", model.n_heads},
                  {"d_model", model.d_model},
                  {"d_mlp", model.d_mlp},
                  {"context_length", model.context_length},
                  {"rope_base", model.rope_base},
                  {"init_std", model.init_std},
                  {"dropout_rate", model.dropout_rate}};
    j["train"] = {{"lr", train.lr_peak},
                  {"adam_eps", train.adam_eps},
                  {"beta1", train.beta1},
                  {"beta2", train.beta2},
                  {"weight_decay", train.weight_decay},
                  {"warmup", train.warmup_steps},
                  {"min_lr_factor", train.min_lr_factor},
                  {"batch", train.batch_size},
                  {"grad_accum", train.grad_accum},
                  {"max_steps", train.max_steps},
                  {"checkpoint_every", train.checkpoint_every},
                  {"eval_every", train.eval_every},
                  {"log_every", train.log_every},
                  {"early_stop_accuracy", train.early_stop_accuracy},
                  {"stage_steps", stage_steps}};
    j["eval"] = {{"batch", eval_batch}, {"checkpoint", eval_checkpoint}};
    j["sweep"] = {{"axis", sweep.axis},
                  {"hops", sweep.hops},
                  {"ratios", sweep.ratios},
                  {"depths", sweep.depths},
                  {"constraint_grid", sweep.constraint_grid},
                  {"modes", sweep.modes},
                  {"max_steps", sweep.max_steps},
                  {"early_stop_accuracy", sweep.early_stop_accuracy},
                  {"learned_threshold", sweep.learned_threshold}};
    j["probe"] = {{"checkpoint", probe.checkpoint},
                  {"positions", probe.positions},
                  {"max_instances", probe.max_instances},
                  {"max_iters", probe.max_iters},
                  {"train_fraction", probe.train_fraction}};
    j["patch"] = {{"checkpoint", patch.checkpoint},
                  {"site", patch.site},
                  {"families", patch.families},
                  {"positions", patch.positions},
                  {"instances", patch.instances},
                  {"rejection_cap", patch.rejection_cap},
                  {"across_checkpoints", patch.across_checkpoints},
                  {"checkpoint_dir", patch.checkpoint_dir}};
    j["oracle"] = {{"n_max", oracle.n_max},
                   {"k_max", oracle.k_max},
                   {"precision_bits", oracle.precision_bits},
                   {"d_model", oracle.d_model},
                   {"heads", oracle.heads}};
    return j.dump(2);
}

std::uint64_t RunConfig::checksum() const {
    // Execution-only knobs (output root, worker count) do not change what a
    // run computes, so they stay out of the identity hash.
    json j = json::parse(canonical_json());
    j.erase("out");
    j.erase("workers");
    const std::string s = j.dump(2);
    return fnv1a64(s.data(), s.size());
}

} // namespace khop
