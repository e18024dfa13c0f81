#include "graph.hpp"

#include <fstream>
#include <sstream>

#include "names.hpp"
#include "rng.hpp"

namespace khop {

EntityGraph sample_entity_graph(int num_entities, int num_relations, int num_layers,
                                std::uint64_t seed) {
    require(num_layers >= 2, ErrorCode::invalid_argument,
            "sample_entity_graph: need at least 2 layers");
    require(num_entities > 0 && num_relations > 0, ErrorCode::invalid_argument,
            "sample_entity_graph: sizes must be positive");
    require(num_entities % num_layers == 0, ErrorCode::invalid_argument,
            "sample_entity_graph: num_entities not divisible by num_layers");
    const int per_layer = num_entities / num_layers;
    require(num_relations <= per_layer, ErrorCode::invalid_argument,
            "sample_entity_graph: num_relations exceeds layer size");

    const auto entity_pool = entity_namespace();
    const auto relation_pool = relation_namespace();
    require(num_entities <= static_cast<int>(entity_pool.size()), ErrorCode::invalid_argument,
            "sample_entity_graph: entity namespace exhausted");
    require(num_relations <= static_cast<int>(relation_pool.size()), ErrorCode::invalid_argument,
            "sample_entity_graph: relation namespace exhausted");

    Rng root(seed);
    EntityGraph g;
    g.num_layers = num_layers;
    g.entities_per_layer = per_layer;
    g.seed = seed;

    {
        Rng r = root.stream("entity_names");
        auto picks = r.sample_indices(entity_pool.size(), num_entities);
        g.entity_names.reserve(num_entities);
        for (auto i : picks) {
            g.entity_names.emplace_back(entity_pool[i]);
        }
    }
    {
        Rng r = root.stream("relation_names");
        auto picks = r.sample_indices(relation_pool.size(), num_relations);
        g.relation_names.reserve(num_relations);
        for (auto i : picks) {
            g.relation_names.emplace_back(relation_pool[i]);
        }
    }

    g.edges.assign(static_cast<std::size_t>(num_entities) * num_relations, -1);
    for (int l = 0; l + 1 < num_layers; ++l) {
        for (EntityId e = g.layer_begin(l); e < g.layer_end(l); ++e) {
            // Targets drawn independently per relation; relations on one
            // entity are distinct by construction, targets may repeat.
            Rng r = root.stream("edges", static_cast<std::uint64_t>(e));
            for (RelationId rel = 0; rel < num_relations; ++rel) {
                EntityId target = g.layer_begin(l + 1) +
                                  static_cast<EntityId>(r.below(per_layer));
                g.edges[static_cast<std::size_t>(e) * num_relations + rel] = target;
            }
        }
    }
    return g;
}

namespace {

std::string graph_to_text(const EntityGraph& g) {
    std::ostringstream out;
    out << "khoplab-graph v1\n";
    out << "seed " << g.seed << "\n";
    out << "entities " << g.num_entities() << "\n";
    out << "relations " << g.num_relations() << "\n";
    out << "layers " << g.num_layers << "\n";
    out << "[relations]\n";
    for (int r = 0; r < g.num_relations(); ++r) {
        out << r << " " << g.relation_names[r] << "\n";
    }
    out << "[entities]\n";
    for (EntityId e = 0; e < g.num_entities(); ++e) {
        out << e << " " << g.layer_of(e) << " " << g.entity_names[e] << "\n";
    }
    out << "[edges]\n";
    for (EntityId e = 0; e < g.num_entities(); ++e) {
        for (RelationId r = 0; r < g.num_relations(); ++r) {
            EntityId t = g.edges[static_cast<std::size_t>(e) * g.num_relations() + r];
            if (t >= 0) {
                out << e << " " << r << " " << t << "\n";
            }
        }
    }
    return out.str();
}

} // namespace

std::uint64_t graph_checksum(const EntityGraph& g) {
    const std::string text = graph_to_text(g);
    return fnv1a64(text.data(), text.size());
}

void save_graph(const EntityGraph& g, const std::filesystem::path& path) {
    const std::string body = graph_to_text(g);
    std::ofstream out(path, std::ios::binary);
    require(out.good(), ErrorCode::io, "save_graph: cannot open " + path.string());
    out << "checksum " << fnv1a64(body.data(), body.size()) << "\n";
    out << body;
    require(out.good(), ErrorCode::io, "save_graph: write failed for " + path.string());
}

EntityGraph load_graph(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorCode::io, "load_graph: cannot open " + path.string());
    std::string word;
    std::uint64_t checksum = 0;
    in >> word >> checksum;
    require(word == "checksum", ErrorCode::io, "load_graph: bad header");
    in.ignore();
    std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    require(fnv1a64(body.data(), body.size()) == checksum, ErrorCode::io,
            "load_graph: checksum mismatch");

    std::istringstream s(body);
    std::string line;
    std::getline(s, line);
    require(line == "khoplab-graph v1", ErrorCode::io, "load_graph: bad magic");

    EntityGraph g;
    int num_entities = 0;
    int num_relations = 0;
    s >> word >> g.seed;
    s >> word >> num_entities;
    s >> word >> num_relations;
    s >> word >> g.num_layers;
    g.entities_per_layer = num_entities / g.num_layers;
    s >> word; // [relations]
    g.relation_names.resize(num_relations);
    for (int i = 0; i < num_relations; ++i) {
        int id = 0;
        s >> id >> g.relation_names[id];
    }
    s >> word; // [entities]
    g.entity_names.resize(num_entities);
    for (int i = 0; i < num_entities; ++i) {
        int id = 0;
        int layer = 0;
        s >> id >> layer >> g.entity_names[id];
    }
    s >> word; // [edges]
    g.edges.assign(static_cast<std::size_t>(num_entities) * num_relations, -1);
    EntityId e = 0;
    RelationId r = 0;
    EntityId t = 0;
    while (s >> e >> r >> t) {
        g.edges[static_cast<std::size_t>(e) * num_relations + r] = t;
    }
    return g;
}

} // namespace khop
