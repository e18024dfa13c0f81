#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "common.hpp"

namespace khop {

// Layered universe of entities with relation-labeled functional edges.
// Entity ids are dense: layer l holds ids [l*n, (l+1)*n) with n = |E|/layers.
// Every entity below the top layer has exactly one out-edge per relation id,
// targeting the layer immediately above; top-layer entities have none.
struct EntityGraph {
    int num_layers = 0;
    int entities_per_layer = 0;
    std::vector<std::string> entity_names;   // id -> name
    std::vector<std::string> relation_names; // id -> name
    std::vector<EntityId> edges;             // [e * |R| + r] -> target, -1 if none
    std::uint64_t seed = 0;

    int num_entities() const { return static_cast<int>(entity_names.size()); }
    int num_relations() const { return static_cast<int>(relation_names.size()); }

    int layer_of(EntityId e) const { return static_cast<int>(e) / entities_per_layer; }

    bool has_edges(EntityId e) const { return layer_of(e) < num_layers - 1; }

    EntityId edge(EntityId e, RelationId r) const {
        require(e >= 0 && e < num_entities(), ErrorCode::invalid_argument,
                "edge: entity id out of range");
        require(r >= 0 && r < num_relations(), ErrorCode::invalid_argument,
                "edge: relation id out of range");
        EntityId t = edges[static_cast<std::size_t>(e) * num_relations() + r];
        require(t >= 0, ErrorCode::state, "edge: missing edge (corrupt graph)");
        return t;
    }

    // First id of layer l (layers numbered from 0 = bottom).
    EntityId layer_begin(int l) const { return l * entities_per_layer; }
    EntityId layer_end(int l) const { return (l + 1) * entities_per_layer; }
};

EntityGraph sample_entity_graph(int num_entities, int num_relations, int num_layers,
                                std::uint64_t seed);

// Structured text serialization: header, entity table, layers, edge triples.
void save_graph(const EntityGraph& g, const std::filesystem::path& path);
EntityGraph load_graph(const std::filesystem::path& path);

// Checksum of the graph's canonical text form.
std::uint64_t graph_checksum(const EntityGraph& g);

} // namespace khop
