#include <doctest.h>

#include <filesystem>
#include <set>

#include "graph.hpp"
#include "names.hpp"

using namespace khop;

namespace {

void check_invariants(const EntityGraph& g) {
    const int E = g.num_entities();
    const int R = g.num_relations();
    const int n = g.entities_per_layer;
    REQUIRE(E == n * g.num_layers);

    // Names distinct.
    std::set<std::string> names(g.entity_names.begin(), g.entity_names.end());
    CHECK(names.size() == static_cast<std::size_t>(E));
    std::set<std::string> rels(g.relation_names.begin(), g.relation_names.end());
    CHECK(rels.size() == static_cast<std::size_t>(R));

    for (EntityId e = 0; e < E; ++e) {
        const int layer = g.layer_of(e);
        if (layer + 1 < g.num_layers) {
            for (RelationId r = 0; r < R; ++r) {
                const EntityId t = g.edge(e, r);
                CHECK(g.layer_of(t) == layer + 1);
            }
        } else {
            for (RelationId r = 0; r < R; ++r) {
                CHECK(g.edges[static_cast<std::size_t>(e) * R + r] == -1);
            }
        }
    }
}

} // namespace

TEST_CASE("large config: 100 entities per layer, 20 out-edges each") {
    EntityGraph g = sample_entity_graph(500, 20, 5, 1);
    CHECK(g.entities_per_layer == 100);
    CHECK(g.num_relations() == 20);
    check_invariants(g);
}

TEST_CASE("small config layer sizes") {
    EntityGraph g = sample_entity_graph(250, 10, 5, 2);
    CHECK(g.entities_per_layer == 50);
    check_invariants(g);
}

TEST_CASE("minimum sizes force a single chain") {
    EntityGraph g = sample_entity_graph(5, 1, 5, 3);
    CHECK(g.entities_per_layer == 1);
    for (int l = 0; l + 1 < 5; ++l) {
        CHECK(g.edge(g.layer_begin(l), 0) == g.layer_begin(l + 1));
    }
}

TEST_CASE("invariants hold across many seeds") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        EntityGraph g = sample_entity_graph(50, 5, 5, seed);
        check_invariants(g);
    }
}

TEST_CASE("identical inputs reproduce the graph bit for bit") {
    EntityGraph a = sample_entity_graph(100, 5, 5, 77);
    EntityGraph b = sample_entity_graph(100, 5, 5, 77);
    CHECK(graph_checksum(a) == graph_checksum(b));
    CHECK(a.entity_names == b.entity_names);
    CHECK(a.edges == b.edges);
    EntityGraph c = sample_entity_graph(100, 5, 5, 78);
    CHECK(graph_checksum(a) != graph_checksum(c));
}

TEST_CASE("indivisible entity count is rejected") {
    CHECK_THROWS_AS(sample_entity_graph(101, 5, 5, 1), KhopError);
}

TEST_CASE("exhausted namespaces are rejected") {
    CHECK_THROWS_AS(sample_entity_graph(1000, 5, 5, 1), KhopError); // > 600 entity names
    CHECK_THROWS_AS(sample_entity_graph(250, 25, 5, 1), KhopError); // > 20 relation names
}

TEST_CASE("relations must fit the layer size") {
    CHECK_THROWS_AS(sample_entity_graph(25, 6, 5, 1), KhopError);
}

TEST_CASE("graph save/load round trip") {
    EntityGraph g = sample_entity_graph(100, 5, 5, 9);
    const auto path = std::filesystem::temp_directory_path() / "khoplab_graph_test.txt";
    save_graph(g, path);
    EntityGraph h = load_graph(path);
    CHECK(graph_checksum(g) == graph_checksum(h));
    CHECK(g.entity_names == h.entity_names);
    CHECK(g.relation_names == h.relation_names);
    CHECK(g.edges == h.edges);
    CHECK(g.seed == h.seed);
    std::filesystem::remove(path);
}

TEST_CASE("name pools are disjoint and sized as documented") {
    auto ents = entity_namespace();
    auto fill = filler_namespace();
    auto rels = relation_namespace();
    CHECK(ents.size() == 600);
    CHECK(fill.size() == 100);
    CHECK(rels.size() == 20);
    std::set<std::string> all;
    for (auto* n : ents) {
        all.insert(n);
    }
    for (auto* n : fill) {
        CHECK(all.insert(n).second); // filler names never collide with entities
    }
}
