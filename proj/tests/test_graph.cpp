#include <doctest.h>

#include "rgm/error.hpp"
#include "rgm/graph.hpp"

using namespace rgm;

TEST_CASE("slots enumerate pairs in lexicographic order") {
    CHECK(edge_slot_count(10) == 45);
    CHECK(slot_pair(4, 0) == std::pair{0, 1});
    CHECK(slot_pair(4, 2) == std::pair{0, 3});
    CHECK(slot_pair(4, 3) == std::pair{1, 2});
    CHECK(slot_pair(4, 5) == std::pair{2, 3});
    for (int p = 2; p < 9; ++p)
        for (int e = 0; e < edge_slot_count(p); ++e) {
            auto [i, j] = slot_pair(p, e);
            CHECK(i < j);
            CHECK(slot_index(p, i, j) == e);
            CHECK(slot_index(p, j, i) == e);
        }
    auto labels = slot_labels({"a", "b", "c"});
    CHECK(labels == std::vector<std::string>{"a-b", "a-c", "b-c"});
}

TEST_CASE("edges are symmetric") {
    Graph g(4);
    g.set(2, 0, true);
    CHECK(g.has(0, 2));
    CHECK(g.has_slot(slot_index(4, 0, 2)));
    CHECK(g.n_edges() == 1);
    g.toggle(0, 2);
    CHECK(g.n_edges() == 0);
    CHECK_THROWS_AS(g.set(1, 1, true), ValidationError);
    CHECK(Graph::complete(5).n_edges() == 10);
}

TEST_CASE("neighbours and adjacency") {
    Graph g(4);
    g.set(0, 1, true);
    g.set(0, 2, true);
    g.set(1, 2, true);
    g.set(2, 3, true);
    CHECK(g.neighbors(2) == std::vector<int>{0, 1, 3});
    CHECK(g.common_neighbors(0, 1) == std::vector<int>{2});
    auto a = g.adjacency();
    CHECK(a == a.transpose());
    CHECK(Graph::from_adjacency(a) == g);
    Eigen::MatrixXi bad = a;
    bad(0, 3) = 1;
    CHECK_THROWS_AS(Graph::from_adjacency(bad), ValidationError);
}

TEST_CASE("chordality") {
    Graph cycle(4);
    cycle.set(0, 1, true);
    cycle.set(1, 2, true);
    cycle.set(2, 3, true);
    cycle.set(3, 0, true);
    CHECK_FALSE(is_decomposable(cycle));
    CHECK(perfect_ordering(cycle).empty());
    cycle.set(0, 2, true);
    CHECK(is_decomposable(cycle));
    CHECK(perfect_ordering(cycle).size() == 4);
    CHECK(is_decomposable(Graph(5)));
    CHECK(is_decomposable(Graph::complete(6)));
    // every graph on three nodes is decomposable
    for (int mask = 0; mask < 8; ++mask) {
        Graph g(3);
        for (int e = 0; e < 3; ++e) g.set_slot(e, (mask >> e) & 1);
        CHECK(is_decomposable(g));
    }
}
