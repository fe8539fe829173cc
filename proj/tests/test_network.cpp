#include <gtest/gtest.h>

#include <numeric>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "wikisustain/network.hpp"

using namespace wikisustain;
using namespace wikisustain::network;

namespace {

std::vector<ingest::RevisionRecord> revisions(const std::vector<std::string>& who) {
    std::vector<ingest::RevisionRecord> out;
    for (std::size_t i = 0; i < who.size(); ++i) {
        const auto ed = is_ip_address(who[i]) ? Editor::anonymous(who[i]) : Editor::registered(who[i]);
        out.push_back(ingest::make_revision(1, "P", 0, static_cast<std::int64_t>(i + 1), static_cast<Timestamp>(i), ed,
                                            std::to_string(i)));
    }
    return out;
}

std::string edges(const EditGraph& g) {
    std::ostringstream s;
    g.write_edge_list(s);
    return s.str();
}

EditGraph graph_of(const std::vector<std::string>& who) { return build_edit_graph(revisions(who)); }

}  // namespace

TEST(EditGraph, Construction) {
    EXPECT_EQ(edges(graph_of({"A", "B", "A"})), "A\tB\nB\tA\n");
    EXPECT_EQ(edges(graph_of({"A", "A", "B"})), "A\tB\n");
    const auto g = graph_of({"A", "192.0.2.1", "B"});
    EXPECT_EQ(g.edge_count(), 0u);
    EXPECT_EQ(g.node_count(), 2u);
    EXPECT_EQ(graph_of({"A", "B", "A", "B"}).edge_count(), 2u);
}

TEST(GraphFeatures, DirectedTriangle) {
    const auto b = graph_features(graph_of({"A", "B", "C", "A"}));
    EXPECT_EQ(b.at("Num-of-Nodes"), 3);
    EXPECT_EQ(b.at("Num-of-Edges"), 3);
    EXPECT_EQ(b.at("Num-of-Triangles"), 1);
    EXPECT_EQ(b.at("Density"), 0.5);
    EXPECT_EQ(b.at("Num-of-Weakly-Connected-Components"), 1);
    EXPECT_EQ(b.at("Num-of-Strongly-Connected-Components"), 1);
    EXPECT_EQ(b.at("Is-Biconnected"), 1);
    EXPECT_EQ(b.at("Nodes-to-Cut"), 2);
    EXPECT_EQ(b.at("In-Degree-Mean"), 1);
    EXPECT_EQ(b.at("In-Degree-Std"), 0);
    EXPECT_FALSE(b.flag("flag-Degenerate-Network"));
}

TEST(GraphFeatures, EmptyAndSingle) {
    for (const auto& who : {std::vector<std::string>{}, std::vector<std::string>{"A", "A"}}) {
        const auto b = graph_features(graph_of(who));
        EXPECT_EQ(b.values.size(), 23u);
        for (const auto& [n, v] : b.values)
            if (n != "Num-of-Nodes" && n != "Num-of-Weakly-Connected-Components" &&
                n != "Num-of-Strongly-Connected-Components")
                EXPECT_EQ(v, 0.0) << n;
        EXPECT_TRUE(b.flag("flag-Degenerate-Network"));
    }
}

TEST(GraphFeatures, PathBetweenness) {
    const auto b = graph_features(graph_of({"A", "B", "C"}));
    EXPECT_DOUBLE_EQ(b.at("Betweenness-Mean"), 1.0 / 6.0);
    EXPECT_EQ(b.at("Is-Biconnected"), 0);
    EXPECT_EQ(b.at("Nodes-to-Cut"), 1);
    EXPECT_EQ(b.at("Num-of-Strongly-Connected-Components"), 3);
}

TEST(GraphFeatures, NamesInOrder) {
    const auto b = graph_features(graph_of({"A", "B", "C", "D", "A"}));
    EXPECT_EQ(b.names(), graph_feature_names());
    EXPECT_EQ(graph_feature_names().size(), 23u);
}

TEST(BuildingBlocks, ConnectivityAndComponents) {
    // Two triangles sharing one node: connectivity 1.
    std::vector<std::vector<int>> bowtie = {{1, 2}, {0, 2}, {0, 1, 3, 4}, {2, 4}, {2, 3}};
    EXPECT_EQ(vertex_connectivity(bowtie), 1);
    std::vector<std::vector<int>> k4 = {{1, 2, 3}, {0, 2, 3}, {0, 1, 3}, {0, 1, 2}};
    EXPECT_EQ(vertex_connectivity(k4), 3);
    EXPECT_EQ(triangle_count(k4), 4u);
    const auto g = graph_of({"A", "B", "192.0.2.1", "C", "D"});
    EXPECT_EQ(weak_components(g).size(), 2u);
    EXPECT_EQ(strong_component_count(g), 4u);
}

// Random graphs against brute-force enumeration, plus relabeling and range checks.
TEST(NetworkProperties, OracleIsomorphismAndBounds) {
    std::mt19937_64 g(51);
    for (int c = 0; c < 300; ++c) {
        const int k = 1 + static_cast<int>(g() % 7);
        std::vector<int> seq(1 + g() % 15);
        for (auto& e : seq) e = g() % 9 == 0 ? -1 : static_cast<int>(g() % static_cast<std::uint64_t>(k));
        std::vector<std::string> who, relabeled;
        std::vector<int> perm(7);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), g);
        for (std::size_t i = 0; i < seq.size(); ++i) {
            who.push_back(seq[i] < 0 ? "192.0.2." + std::to_string(i + 1) : "e" + std::to_string(seq[i]));
            relabeled.push_back(seq[i] < 0 ? "10.0.0." + std::to_string(i + 1) : "z" + std::to_string(perm[seq[i]]));
        }
        const auto b = graph_features(graph_of(who));
        const auto expected = oracle::network(seq);
        for (const auto& [name, v] : b.values) EXPECT_EQ(v, expected.values.at(name)) << name << " case " << c;
        EXPECT_EQ(graph_features(graph_of(relabeled)).values, b.values);

        EXPECT_GE(b.at("Density"), 0.0);
        EXPECT_LE(b.at("Density"), 1.0);
        const auto g2 = graph_of(who);
        const auto adj = undirected_projection(g2);
        const auto comps = weak_components(g2);
        if (g2.node_count() > 1) {
            // Nodes-to-Cut never exceeds the smallest degree of some largest component.
            std::size_t largest = 0;
            for (const auto& comp : comps) largest = std::max(largest, comp.size());
            std::size_t bound = 0;
            for (const auto& comp : comps) {
                if (comp.size() != largest) continue;
                std::size_t min_deg = SIZE_MAX;
                for (int v : comp) min_deg = std::min(min_deg, adj[static_cast<std::size_t>(v)].size());
                bound = std::max(bound, min_deg);
            }
            EXPECT_LE(b.at("Nodes-to-Cut"), static_cast<double>(bound));
        }
    }
}
