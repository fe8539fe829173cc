#pragma once

#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "wikisustain/features.hpp"
#include "wikisustain/ingest.hpp"

namespace wikisustain::network {

/// Simple directed graph over registered editors. Node ids index `names`, which is sorted.
class EditGraph {
public:
    EditGraph() = default;
    explicit EditGraph(std::vector<std::string> names);

    std::size_t node_count() const { return names_.size(); }
    std::size_t edge_count() const { return edges_; }
    const std::vector<std::string>& names() const { return names_; }
    const std::vector<int>& out(int v) const { return out_[static_cast<std::size_t>(v)]; }
    const std::vector<int>& in(int v) const { return in_[static_cast<std::size_t>(v)]; }
    bool has_edge(int from, int to) const;

    /// Adds from -> to unless it is a self-loop or already present.
    void add_edge(int from, int to);
    int index_of(const std::string& name) const;

    /// One "src<TAB>dst" line per edge.
    void write_edge_list(std::ostream& out) const;

private:
    std::vector<std::string> names_;
    std::vector<std::vector<int>> out_, in_;
    std::size_t edges_ = 0;
};

/// Edges run from the editor of a revision to the editor of the next one. Anonymous
/// revisions break the chain.
EditGraph build_edit_graph(std::span<const ingest::RevisionRecord> revisions);
EditGraph build_edit_graph(const features::WindowedHistory& w);

std::vector<std::string> graph_feature_names();

/// The 23 graph values. "flag-Degenerate-Network" is set for graphs with at most one node.
features::FeatureBlock graph_features(const EditGraph& g);

// Building blocks, exposed for tests.

/// Undirected simple adjacency of the projection.
std::vector<std::vector<int>> undirected_projection(const EditGraph& g);
/// Weakly connected components, each sorted, in order of smallest member.
std::vector<std::vector<int>> weak_components(const EditGraph& g);
std::size_t strong_component_count(const EditGraph& g);
std::size_t triangle_count(const std::vector<std::vector<int>>& undirected);
/// Brandes betweenness on directed shortest paths, normalized by (n-1)(n-2).
std::vector<double> betweenness(const EditGraph& g);
/// Harmonic closeness over outgoing distances, normalized by n-1.
std::vector<double> closeness(const EditGraph& g);
/// Vertex connectivity of a connected undirected graph; n-1 when it is complete.
int vertex_connectivity(const std::vector<std::vector<int>>& undirected);

}  // namespace wikisustain::network
