#include "wikisustain/network.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <map>
#include <queue>
#include <set>
#include <stdexcept>

#include "wikisustain/stats.hpp"

namespace wikisustain::network {

EditGraph::EditGraph(std::vector<std::string> names) : names_(std::move(names)) {
    if (!std::is_sorted(names_.begin(), names_.end())) throw std::invalid_argument("node names must be sorted");
    out_.resize(names_.size());
    in_.resize(names_.size());
}

bool EditGraph::has_edge(int from, int to) const {
    const auto& o = out(from);
    return std::binary_search(o.begin(), o.end(), to);
}

void EditGraph::add_edge(int from, int to) {
    if (from == to) return;
    auto& o = out_[static_cast<std::size_t>(from)];
    auto pos = std::lower_bound(o.begin(), o.end(), to);
    if (pos != o.end() && *pos == to) return;
    o.insert(pos, to);
    auto& i = in_[static_cast<std::size_t>(to)];
    i.insert(std::lower_bound(i.begin(), i.end(), from), from);
    ++edges_;
}

int EditGraph::index_of(const std::string& name) const {
    auto it = std::lower_bound(names_.begin(), names_.end(), name);
    if (it == names_.end() || *it != name) return -1;
    return static_cast<int>(it - names_.begin());
}

void EditGraph::write_edge_list(std::ostream& out) const {
    for (std::size_t v = 0; v < names_.size(); ++v)
        for (int w : out_[v]) out << names_[v] << '\t' << names_[static_cast<std::size_t>(w)] << '\n';
}

EditGraph build_edit_graph(std::span<const ingest::RevisionRecord> revisions) {
    std::set<std::string> names;
    for (const auto& r : revisions)
        if (r.editor.is_registered()) names.insert(r.editor.id());
    EditGraph g(std::vector<std::string>(names.begin(), names.end()));
    for (std::size_t i = 1; i < revisions.size(); ++i) {
        const auto& a = revisions[i - 1].editor;
        const auto& b = revisions[i].editor;
        if (a.is_anonymous() || b.is_anonymous()) continue;
        g.add_edge(g.index_of(a.id()), g.index_of(b.id()));
    }
    return g;
}

EditGraph build_edit_graph(const features::WindowedHistory& w) { return build_edit_graph(w.article_revisions); }

std::vector<std::vector<int>> undirected_projection(const EditGraph& g) {
    std::vector<std::vector<int>> adj(g.node_count());
    for (std::size_t v = 0; v < g.node_count(); ++v) {
        const auto vi = static_cast<int>(v);
        std::vector<int> merged;
        std::set_union(g.out(vi).begin(), g.out(vi).end(), g.in(vi).begin(), g.in(vi).end(),
                       std::back_inserter(merged));
        adj[v] = std::move(merged);
    }
    return adj;
}

std::vector<std::vector<int>> weak_components(const EditGraph& g) {
    const auto adj = undirected_projection(g);
    std::vector<int> comp(adj.size(), -1);
    std::vector<std::vector<int>> out;
    for (std::size_t s = 0; s < adj.size(); ++s) {
        if (comp[s] >= 0) continue;
        std::vector<int> members{static_cast<int>(s)};
        comp[s] = static_cast<int>(out.size());
        for (std::size_t k = 0; k < members.size(); ++k)
            for (int w : adj[static_cast<std::size_t>(members[k])])
                if (comp[static_cast<std::size_t>(w)] < 0) {
                    comp[static_cast<std::size_t>(w)] = static_cast<int>(out.size());
                    members.push_back(w);
                }
        std::sort(members.begin(), members.end());
        out.push_back(std::move(members));
    }
    return out;
}

std::size_t strong_component_count(const EditGraph& g) {
    // Kosaraju, iterative.
    const auto n = g.node_count();
    std::vector<char> seen(n, 0);
    std::vector<int> order;
    for (std::size_t s = 0; s < n; ++s) {
        if (seen[s]) continue;
        std::vector<std::pair<int, std::size_t>> stack{{static_cast<int>(s), 0}};
        seen[s] = 1;
        while (!stack.empty()) {
            auto& [v, next] = stack.back();
            const auto& o = g.out(v);
            if (next < o.size()) {
                const int w = o[next++];
                if (!seen[static_cast<std::size_t>(w)]) {
                    seen[static_cast<std::size_t>(w)] = 1;
                    stack.emplace_back(w, 0);
                }
            } else {
                order.push_back(v);
                stack.pop_back();
            }
        }
    }
    std::vector<char> assigned(n, 0);
    std::size_t count = 0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if (assigned[static_cast<std::size_t>(*it)]) continue;
        ++count;
        std::vector<int> stack{*it};
        assigned[static_cast<std::size_t>(*it)] = 1;
        while (!stack.empty()) {
            const int v = stack.back();
            stack.pop_back();
            for (int w : g.in(v))
                if (!assigned[static_cast<std::size_t>(w)]) {
                    assigned[static_cast<std::size_t>(w)] = 1;
                    stack.push_back(w);
                }
        }
    }
    return count;
}

std::size_t triangle_count(const std::vector<std::vector<int>>& adj) {
    std::size_t t = 0;
    for (std::size_t a = 0; a < adj.size(); ++a)
        for (int b : adj[a]) {
            if (b <= static_cast<int>(a)) continue;
            const auto& nb = adj[static_cast<std::size_t>(b)];
            for (int c : adj[a])
                if (c > b && std::binary_search(nb.begin(), nb.end(), c)) ++t;
        }
    return t;
}

std::vector<double> betweenness(const EditGraph& g) {
    const auto n = g.node_count();
    // Extended precision with one final rounding keeps small graphs exact to the last bit.
    std::vector<long double> bc(n, 0.0L), sigma(n), delta(n);
    std::vector<int> dist(n);
    std::vector<std::vector<int>> preds(n);
    for (std::size_t s = 0; s < n; ++s) {
        std::fill(dist.begin(), dist.end(), -1);
        std::fill(sigma.begin(), sigma.end(), 0.0L);
        std::fill(delta.begin(), delta.end(), 0.0L);
        for (auto& p : preds) p.clear();
        std::vector<int> order;
        std::queue<int> q;
        dist[s] = 0;
        sigma[s] = 1.0L;
        q.push(static_cast<int>(s));
        while (!q.empty()) {
            const int v = q.front();
            q.pop();
            order.push_back(v);
            for (int w : g.out(v)) {
                const auto wi = static_cast<std::size_t>(w);
                if (dist[wi] < 0) {
                    dist[wi] = dist[static_cast<std::size_t>(v)] + 1;
                    q.push(w);
                }
                if (dist[wi] == dist[static_cast<std::size_t>(v)] + 1) {
                    sigma[wi] += sigma[static_cast<std::size_t>(v)];
                    preds[wi].push_back(v);
                }
            }
        }
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            const auto w = static_cast<std::size_t>(*it);
            for (int v : preds[w]) {
                const auto vi = static_cast<std::size_t>(v);
                delta[vi] += sigma[vi] / sigma[w] * (1.0L + delta[w]);
            }
            if (w != s) bc[w] += delta[w];
        }
    }
    std::vector<double> out(n, 0.0);
    const long double scale = n > 2 ? static_cast<long double>((n - 1) * (n - 2)) : 1.0L;
    for (std::size_t v = 0; v < n; ++v) out[v] = static_cast<double>(bc[v] / scale);
    return out;
}

std::vector<double> closeness(const EditGraph& g) {
    const auto n = g.node_count();
    std::vector<double> out(n, 0.0);
    if (n < 2) return out;
    std::vector<int> dist(n);
    for (std::size_t s = 0; s < n; ++s) {
        std::fill(dist.begin(), dist.end(), -1);
        std::queue<int> q;
        dist[s] = 0;
        q.push(static_cast<int>(s));
        long double h = 0.0L;
        while (!q.empty()) {
            const int v = q.front();
            q.pop();
            for (int w : g.out(v)) {
                const auto wi = static_cast<std::size_t>(w);
                if (dist[wi] >= 0) continue;
                dist[wi] = dist[static_cast<std::size_t>(v)] + 1;
                h += 1.0L / dist[wi];
                q.push(w);
            }
        }
        out[s] = static_cast<double>(h / static_cast<long double>(n - 1));
    }
    return out;
}

namespace {

/// Unit-capacity max flow on the split-node graph; counts vertex-disjoint s-t paths.
class SplitFlow {
public:
    explicit SplitFlow(const std::vector<std::vector<int>>& adj) : n_(adj.size()), head_(2 * adj.size(), -1) {
        for (std::size_t v = 0; v < n_; ++v) {
            add(in(v), out(v), 1);
            for (int w : adj[v]) add(out(v), in(static_cast<std::size_t>(w)), static_cast<int>(n_));
        }
    }

    int local(std::size_t s, std::size_t t) {
        for (std::size_t e = 0; e < cap_.size(); ++e) flow_[e] = 0;
        const auto src = out(s), dst = in(t);
        int total = 0;
        std::vector<int> via(head_.size());
        while (true) {
            std::fill(via.begin(), via.end(), -1);
            std::queue<std::size_t> q;
            q.push(src);
            via[src] = -2;
            while (!q.empty() && via[dst] == -1) {
                const auto v = q.front();
                q.pop();
                for (int e = head_[v]; e >= 0; e = next_[static_cast<std::size_t>(e)]) {
                    const auto ei = static_cast<std::size_t>(e);
                    const auto w = to_[ei];
                    if (via[w] != -1 || cap_[ei] - flow_[ei] <= 0) continue;
                    via[w] = e;
                    q.push(w);
                }
            }
            if (via[dst] == -1) return total;
            for (auto v = dst; v != src;) {
                const auto e = static_cast<std::size_t>(via[v]);
                flow_[e] += 1;
                flow_[e ^ 1U] -= 1;
                v = to_[e ^ 1U];
            }
            ++total;
        }
    }

private:
    std::size_t in(std::size_t v) const { return 2 * v; }
    std::size_t out(std::size_t v) const { return 2 * v + 1; }
    void add(std::size_t a, std::size_t b, int c) {
        for (auto [x, y, cc] : {std::tuple{a, b, c}, std::tuple{b, a, 0}}) {
            to_.push_back(y);
            cap_.push_back(cc);
            flow_.push_back(0);
            next_.push_back(head_[x]);
            head_[x] = static_cast<int>(to_.size() - 1);
        }
    }

    std::size_t n_;
    std::vector<int> head_;
    std::vector<std::size_t> to_;
    std::vector<int> cap_, flow_, next_;
};

}  // namespace

int vertex_connectivity(const std::vector<std::vector<int>>& adj) {
    const auto n = adj.size();
    if (n < 2) return 0;
    std::size_t v = 0;
    for (std::size_t u = 1; u < n; ++u)
        if (adj[u].size() < adj[v].size()) v = u;
    int k = static_cast<int>(adj[v].size());
    SplitFlow flow(adj);
    auto adjacent = [&](std::size_t a, std::size_t b) {
        return std::binary_search(adj[a].begin(), adj[a].end(), static_cast<int>(b));
    };
    for (std::size_t w = 0; w < n; ++w)
        if (w != v && !adjacent(v, w)) k = std::min(k, flow.local(v, w));
    const auto& nb = adj[v];
    for (std::size_t i = 0; i < nb.size(); ++i)
        for (std::size_t j = i + 1; j < nb.size(); ++j) {
            const auto x = static_cast<std::size_t>(nb[i]), y = static_cast<std::size_t>(nb[j]);
            if (!adjacent(x, y)) k = std::min(k, flow.local(x, y));
        }
    return k;
}

std::vector<std::string> graph_feature_names() {
    std::vector<std::string> names = {"Num-of-Nodes",
                                      "Num-of-Edges",
                                      "Num-of-Triangles",
                                      "Density",
                                      "Num-of-Weakly-Connected-Components",
                                      "Num-of-Strongly-Connected-Components",
                                      "Is-Biconnected",
                                      "Nodes-to-Cut"};
    for (const char* metric : {"In-Degree", "Out-Degree", "Degree-Centrality", "Betweenness", "Closeness"})
        for (const char* agg : {"Mean", "Median", "Std"}) names.push_back(std::string(metric) + "-" + agg);
    return names;
}

features::FeatureBlock graph_features(const EditGraph& g) {
    const auto n = g.node_count();
    const auto adj = undirected_projection(g);
    const auto comps = weak_components(g);

    features::FeatureBlock b;
    b.add("Num-of-Nodes", static_cast<double>(n));
    b.add("Num-of-Edges", static_cast<double>(g.edge_count()));
    b.add("Num-of-Triangles", static_cast<double>(triangle_count(adj)));
    b.add("Density", n < 2 ? 0.0
                           : static_cast<double>(g.edge_count()) / (static_cast<double>(n) * static_cast<double>(n - 1)));
    b.add("Num-of-Weakly-Connected-Components", static_cast<double>(comps.size()));
    b.add("Num-of-Strongly-Connected-Components", static_cast<double>(strong_component_count(g)));

    const bool degenerate = n <= 1;
    if (degenerate) {
        b.add("Is-Biconnected", 0.0);
        b.add("Nodes-to-Cut", 0.0);
        const auto names = graph_feature_names();
        for (std::size_t i = 8; i < names.size(); ++i) b.add(names[i], 0.0);
        b.add_flag("flag-Degenerate-Network", true);
        return b;
    }

    // Largest component by node count, then edge count; among equal candidates the
    // highest connectivity, so the choice does not depend on editor names.
    std::size_t best_nodes = 0, best_edges = 0;
    int best_k = -1;
    for (const auto& c : comps) {
        std::size_t edges = 0;
        for (int v : c) edges += adj[static_cast<std::size_t>(v)].size();
        edges /= 2;
        if (c.size() < best_nodes || (c.size() == best_nodes && edges < best_edges)) continue;
        std::vector<int> local(n, -1);
        for (std::size_t i = 0; i < c.size(); ++i) local[static_cast<std::size_t>(c[i])] = static_cast<int>(i);
        std::vector<std::vector<int>> sub(c.size());
        for (std::size_t i = 0; i < c.size(); ++i) {
            for (int w : adj[static_cast<std::size_t>(c[i])]) sub[i].push_back(local[static_cast<std::size_t>(w)]);
            std::sort(sub[i].begin(), sub[i].end());
        }
        const int k = vertex_connectivity(sub);
        if (c.size() > best_nodes || edges > best_edges || k > best_k) {
            best_nodes = c.size();
            best_edges = edges;
            best_k = k;
        }
    }
    const bool biconnected = best_nodes == 2 || (best_nodes >= 3 && best_k >= 2);
    b.add("Is-Biconnected", biconnected ? 1.0 : 0.0);
    b.add("Nodes-to-Cut", static_cast<double>(best_k));

    std::vector<double> indeg(n), outdeg(n), degc(n);
    for (std::size_t v = 0; v < n; ++v) {
        indeg[v] = static_cast<double>(g.in(static_cast<int>(v)).size());
        outdeg[v] = static_cast<double>(g.out(static_cast<int>(v)).size());
        degc[v] = (indeg[v] + outdeg[v]) / static_cast<double>(n - 1);
    }
    const auto bc = betweenness(g);
    const auto cc = closeness(g);
    const auto names = graph_feature_names();
    std::size_t col = 8;
    const std::array<const std::vector<double>*, 5> series_list = {&indeg, &outdeg, &degc, &bc, &cc};
    for (const auto* series : series_list) {
        b.add(names[col++], stats::mean(*series));
        b.add(names[col++], stats::median(*series));
        b.add(names[col++], stats::stddev(*series));
    }
    b.add_flag("flag-Degenerate-Network", false);
    return b;
}

}  // namespace wikisustain::network
