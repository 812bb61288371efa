#include "rgm/graph.hpp"

#include <algorithm>

#include "rgm/error.hpp"

namespace rgm {

Graph Graph::complete(int p) {
    Graph g(p);
    for (int i = 0; i < p; ++i)
        for (int j = i + 1; j < p; ++j) g.set(i, j, true);
    return g;
}

Graph Graph::from_adjacency(const Eigen::MatrixXi& adj) {
    if (adj.rows() != adj.cols()) throw ValidationError("adjacency matrix must be square");
    const int p = static_cast<int>(adj.rows());
    Graph g(p);
    for (int i = 0; i < p; ++i) {
        if (adj(i, i) != 0) throw ValidationError("adjacency matrix has a self-loop");
        for (int j = i + 1; j < p; ++j) {
            if (adj(i, j) != adj(j, i)) throw ValidationError("adjacency matrix is not symmetric");
            g.set(i, j, adj(i, j) != 0);
        }
    }
    return g;
}

int Graph::n_edges() const {
    int n = 0;
    for (int i = 0; i < p_; ++i)
        for (int j = i + 1; j < p_; ++j) n += has(i, j);
    return n;
}

void Graph::set(int i, int j, bool on) {
    if (i == j) throw ValidationError("graph: self-loops are not allowed");
    adj_[idx(i, j)] = adj_[idx(j, i)] = on ? 1 : 0;
}

bool Graph::has_slot(int e) const {
    auto [i, j] = slot_pair(p_, e);
    return has(i, j);
}

void Graph::set_slot(int e, bool on) {
    auto [i, j] = slot_pair(p_, e);
    set(i, j, on);
}

std::vector<int> Graph::neighbors(int i) const {
    std::vector<int> out;
    for (int j = 0; j < p_; ++j)
        if (j != i && has(i, j)) out.push_back(j);
    return out;
}

std::vector<int> Graph::common_neighbors(int i, int j) const {
    std::vector<int> out;
    for (int s = 0; s < p_; ++s)
        if (s != i && s != j && has(i, s) && has(j, s)) out.push_back(s);
    return out;
}

Eigen::MatrixXi Graph::adjacency() const {
    Eigen::MatrixXi a(p_, p_);
    for (int i = 0; i < p_; ++i)
        for (int j = 0; j < p_; ++j) a(i, j) = adj_[idx(i, j)];
    return a;
}

int edge_slot_count(int p) { return p * (p - 1) / 2; }

std::pair<int, int> slot_pair(int p, int e) {
    int i = 0;
    int row = p - 1;
    while (e >= row) {
        e -= row;
        ++i;
        --row;
    }
    return {i, i + 1 + e};
}

int slot_index(int p, int i, int j) {
    if (i > j) std::swap(i, j);
    return i * (2 * p - i - 1) / 2 + (j - i - 1);
}

std::vector<std::string> slot_labels(const std::vector<std::string>& node_names) {
    const int p = static_cast<int>(node_names.size());
    std::vector<std::string> out;
    for (int e = 0; e < edge_slot_count(p); ++e) {
        auto [i, j] = slot_pair(p, e);
        out.push_back(node_names[i] + "-" + node_names[j]);
    }
    return out;
}

std::vector<int> perfect_ordering(const Graph& g) {
    const int p = g.p();
    std::vector<int> order;
    std::vector<int> weight(p, 0);
    std::vector<bool> numbered(p, false);
    for (int step = 0; step < p; ++step) {
        int best = -1;
        for (int v = 0; v < p; ++v)
            if (!numbered[v] && (best < 0 || weight[v] > weight[best])) best = v;
        numbered[best] = true;
        order.push_back(best);
        for (int v = 0; v < p; ++v)
            if (!numbered[v] && g.has(best, v)) ++weight[v];
    }
    // MCS order is perfect iff the earlier neighbours of every vertex form a clique.
    for (int t = 0; t < p; ++t) {
        std::vector<int> earlier;
        for (int s = 0; s < t; ++s)
            if (g.has(order[t], order[s])) earlier.push_back(order[s]);
        for (std::size_t a = 0; a < earlier.size(); ++a)
            for (std::size_t b = a + 1; b < earlier.size(); ++b)
                if (!g.has(earlier[a], earlier[b])) return {};
    }
    return order;
}

bool is_decomposable(const Graph& g) { return g.p() == 0 || !perfect_ordering(g).empty(); }

}  // namespace rgm
