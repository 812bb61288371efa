#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace rgm {

// Undirected simple graph on p nodes. Edge slots are numbered in
// lexicographic (j1 < j2) order: (0,1), (0,2), ..., (p-2,p-1).
class Graph {
  public:
    Graph() = default;
    explicit Graph(int p) : p_(p), adj_(static_cast<std::size_t>(p) * p, 0) {}

    static Graph complete(int p);
    static Graph from_adjacency(const Eigen::MatrixXi& adj);

    int p() const { return p_; }
    int n_slots() const { return p_ * (p_ - 1) / 2; }
    int n_edges() const;

    bool has(int i, int j) const { return adj_[idx(i, j)] != 0; }
    void set(int i, int j, bool on);
    void toggle(int i, int j) { set(i, j, !has(i, j)); }

    bool has_slot(int e) const;
    void set_slot(int e, bool on);

    std::vector<int> neighbors(int i) const;
    std::vector<int> common_neighbors(int i, int j) const;

    Eigen::MatrixXi adjacency() const;

    bool operator==(const Graph& other) const = default;

  private:
    std::size_t idx(int i, int j) const { return static_cast<std::size_t>(i) * p_ + j; }
    int p_ = 0;
    std::vector<std::uint8_t> adj_;
};

int edge_slot_count(int p);
std::pair<int, int> slot_pair(int p, int e);
int slot_index(int p, int i, int j);

// "a-b" labels for every slot in slot order.
std::vector<std::string> slot_labels(const std::vector<std::string>& node_names);

// Perfect elimination ordering by maximum cardinality search; empty when the
// graph is not decomposable (chordal).
std::vector<int> perfect_ordering(const Graph& g);
bool is_decomposable(const Graph& g);

}  // namespace rgm
