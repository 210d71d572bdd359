#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace arac {

// Undirected simple graph with node ids 0..n-1. Immutable once built.
class Graph {
  public:
    Graph(int node_count, std::vector<std::pair<int, int>> edges);

    int node_count() const { return n_; }
    const std::vector<std::pair<int, int>>& edges() const { return edges_; }

    // adjacent nodes of v in ascending id order
    const std::vector<int>& neighbors(int v) const;

    bool has_edge(int u, int v) const;
    int degree(int v) const;

  private:
    int n_;
    std::vector<std::pair<int, int>> edges_;  // canonical: u < v, sorted
    std::vector<std::vector<int>> adj_;
};

// All-pairs shortest-path hop counts. UNREACHABLE marks disconnected pairs.
class DistanceMatrix {
  public:
    static constexpr int kUnreachable = -1;

    explicit DistanceMatrix(const Graph& g);  // Floyd-Warshall

    int node_count() const { return n_; }
    int dist(int i, int j) const { return d_[static_cast<size_t>(i) * n_ + j]; }
    bool reachable(int i, int j) const { return dist(i, j) != kUnreachable; }
    // maximum finite entry (0 for a graph with no finite off-diagonal pairs)
    int diameter() const { return diameter_; }

  private:
    int n_;
    int diameter_;
    std::vector<int> d_;
};

// Map text format: line 1 "nodes <n>", then "edge <u> <v>" with u < v,
// '#' starts a comment. Writers emit edges sorted lexicographically.
Graph load_map(std::istream& in);
Graph load_map_file(const std::string& path);
std::string serialize_map(const Graph& g);
void save_map_file(const Graph& g, const std::string& path);
uint64_t map_hash(const Graph& g);

}  // namespace arac
