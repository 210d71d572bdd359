#include "arac/graph.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "arac/errors.hpp"
#include "arac/rng.hpp"

namespace arac {

Graph::Graph(int node_count, std::vector<std::pair<int, int>> edges) : n_(node_count) {
    if (n_ <= 0) throw MalformedMap("node count must be positive");
    std::set<std::pair<int, int>> seen;
    for (auto [u, v] : edges) {
        if (u == v) throw MalformedMap("self-loop edge " + std::to_string(u));
        if (u > v) std::swap(u, v);
        if (u < 0 || v >= n_)
            throw MalformedMap("edge endpoint out of range: " + std::to_string(u) + "-" +
                               std::to_string(v));
        if (!seen.insert({u, v}).second)
            throw MalformedMap("duplicate edge " + std::to_string(u) + "-" + std::to_string(v));
    }
    edges_.assign(seen.begin(), seen.end());
    adj_.resize(n_);
    for (auto [u, v] : edges_) {
        adj_[u].push_back(v);
        adj_[v].push_back(u);
    }
    for (auto& a : adj_) std::sort(a.begin(), a.end());
}

const std::vector<int>& Graph::neighbors(int v) const {
    if (v < 0 || v >= n_) throw NodeOutOfRange("node " + std::to_string(v));
    return adj_[v];
}

bool Graph::has_edge(int u, int v) const {
    if (u > v) std::swap(u, v);
    return std::binary_search(edges_.begin(), edges_.end(), std::make_pair(u, v));
}

int Graph::degree(int v) const { return static_cast<int>(neighbors(v).size()); }

DistanceMatrix::DistanceMatrix(const Graph& g) : n_(g.node_count()) {
    const int inf = n_ + 1;  // internal bound, converted to the sentinel at the end
    d_.assign(static_cast<size_t>(n_) * n_, inf);
    for (int i = 0; i < n_; ++i) d_[static_cast<size_t>(i) * n_ + i] = 0;
    for (auto [u, v] : g.edges()) {
        d_[static_cast<size_t>(u) * n_ + v] = 1;
        d_[static_cast<size_t>(v) * n_ + u] = 1;
    }
    for (int k = 0; k < n_; ++k) {
        const int* dk = d_.data() + static_cast<size_t>(k) * n_;
        for (int i = 0; i < n_; ++i) {
            int* di = d_.data() + static_cast<size_t>(i) * n_;
            const int dik = di[k];
            if (dik >= inf) continue;
            for (int j = 0; j < n_; ++j) {
                const int via = dik + dk[j];
                if (via < di[j]) di[j] = via;
            }
        }
    }
    diameter_ = 0;
    for (auto& x : d_) {
        if (x >= inf)
            x = kUnreachable;
        else
            diameter_ = std::max(diameter_, x);
    }
}

Graph load_map(std::istream& in) {
    std::string line;
    int n = -1;
    std::vector<std::pair<int, int>> edges;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string tok;
        if (!(ls >> tok)) continue;  // blank
        if (tok == "nodes") {
            if (n != -1) throw MalformedMap("repeated nodes line (line " + std::to_string(lineno) + ")");
            if (!(ls >> n) || n <= 0) throw MalformedMap("bad node count (line " + std::to_string(lineno) + ")");
        } else if (tok == "edge") {
            if (n == -1) throw MalformedMap("edge before nodes line (line " + std::to_string(lineno) + ")");
            int u, v;
            if (!(ls >> u >> v)) throw MalformedMap("bad edge tokens (line " + std::to_string(lineno) + ")");
            if (u >= v) throw MalformedMap("edge requires u < v (line " + std::to_string(lineno) + ")");
            if (u < 0 || v >= n) throw MalformedMap("edge endpoint out of range (line " + std::to_string(lineno) + ")");
            edges.emplace_back(u, v);
        } else {
            throw MalformedMap("unknown token '" + tok + "' (line " + std::to_string(lineno) + ")");
        }
        std::string rest;
        if (ls >> rest) throw MalformedMap("trailing tokens (line " + std::to_string(lineno) + ")");
    }
    if (n == -1) throw MalformedMap("missing nodes line");
    return Graph(n, std::move(edges));
}

Graph load_map_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw MalformedMap("cannot open map file: " + path);
    return load_map(f);
}

std::string serialize_map(const Graph& g) {
    std::ostringstream os;
    os << "nodes " << g.node_count() << "\n";
    for (auto [u, v] : g.edges()) os << "edge " << u << " " << v << "\n";
    return os.str();
}

void save_map_file(const Graph& g, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot write map file: " + path);
    f << serialize_map(g);
}

uint64_t map_hash(const Graph& g) {
    const std::string s = serialize_map(g);
    return fnv1a64(s.data(), s.size());
}

}  // namespace arac
