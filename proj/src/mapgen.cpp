#include "arac/mapgen.hpp"

#include <set>
#include <vector>

#include "arac/errors.hpp"
#include "arac/rng.hpp"

namespace arac {

MapKind map_kind_from_string(const std::string& s) {
    if (s == "grid") return MapKind::Grid;
    if (s == "ring") return MapKind::Ring;
    if (s == "tree") return MapKind::Tree;
    if (s == "random") return MapKind::Random;
    throw ConfigError("unknown map kind: " + s);
}

Graph generate_map(MapKind kind, int size, uint64_t seed) {
    if (size < 2) throw ConfigError("map size must be >= 2");
    std::vector<std::pair<int, int>> edges;
    switch (kind) {
        case MapKind::Grid: {
            const int side = size;
            const int n = side * side;
            for (int r = 0; r < side; ++r)
                for (int c = 0; c < side; ++c) {
                    const int v = r * side + c;
                    if (c + 1 < side) edges.emplace_back(v, v + 1);
                    if (r + 1 < side) edges.emplace_back(v, v + side);
                }
            return Graph(n, std::move(edges));
        }
        case MapKind::Ring: {
            for (int v = 0; v + 1 < size; ++v) edges.emplace_back(v, v + 1);
            edges.emplace_back(0, size - 1);
            return Graph(size, std::move(edges));
        }
        case MapKind::Tree: {
            Rng rng(seed);
            for (int v = 1; v < size; ++v) edges.emplace_back(rng.next_int(v), v);
            return Graph(size, std::move(edges));
        }
        case MapKind::Random: {
            Rng rng(seed);
            std::set<std::pair<int, int>> have;
            for (int v = 1; v < size; ++v) have.insert({rng.next_int(v), v});  // spanning tree
            const int extra = size / 4;
            int added = 0, guard = 0;
            while (added < extra && guard < 100 * size) {
                ++guard;
                int u = rng.next_int(size), v = rng.next_int(size);
                if (u == v) continue;
                if (u > v) std::swap(u, v);
                if (have.insert({u, v}).second) ++added;
            }
            edges.assign(have.begin(), have.end());
            return Graph(size, std::move(edges));
        }
    }
    throw ConfigError("unreachable map kind");
}

}  // namespace arac
