#pragma once

#include <string>

#include "arac/graph.hpp"

namespace arac {

enum class MapKind { Grid, Ring, Tree, Random };

MapKind map_kind_from_string(const std::string& s);

// Connected graph, deterministic per seed. Grid interprets size as the side
// length; the others as the node count.
Graph generate_map(MapKind kind, int size, uint64_t seed);

}  // namespace arac
