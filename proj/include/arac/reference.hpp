#pragma once

#include <vector>

#include "arac/game.hpp"

namespace arac {

// Probabilities aligned with the legal_actions order for the same agent.
struct ReferenceDistribution {
    std::vector<double> probs;

    int onehot_index() const {
        for (size_t i = 0; i < probs.size(); ++i)
            if (probs[i] == 1.0) return static_cast<int>(i);
        return -1;
    }
};

// Shortest-path chase: one-hot on the neighbor closest to the evader,
// ties to the lowest node id. Loops forever against a mirroring evader on
// cyclic maps.
ReferenceDistribution pursuit_reference(const ScenarioConfig& cfg, const Graph& g,
                                        const DamageMatrix& dm, const GameState& s, int agent,
                                        const DistanceMatrix& d);

// Attack the closest living enemy inside sensing range 2, otherwise move
// along a shortest path toward the nearest living enemy.
ReferenceDistribution confrontation_reference(const ScenarioConfig& cfg, const Graph& g,
                                              const DamageMatrix& dm, const GameState& s,
                                              int agent, const DistanceMatrix& d);

// Training opponent for pursuit: the evader moves to the neighbor
// maximizing its minimum distance to the pursuers, ties to the lowest id.
ActionId evader_heuristic(const ScenarioConfig& cfg, const Graph& g, const GameState& s,
                          const DistanceMatrix& d);

}  // namespace arac
