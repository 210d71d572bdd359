#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "arac/graph.hpp"
#include "arac/mat.hpp"
#include "arac/rng.hpp"
#include "arac/tape.hpp"

namespace arac {

enum class Scenario { Pursuit, Confrontation };
enum class Team { Ours, Theirs };

// Timeout also tags drawn outcomes (time limit hit, or both teams wiped
// in the same step).
enum class Winner { None, Ours, Opponent, Timeout };

struct ScenarioConfig {
    Scenario scenario = Scenario::Pursuit;
    int team_size = 2;  // m
    int initial_hp = 3;
    int attack_range = 2;
    int base_damage = 1;
    int max_steps = 128;
    double r_capture = 30.0;
    double r_kill = 3.0;
    double r_all_kill = 20.0;

    int num_ours() const { return team_size; }
    int num_theirs() const { return scenario == Scenario::Pursuit ? 1 : team_size; }
    int num_agents() const { return num_ours() + num_theirs(); }
    int cols_per_agent() const { return scenario == Scenario::Pursuit ? 1 : 4; }
    int feature_width() const { return num_agents() * cols_per_agent(); }
    void validate() const;
    std::string canonical() const;
};

struct ActionId {
    enum class Kind : uint8_t { Move, Attack };
    Kind kind = Kind::Move;
    int target = 0;  // node id for Move, agent id for Attack

    static ActionId move(int node) { return {Kind::Move, node}; }
    static ActionId attack(int agent) { return {Kind::Attack, agent}; }
    bool operator==(const ActionId&) const = default;
};

// Agents are indexed with our team first: 0..m-1 ours, then the opponents.
struct GameState {
    std::vector<int> positions;
    std::vector<int> hp;
    std::vector<uint8_t> alive;
    int step = 0;
    bool terminal = false;
    Winner winner = Winner::None;

    bool operator==(const GameState&) const = default;
};

struct DamageMatrix {
    int n = 0;
    std::vector<double> dmg;
    double at(int u, int v) const { return dmg[static_cast<size_t>(u) * n + v]; }
};

// n x f feature matrix plus the column layout that produced it.
struct FeatureMatrix {
    Mat values;
    int cols_per_agent = 1;
    std::vector<int> agent_order;  // agent id per column block
};

GameState reset(const ScenarioConfig& cfg, const Graph& g, const DistanceMatrix& d, Rng& rng);

// Deterministic ordering: moves ascending by node id, then attacks ascending
// by agent id. A dead agent gets a single NoOp (move to its own node).
std::vector<ActionId> legal_actions(const ScenarioConfig& cfg, const Graph& g,
                                    const DamageMatrix& dm, const GameState& s, int agent);

bool action_is_legal(const ScenarioConfig& cfg, const Graph& g, const DamageMatrix& dm,
                     const GameState& s, int agent, const ActionId& a);

struct StepResult {
    GameState next;
    double reward = 0.0;  // our team's scalar; the opponent's is its negation
    bool terminal = false;
};

// Simultaneous resolution: all moves apply, then all attack damage lands on
// post-move positions (attackers do not move). An agent killed this step
// still deals its damage.
StepResult step(const ScenarioConfig& cfg, const Graph& g, const DistanceMatrix& d,
                const DamageMatrix& dm, const GameState& s, const std::vector<ActionId>& ours,
                const std::vector<ActionId>& theirs);

DamageMatrix damage_potential(const Graph& g, const DistanceMatrix& d, const ScenarioConfig& cfg);

// Global state features, one column block per agent, acting team's block
// first. All entries in [0,1]; unreachable distances and dead agents'
// distance columns map to 1.
FeatureMatrix featurize(const GameState& s, const DistanceMatrix& d, const DamageMatrix& dm,
                        const ScenarioConfig& cfg, Team perspective = Team::Ours);

// Confrontation only: the same position with team roles exchanged.
GameState swap_teams(const ScenarioConfig& cfg, const GameState& s);

Team team_of(const ScenarioConfig& cfg, int agent);
bool is_success(const ScenarioConfig& cfg, const GameState& final_state);

// Precomputed per-map tables shared by everything that runs episodes.
struct World {
    Graph g;
    DistanceMatrix dist;
    DamageMatrix dmg;
    BoolMat adjacency;  // self-attention mask: adjacency with forced diagonal

    World(Graph graph, const ScenarioConfig& cfg);
};

// Episode log: header (map hash, cfg, seed), then one line per step.
std::string format_episode_header(uint64_t map_hash, const ScenarioConfig& cfg, uint64_t seed);
std::string format_episode_step(int t, const std::vector<ActionId>& ours,
                                const std::vector<ActionId>& theirs, double reward);

}  // namespace arac
