#pragma once

#include <functional>
#include <memory>
#include <string>

#include "arac/trainer.hpp"

namespace arac {

// Produces the team's joint action (engine agent order within the team).
using TeamPolicy = std::function<std::vector<ActionId>(const GameState&, Rng&)>;

// Training/eval opponents: the evader heuristic in pursuit, the scripted
// attack-and-move policy in confrontation.
TeamPolicy scripted_opponent(const ScenarioConfig& cfg, const World& w);

// Network policy for either side; greedy takes the argmax, otherwise samples.
TeamPolicy net_team_policy(const ScenarioConfig& cfg, const World& w,
                           std::shared_ptr<const ParameterSet> ps, Team side, bool greedy);

// Uniform over legal actions, for fuzzing.
TeamPolicy random_team_policy(const ScenarioConfig& cfg, const World& w, Team side);

// Our team follows the scripted reference (the REF baseline).
TeamPolicy reference_team_policy(const ScenarioConfig& cfg, const World& w);

struct EpisodeOutcome {
    GameState final_state;
    double our_return = 0.0;
    int steps = 0;
    bool success = false;
};

EpisodeOutcome run_episode(const ScenarioConfig& cfg, const World& w, const TeamPolicy& ours,
                           const TeamPolicy& theirs, Rng& rng,
                           std::vector<Transition>* sink = nullptr, std::string* log = nullptr,
                           uint64_t log_seed = 0);

struct EvalReport {
    double success_rate = 0.0;
    int episodes = 0;
    uint64_t seed = 0;
    int wins = 0, losses = 0, draws = 0;
    std::vector<uint8_t> outcomes;  // 1 = success per episode

    // draws count half, so identical policies score 0.5 in expectation
    double win_score() const {
        return episodes == 0 ? 0.0 : (wins + 0.5 * draws) / static_cast<double>(episodes);
    }
    std::string summary() const;
};

// Per-episode RNG streams derived from (seed, episode index).
EvalReport evaluate_teams(const ScenarioConfig& cfg, const World& w, const TeamPolicy& ours,
                          const TeamPolicy& theirs, int episodes, uint64_t seed);

// Greedy policy against the scripted opponent.
EvalReport evaluate_policy(const ScenarioConfig& cfg, const World& w, const ParameterSet& ps,
                           int episodes, uint64_t seed);

// Greedy net vs greedy net (confrontation).
EvalReport evaluate_match(const ScenarioConfig& cfg, const World& w, const ParameterSet& ours,
                          const ParameterSet& theirs, int episodes, uint64_t seed);

}  // namespace arac
