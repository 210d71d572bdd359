#pragma once

#include <string>
#include <vector>

#include "arac/config.hpp"
#include "arac/rollout.hpp"

namespace arac {

struct RunResult {
    std::string dir;
    EvalReport final_eval;
    double best_eval = 0.0;
    int episodes_run = 0;
    long train_steps = 0;
    std::string metrics_path;
    std::string checkpoint_path;
};

// Full training run: rollouts against the scripted opponent, interleaved
// train steps, periodic greedy evaluation, metrics CSV and checkpoints in
// the run directory. Deterministic per (config, seed).
RunResult run_training(const RunConfig& cfg);

EvalReport evaluate_checkpoint(const RunConfig& cfg, const std::string& checkpoint_path,
                               const std::string& map_path, int episodes, uint64_t seed);

struct SelfPlayResult {
    std::string dir;
    std::vector<int> snapshot_episodes;          // archive points, every 100 episodes
    std::vector<double> winrate_vs_initial;      // one entry per archive point
    std::vector<std::vector<int>> wins;          // wins[i][j]: snapshot i beats j
    std::vector<std::vector<int>> draws;         // draws[i][j]
    int pair_episodes = 0;
};

// Opponent snapshot refreshed with the learner's parameters exactly every
// 100 episodes; snapshots archived at each refresh.
SelfPlayResult self_play(const RunConfig& cfg, const std::string& initial_checkpoint,
                         int eval_episodes_vs_initial, int pair_episodes);

struct CrossMapResult {
    std::vector<std::string> map_paths;
    std::vector<std::string> checkpoint_paths;
    std::vector<std::vector<double>> success;  // [test map][train checkpoint]
    std::string csv;
};

CrossMapResult cross_map(const RunConfig& cfg, const std::vector<std::string>& checkpoints,
                         const std::vector<std::string>& maps, int episodes, uint64_t seed);

// Gradient integrity over every tape primitive; returns the worst error.
struct GradCheckReport {
    std::vector<std::pair<std::string, double>> per_primitive;
    double worst = 0.0;
    std::string text() const;
};
GradCheckReport gradcheck_primitives(int draws, uint64_t seed);

constexpr int kSelfPlayRefreshEpisodes = 100;

}  // namespace arac
