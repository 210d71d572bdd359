#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "arac/experiment.hpp"
#include "arac/mapgen.hpp"
#include "arac/tabular.hpp"

using namespace arac;

namespace {

RunConfig config_with_overrides(const std::string& path,
                                const std::vector<std::string>& overrides) {
    RunConfig cfg = path.empty() ? RunConfig{} : parse_run_config_file(path);
    for (const auto& kv : overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("override must be key=value: " + kv);
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"graph adversarial games: training, evaluation and verification"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;

    auto add_config_opts = [&](CLI::App* cmd) {
        cmd->add_option("-c,--config", config_path, "flat key=value config file");
        cmd->add_option("-s,--set", overrides, "config overrides, key=value");
    };

    auto* cmd_train = app.add_subcommand("train", "run a training experiment");
    add_config_opts(cmd_train);

    auto* cmd_eval = app.add_subcommand("eval", "evaluate a checkpoint on a map");
    std::string ckpt, map_path;
    int episodes = 100;
    uint64_t seed = 1;
    add_config_opts(cmd_eval);
    cmd_eval->add_option("--checkpoint", ckpt, "checkpoint file")->required();
    cmd_eval->add_option("--map", map_path, "map file (defaults to the config's)");
    cmd_eval->add_option("--episodes", episodes, "evaluation episodes");
    cmd_eval->add_option("--seed", seed, "evaluation seed");

    auto* cmd_selfplay = app.add_subcommand("selfplay", "confrontation self-play");
    std::string pi0;
    int sp_eval_episodes = 500, sp_pair_episodes = 100;
    add_config_opts(cmd_selfplay);
    cmd_selfplay->add_option("--initial", pi0, "starting checkpoint (fresh network if omitted)");
    cmd_selfplay->add_option("--eval-episodes", sp_eval_episodes,
                             "episodes per learner-vs-initial evaluation");
    cmd_selfplay->add_option("--pair-episodes", sp_pair_episodes,
                             "episodes per pairwise snapshot match");

    auto* cmd_crossmap = app.add_subcommand("crossmap", "cross-map success matrix");
    std::vector<std::string> cm_ckpts, cm_maps;
    int cm_episodes = 100;
    uint64_t cm_seed = 1;
    add_config_opts(cmd_crossmap);
    cmd_crossmap->add_option("--checkpoints", cm_ckpts, "per-map checkpoints")->required();
    cmd_crossmap->add_option("--maps", cm_maps, "map files")->required();
    cmd_crossmap->add_option("--episodes", cm_episodes, "episodes per cell");
    cmd_crossmap->add_option("--seed", cm_seed, "seed");
    std::string cm_out;
    cmd_crossmap->add_option("--out", cm_out, "CSV output path");

    auto* cmd_genmap = app.add_subcommand("genmap", "generate a map file");
    std::string gm_kind = "random", gm_out;
    int gm_size = 20;
    uint64_t gm_seed = 1;
    cmd_genmap->add_option("--kind", gm_kind, "grid | ring | tree | random");
    cmd_genmap->add_option("--size", gm_size, "node count (side length for grid)");
    cmd_genmap->add_option("--seed", gm_seed, "generator seed");
    cmd_genmap->add_option("--out", gm_out, "output path")->required();

    auto* cmd_verify = app.add_subcommand("verify-theorems",
                                          "numerical certification on random tabular MDPs");
    int vt_instances = 50, vt_states = 6, vt_actions = 4, vt_trials = 20;
    double vt_gamma = 0.9, vt_alpha = 0.3, vt_beta = 0.5;
    uint64_t vt_seed = 1;
    cmd_verify->add_option("--instances", vt_instances, "random MDP count");
    cmd_verify->add_option("--max-states", vt_states, "max |S|");
    cmd_verify->add_option("--max-actions", vt_actions, "max |A|");
    cmd_verify->add_option("--gamma", vt_gamma, "discount");
    cmd_verify->add_option("--alpha", vt_alpha, "entropy weight");
    cmd_verify->add_option("--beta", vt_beta, "KL weight");
    cmd_verify->add_option("--trials", vt_trials, "contraction trials per instance");
    cmd_verify->add_option("--seed", vt_seed, "seed");

    auto* cmd_gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient checks");
    int gc_draws = 100;
    uint64_t gc_seed = 1;
    cmd_gradcheck->add_option("--draws", gc_draws, "random draws per primitive");
    cmd_gradcheck->add_option("--seed", gc_seed, "seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_train->parsed()) {
            const RunConfig cfg = config_with_overrides(config_path, overrides);
            const RunResult res = run_training(cfg);
            std::printf("run dir: %s\n", res.dir.c_str());
            std::printf("episodes: %d  train steps: %ld\n", res.episodes_run, res.train_steps);
            std::printf("final eval: %s\n", res.final_eval.summary().c_str());
        } else if (cmd_eval->parsed()) {
            const RunConfig cfg = config_with_overrides(config_path, overrides);
            const std::string map = map_path.empty() ? cfg.map_path : map_path;
            const EvalReport er = evaluate_checkpoint(cfg, ckpt, map, episodes, seed);
            std::printf("%s\n", er.summary().c_str());
        } else if (cmd_selfplay->parsed()) {
            const RunConfig cfg = config_with_overrides(config_path, overrides);
            const SelfPlayResult res = self_play(cfg, pi0, sp_eval_episodes, sp_pair_episodes);
            std::printf("run dir: %s\n", res.dir.c_str());
            for (size_t i = 0; i < res.snapshot_episodes.size(); ++i)
                std::printf("snapshot at episode %d: win score vs initial %.4f\n",
                            res.snapshot_episodes[i], res.winrate_vs_initial[i]);
        } else if (cmd_crossmap->parsed()) {
            const RunConfig cfg = config_with_overrides(config_path, overrides);
            const CrossMapResult res = cross_map(cfg, cm_ckpts, cm_maps, cm_episodes, cm_seed);
            std::printf("%s", res.csv.c_str());
            if (!cm_out.empty()) {
                std::FILE* f = std::fopen(cm_out.c_str(), "wb");
                if (!f) throw ConfigError("cannot write " + cm_out);
                std::fputs(res.csv.c_str(), f);
                std::fclose(f);
            }
        } else if (cmd_genmap->parsed()) {
            const Graph g = generate_map(map_kind_from_string(gm_kind), gm_size, gm_seed);
            save_map_file(g, gm_out);
            std::printf("wrote %s: %d nodes, %zu edges\n", gm_out.c_str(), g.node_count(),
                        g.edges().size());
        } else if (cmd_verify->parsed()) {
            const CertificateReport rep = certify_theorems(vt_instances, vt_states, vt_actions,
                                                           vt_gamma, vt_alpha, vt_beta, vt_trials,
                                                           vt_seed);
            std::printf("%s", rep.text().c_str());
            return rep.contraction_ok && rep.improvement_ok && rep.monotone_ok ? 0 : 1;
        } else if (cmd_gradcheck->parsed()) {
            const GradCheckReport rep = gradcheck_primitives(gc_draws, gc_seed);
            std::printf("%s", rep.text().c_str());
            return rep.worst < 1e-4 ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
