#include "arac/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "arac/errors.hpp"
#include "arac/mapgen.hpp"

namespace fs = std::filesystem;

namespace arac {

namespace {

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

constexpr char kMetricsHeader[] =
    "episode,step,critic1_loss,critic2_loss,policy_loss,alpha,beta,entropy,kl,success_rate_eval\n";

void write_metrics_row(std::ofstream& f, int episode, long step, const TrainMetrics& m,
                       double last_eval) {
    f << episode << "," << step << "," << fmt(m.critic1_loss) << "," << fmt(m.critic2_loss) << ","
      << fmt(m.policy_loss) << "," << fmt(m.alpha) << "," << fmt(m.beta) << "," << fmt(m.entropy)
      << "," << fmt(m.kl) << "," << fmt(last_eval) << "\n";
}

uint64_t eval_seed_for(uint64_t master, int episode) {
    return fnv1a64(&episode, sizeof(episode), master ^ 0xE7A1u);
}

}  // namespace

RunResult run_training(const RunConfig& cfg) {
    cfg.scenario.validate();
    const Graph g = load_map_file(cfg.map_path);
    const World world(g, cfg.scenario);
    const uint64_t digest = params_digest(cfg.scenario, cfg.net_config());

    fs::create_directories(cfg.out_dir);
    {
        std::ofstream f(cfg.out_dir + "/config.txt", std::ios::binary);
        f << cfg.canonical();
    }

    RunResult res;
    res.dir = cfg.out_dir;
    res.metrics_path = cfg.out_dir + "/metrics.csv";
    res.checkpoint_path = cfg.out_dir + "/checkpoint_final.bin";

    if (cfg.trainer_mode() == TrainerMode::Ref) {
        // scripted rollout only: constant-policy evaluation, nothing to train
        res.final_eval = evaluate_teams(cfg.scenario, world, reference_team_policy(cfg.scenario, world),
                                        scripted_opponent(cfg.scenario, world), cfg.eval_episodes,
                                        eval_seed_for(cfg.seed, 0));
        res.best_eval = res.final_eval.success_rate;
        std::ofstream f(cfg.out_dir + "/eval_report.txt", std::ios::binary);
        f << res.final_eval.summary() << "\n";
        std::ofstream mf(res.metrics_path, std::ios::binary);
        mf << kMetricsHeader;
        return res;
    }

    Trainer trainer(cfg.scenario, world, cfg.net_config(), cfg.coefficients(), cfg.trainer_mode(),
                    cfg.seed, cfg.batch_size, static_cast<size_t>(cfg.buffer_size),
                    cfg.disable_kl);
    const TeamPolicy opponent = scripted_opponent(cfg.scenario, world);

    std::ofstream mf(res.metrics_path, std::ios::binary);
    mf << kMetricsHeader;

    long global_step = 0;
    double last_eval = NAN;
    double best = -1.0;
    int episodes_run = 0;
    bool stopped = false;
    for (int ep = 1; ep <= cfg.episodes && !stopped; ++ep) {
        Rng ep_rng = Rng::stream(cfg.seed, static_cast<uint64_t>(ep));
        GameState s = reset(cfg.scenario, world.g, world.dist, ep_rng);
        while (!s.terminal) {
            const auto ours = trainer.act(s, false, ep_rng);
            const auto theirs = opponent(s, ep_rng);
            StepResult r = step(cfg.scenario, world.g, world.dist, world.dmg, s, ours, theirs);
            trainer.buffer().push({s, ours, r.reward, r.next, r.terminal});
            s = std::move(r.next);
            ++global_step;
            if (global_step % cfg.update_every == 0) {
                const TrainMetrics m = trainer.train_step();
                if (m.applied) {
                    ++res.train_steps;
                    write_metrics_row(mf, ep, global_step, m, last_eval);
                }
            }
        }
        episodes_run = ep;
        if (ep % cfg.eval_every == 0) {
            const EvalReport er = evaluate_policy(cfg.scenario, world, trainer.params(),
                                                  cfg.eval_episodes, eval_seed_for(cfg.seed, ep));
            last_eval = er.success_rate;
            if (er.success_rate > best) {
                best = er.success_rate;
                save_checkpoint(trainer.params(), digest, cfg.out_dir + "/checkpoint_best.bin");
            }
            if (cfg.stop_at_success > 0.0 && er.success_rate >= cfg.stop_at_success) stopped = true;
        }
    }

    res.final_eval = evaluate_policy(cfg.scenario, world, trainer.params(), cfg.eval_episodes,
                                     eval_seed_for(cfg.seed, episodes_run + 1000000));
    res.best_eval = std::max(best, res.final_eval.success_rate);
    res.episodes_run = episodes_run;
    save_checkpoint(trainer.params(), digest, res.checkpoint_path);
    {
        std::ofstream f(cfg.out_dir + "/eval_report.txt", std::ios::binary);
        f << res.final_eval.summary() << "\n";
    }
    return res;
}

EvalReport evaluate_checkpoint(const RunConfig& cfg, const std::string& checkpoint_path,
                               const std::string& map_path, int episodes, uint64_t seed) {
    const Checkpoint ck = load_checkpoint(checkpoint_path);
    NetConfig expect = cfg.net_config();
    if (ck.params.net.feature_width != expect.feature_width)
        throw IncompatibleCheckpoint("checkpoint feature width " +
                                     std::to_string(ck.params.net.feature_width) +
                                     " does not fit scenario width " +
                                     std::to_string(expect.feature_width));
    const Graph g = load_map_file(map_path);
    const World world(g, cfg.scenario);
    return evaluate_policy(cfg.scenario, world, ck.params, episodes, seed);
}

SelfPlayResult self_play(const RunConfig& cfg, const std::string& initial_checkpoint,
                         int eval_episodes_vs_initial, int pair_episodes) {
    if (cfg.scenario.scenario != Scenario::Confrontation)
        throw ConfigError("self-play requires the confrontation scenario");
    cfg.scenario.validate();
    const Graph g = load_map_file(cfg.map_path);
    const World world(g, cfg.scenario);
    const uint64_t digest = params_digest(cfg.scenario, cfg.net_config());

    fs::create_directories(cfg.out_dir + "/snapshots");
    Trainer trainer(cfg.scenario, world, cfg.net_config(), cfg.coefficients(), cfg.trainer_mode(),
                    cfg.seed, cfg.batch_size, static_cast<size_t>(cfg.buffer_size),
                    cfg.disable_kl);
    if (!initial_checkpoint.empty()) {
        const Checkpoint ck = load_checkpoint(initial_checkpoint);
        if (ck.digest != digest) throw IncompatibleCheckpoint("initial checkpoint digest mismatch");
        trainer.load_params(ck.params);
    }
    const ParameterSet initial = trainer.params();

    SelfPlayResult res;
    res.dir = cfg.out_dir;
    res.pair_episodes = pair_episodes;

    auto archive = [&](int episode, const ParameterSet& ps) {
        char name[64];
        std::snprintf(name, sizeof(name), "/snapshots/snapshot_%06d.bin", episode);
        save_checkpoint(ps, digest, cfg.out_dir + name);
        res.snapshot_episodes.push_back(episode);
    };
    std::vector<ParameterSet> snapshots;
    snapshots.push_back(initial);
    archive(0, initial);

    std::ofstream curve(cfg.out_dir + "/winrate_vs_initial.csv", std::ios::binary);
    curve << "episode,win_score,wins,losses,draws\n";
    auto eval_vs_initial = [&](int episode) {
        const EvalReport er = evaluate_match(cfg.scenario, world, trainer.params(), initial,
                                             eval_episodes_vs_initial,
                                             eval_seed_for(cfg.seed, episode));
        res.winrate_vs_initial.push_back(er.win_score());
        curve << episode << "," << fmt(er.win_score()) << "," << er.wins << "," << er.losses << ","
              << er.draws << "\n";
    };
    eval_vs_initial(0);

    // opponent holds the last snapshot, refreshed every 100 episodes exactly
    auto opponent_params = std::make_shared<ParameterSet>(initial);
    const TeamPolicy opponent =
        net_team_policy(cfg.scenario, world, opponent_params, Team::Theirs, false);

    std::ofstream mf(cfg.out_dir + "/metrics.csv", std::ios::binary);
    mf << kMetricsHeader;
    long global_step = 0;
    for (int ep = 1; ep <= cfg.episodes; ++ep) {
        Rng ep_rng = Rng::stream(cfg.seed, static_cast<uint64_t>(ep));
        GameState s = reset(cfg.scenario, world.g, world.dist, ep_rng);
        while (!s.terminal) {
            const auto ours = trainer.act(s, false, ep_rng);
            const auto theirs = opponent(s, ep_rng);
            StepResult r = step(cfg.scenario, world.g, world.dist, world.dmg, s, ours, theirs);
            trainer.buffer().push({s, ours, r.reward, r.next, r.terminal});
            s = std::move(r.next);
            ++global_step;
            if (global_step % cfg.update_every == 0) {
                const TrainMetrics m = trainer.train_step();
                if (m.applied) write_metrics_row(mf, ep, global_step, m, NAN);
            }
        }
        if (ep % kSelfPlayRefreshEpisodes == 0) {
            *opponent_params = trainer.params();
            snapshots.push_back(trainer.params());
            archive(ep, trainer.params());
            eval_vs_initial(ep);
        }
    }

    // pairwise win matrix over the archived snapshots
    const size_t k = snapshots.size();
    res.wins.assign(k, std::vector<int>(k, 0));
    res.draws.assign(k, std::vector<int>(k, 0));
    for (size_t i = 0; i < k; ++i)
        for (size_t j = i; j < k; ++j) {
            const EvalReport er =
                evaluate_match(cfg.scenario, world, snapshots[i], snapshots[j], pair_episodes,
                               fnv1a64(&j, sizeof(j), cfg.seed ^ (0xABCDu + i)));
            res.wins[i][j] = er.wins;
            res.wins[j][i] = er.losses;
            res.draws[i][j] = er.draws;
            res.draws[j][i] = er.draws;
            if (i == j) {
                // self-match: the diagonal entry keeps its own wins/losses split
                res.wins[i][i] = er.wins;
            }
        }
    std::ofstream pm(cfg.out_dir + "/pairwise_matrix.csv", std::ios::binary);
    pm << "i,j,episode_i,episode_j,wins_i,wins_j,draws,episodes\n";
    for (size_t i = 0; i < k; ++i)
        for (size_t j = 0; j < k; ++j)
            pm << i << "," << j << "," << res.snapshot_episodes[i] << ","
               << res.snapshot_episodes[j] << "," << res.wins[i][j] << "," << res.wins[j][i] << ","
               << res.draws[i][j] << "," << pair_episodes << "\n";
    return res;
}

CrossMapResult cross_map(const RunConfig& cfg, const std::vector<std::string>& checkpoints,
                         const std::vector<std::string>& maps, int episodes, uint64_t seed) {
    CrossMapResult res;
    res.map_paths = maps;
    res.checkpoint_paths = checkpoints;
    res.success.assign(maps.size(), std::vector<double>(checkpoints.size(), 0.0));
    std::string csv = "test_map";
    for (const auto& c : checkpoints) csv += "," + c;
    csv += "\n";
    for (size_t mi = 0; mi < maps.size(); ++mi) {
        csv += maps[mi];
        for (size_t ci = 0; ci < checkpoints.size(); ++ci) {
            const EvalReport er = evaluate_checkpoint(cfg, checkpoints[ci], maps[mi], episodes,
                                                      fnv1a64(&mi, sizeof(mi), seed + ci));
            res.success[mi][ci] = er.success_rate;
            csv += "," + fmt(er.success_rate);
        }
        csv += "\n";
    }
    res.csv = csv;
    return res;
}

std::string GradCheckReport::text() const {
    std::string out;
    for (const auto& [name, err] : per_primitive) {
        out += name + ": " + fmt(err) + "\n";
    }
    out += "worst: " + fmt(worst) + "\n";
    return out;
}

GradCheckReport gradcheck_primitives(int draws, uint64_t seed) {
    GradCheckReport rep;
    Rng rng(seed);
    const double eps = 1e-5;
    auto rand_mat = [&](int r, int c) {
        Mat m(r, c);
        for (auto& x : m.v) x = rng.next_double(-1.5, 1.5);
        return m;
    };
    auto record = [&](const std::string& name, double err) {
        auto it = std::find_if(rep.per_primitive.begin(), rep.per_primitive.end(),
                               [&](const auto& p) { return p.first == name; });
        if (it == rep.per_primitive.end())
            rep.per_primitive.emplace_back(name, err);
        else
            it->second = std::max(it->second, err);
        rep.worst = std::max(rep.worst, err);
    };

    for (int d = 0; d < draws; ++d) {
        const Mat a = rand_mat(3, 4);
        const Mat b = rand_mat(4, 3);
        const Mat c34 = rand_mat(3, 4);
        const Mat c32 = rand_mat(3, 2);
        const Mat g14 = rand_mat(1, 4);
        const Mat b14 = rand_mat(1, 4);
        const Mat k54 = rand_mat(5, 4);
        const Mat v54 = rand_mat(5, 4);
        BoolMat mask(3, 4);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 4; ++j) mask.set(i, j, rng.next_double() < 0.6);
        for (int i = 0; i < 3; ++i) mask.set(i, rng.next_int(4), true);  // no fully masked row
        BoolMat attn_mask(3, 5);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 5; ++j) attn_mask.set(i, j, rng.next_double() < 0.7);
        for (int i = 0; i < 3; ++i) attn_mask.set(i, rng.next_int(5), true);
        Mat pos = rand_mat(3, 4);
        for (auto& x : pos.v) x = 0.5 + std::abs(x);  // keep log well-conditioned

        record("matmul",
               grad_check([&](Tape& t, Ref x) { return t.mean_all(t.matmul(x, t.input(b))); }, a, eps));
        record("add",
               grad_check([&](Tape& t, Ref x) { return t.mean_all(t.add(x, t.input(c34))); }, a, eps));
        record("multiply",
               grad_check([&](Tape& t, Ref x) { return t.mean_all(t.mul(x, t.input(c34))); }, a, eps));
        record("masked_softmax",
               grad_check([&](Tape& t, Ref x) { return t.mean_all(t.masked_softmax_rows(x, &mask)); },
                          a, eps));
        record("layer_norm",
               grad_check(
                   [&](Tape& t, Ref x) {
                       return t.mean_all(t.layer_norm_rows(x, t.input(g14), t.input(b14)));
                   },
                   a, eps));
        record("relu", grad_check([&](Tape& t, Ref x) { return t.mean_all(t.relu(x)); }, a, eps));
        record("concat",
               grad_check([&](Tape& t, Ref x) { return t.mean_all(t.concat_cols({x, t.input(c32)})); },
                          a, eps));
        record("gather_rows",
               grad_check([&](Tape& t, Ref x) { return t.mean_all(t.gather_rows(x, {2, 0, 2})); }, a,
                          eps));
        record("reduce_sum", grad_check([&](Tape& t, Ref x) { return t.sum_all(x); }, a, eps));
        record("reduce_mean", grad_check([&](Tape& t, Ref x) { return t.mean_all(x); }, a, eps));
        record("log", grad_check([&](Tape& t, Ref x) { return t.mean_all(t.log(x)); }, pos, eps));
        record("exp", grad_check([&](Tape& t, Ref x) { return t.mean_all(t.exp(x)); }, a, eps));
        record("masked_attention",
               grad_check(
                   [&](Tape& t, Ref x) {
                       return t.mean_all(
                           masked_attention(t, x, t.input(k54), t.input(v54), &attn_mask).output);
                   },
                   a, eps));
    }
    return rep;
}

}  // namespace arac
