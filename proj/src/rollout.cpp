#include "arac/rollout.hpp"

#include <cstdio>

#include "arac/errors.hpp"

namespace arac {

namespace {

int sample_index(const std::vector<double>& probs, Rng& rng) {
    const double u = rng.next_double();
    double acc = 0.0;
    for (size_t i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size()) - 1;
}

}  // namespace

TeamPolicy scripted_opponent(const ScenarioConfig& cfg, const World& w) {
    if (cfg.scenario == Scenario::Pursuit) {
        return [&cfg, &w](const GameState& s, Rng&) {
            return std::vector<ActionId>{evader_heuristic(cfg, w.g, s, w.dist)};
        };
    }
    return [&cfg, &w](const GameState& s, Rng&) {
        std::vector<ActionId> joint(cfg.num_theirs());
        for (int k = 0; k < cfg.num_theirs(); ++k) {
            const int agent = cfg.num_ours() + k;
            if (!s.alive[agent]) {
                joint[k] = ActionId::move(s.positions[agent]);
                continue;
            }
            const ReferenceDistribution ref = confrontation_reference(cfg, w.g, w.dmg, s, agent,
                                                                      w.dist);
            const auto acts = legal_actions(cfg, w.g, w.dmg, s, agent);
            joint[k] = acts[ref.onehot_index()];
        }
        return joint;
    };
}

TeamPolicy net_team_policy(const ScenarioConfig& cfg, const World& w,
                           std::shared_ptr<const ParameterSet> ps, Team side, bool greedy) {
    auto tape = std::make_shared<Tape>();
    return [&cfg, &w, ps, side, greedy, tape](const GameState& s, Rng& rng) {
        tape->reset();
        const BoundParams p = bind_params(*tape, *ps);
        const TeamEval ev = eval_team(*tape, p, cfg, w, s, side);
        const int lo = side == Team::Ours ? 0 : cfg.num_ours();
        const int count = side == Team::Ours ? cfg.num_ours() : cfg.num_theirs();
        std::vector<ActionId> joint(count);
        for (int k = 0; k < count; ++k) joint[k] = ActionId::move(s.positions[lo + k]);
        for (const AgentEval& ae : ev.agents) {
            const Mat& probs = tape->value(ae.dist);
            int pick = 0;
            if (greedy) {
                for (int i = 1; i < probs.cols; ++i)
                    if (probs.v[i] > probs.v[pick]) pick = i;
            } else {
                pick = sample_index(probs.v, rng);
            }
            joint[ae.agent - lo] = ae.candidates[pick].action;
        }
        return joint;
    };
}

TeamPolicy random_team_policy(const ScenarioConfig& cfg, const World& w, Team side) {
    return [&cfg, &w, side](const GameState& s, Rng& rng) {
        const int lo = side == Team::Ours ? 0 : cfg.num_ours();
        const int count = side == Team::Ours ? cfg.num_ours() : cfg.num_theirs();
        std::vector<ActionId> joint(count);
        for (int k = 0; k < count; ++k) {
            const auto acts = legal_actions(cfg, w.g, w.dmg, s, lo + k);
            joint[k] = acts[rng.next_int(static_cast<int>(acts.size()))];
        }
        return joint;
    };
}

TeamPolicy reference_team_policy(const ScenarioConfig& cfg, const World& w) {
    return [&cfg, &w](const GameState& s, Rng&) {
        std::vector<ActionId> joint(cfg.num_ours());
        for (int agent = 0; agent < cfg.num_ours(); ++agent) {
            if (!s.alive[agent]) {
                joint[agent] = ActionId::move(s.positions[agent]);
                continue;
            }
            const ReferenceDistribution ref =
                cfg.scenario == Scenario::Pursuit
                    ? pursuit_reference(cfg, w.g, w.dmg, s, agent, w.dist)
                    : confrontation_reference(cfg, w.g, w.dmg, s, agent, w.dist);
            const auto acts = legal_actions(cfg, w.g, w.dmg, s, agent);
            joint[agent] = acts[ref.onehot_index()];
        }
        return joint;
    };
}

EpisodeOutcome run_episode(const ScenarioConfig& cfg, const World& w, const TeamPolicy& ours,
                           const TeamPolicy& theirs, Rng& rng, std::vector<Transition>* sink,
                           std::string* log, uint64_t log_seed) {
    GameState s = reset(cfg, w.g, w.dist, rng);
    if (log) *log = format_episode_header(map_hash(w.g), cfg, log_seed);
    EpisodeOutcome out;
    while (!s.terminal) {
        const auto our_joint = ours(s, rng);
        const auto their_joint = theirs(s, rng);
        StepResult r = step(cfg, w.g, w.dist, w.dmg, s, our_joint, their_joint);
        if (log) *log += format_episode_step(s.step, our_joint, their_joint, r.reward);
        if (sink) sink->push_back({s, our_joint, r.reward, r.next, r.terminal});
        out.our_return += r.reward;
        ++out.steps;
        s = std::move(r.next);
    }
    out.success = is_success(cfg, s);
    out.final_state = std::move(s);
    return out;
}

std::string EvalReport::summary() const {
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "episodes=%d success_rate=%.17g wins=%d losses=%d draws=%d seed=%llu", episodes,
                  success_rate, wins, losses, draws, static_cast<unsigned long long>(seed));
    return buf;
}

EvalReport evaluate_teams(const ScenarioConfig& cfg, const World& w, const TeamPolicy& ours,
                          const TeamPolicy& theirs, int episodes, uint64_t seed) {
    EvalReport rep;
    rep.episodes = episodes;
    rep.seed = seed;
    int successes = 0;
    for (int e = 0; e < episodes; ++e) {
        Rng rng = Rng::stream(seed, static_cast<uint64_t>(e));
        const EpisodeOutcome out = run_episode(cfg, w, ours, theirs, rng);
        const bool success = out.success;
        rep.outcomes.push_back(success ? 1 : 0);
        successes += success ? 1 : 0;
        if (out.final_state.winner == Winner::Ours)
            ++rep.wins;
        else if (out.final_state.winner == Winner::Opponent)
            ++rep.losses;
        else
            ++rep.draws;
    }
    rep.success_rate = static_cast<double>(successes) / static_cast<double>(episodes);
    return rep;
}

EvalReport evaluate_policy(const ScenarioConfig& cfg, const World& w, const ParameterSet& ps,
                           int episodes, uint64_t seed) {
    auto shared = std::make_shared<const ParameterSet>(ps);
    return evaluate_teams(cfg, w, net_team_policy(cfg, w, shared, Team::Ours, true),
                          scripted_opponent(cfg, w), episodes, seed);
}

EvalReport evaluate_match(const ScenarioConfig& cfg, const World& w, const ParameterSet& ours,
                          const ParameterSet& theirs, int episodes, uint64_t seed) {
    auto po = std::make_shared<const ParameterSet>(ours);
    auto pt = std::make_shared<const ParameterSet>(theirs);
    return evaluate_teams(cfg, w, net_team_policy(cfg, w, po, Team::Ours, true),
                          net_team_policy(cfg, w, pt, Team::Theirs, true), episodes, seed);
}

}  // namespace arac
