#include "arac/game.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "arac/errors.hpp"

namespace arac {

void ScenarioConfig::validate() const {
    if (team_size < 1) throw ConfigError("team_size must be positive");
    if (max_steps < 1) throw ConfigError("max_steps must be >= 1");
    if (scenario == Scenario::Confrontation) {
        if (initial_hp < 1) throw ConfigError("initial_hp must be positive");
        if (attack_range < 0) throw ConfigError("attack_range must be non-negative");
        if (base_damage < 1) throw ConfigError("base_damage must be positive");
    }
    for (double r : {r_capture, r_kill, r_all_kill})
        if (!std::isfinite(r)) throw ConfigError("rewards must be finite");
}

std::string ScenarioConfig::canonical() const {
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "scenario=%s;m=%d;hp=%d;range=%d;dmg=%d;max_steps=%d;r_capture=%.17g;"
                  "r_kill=%.17g;r_all_kill=%.17g",
                  scenario == Scenario::Pursuit ? "pursuit" : "confrontation", team_size,
                  initial_hp, attack_range, base_damage, max_steps, r_capture, r_kill, r_all_kill);
    return buf;
}

Team team_of(const ScenarioConfig& cfg, int agent) {
    return agent < cfg.num_ours() ? Team::Ours : Team::Theirs;
}

GameState reset(const ScenarioConfig& cfg, const Graph& g, const DistanceMatrix& d, Rng& rng) {
    cfg.validate();
    const int agents = cfg.num_agents();
    std::vector<int> eligible;
    for (int v = 0; v < g.node_count(); ++v)
        if (g.degree(v) > 0) eligible.push_back(v);
    if (static_cast<int>(eligible.size()) < agents)
        throw PlacementImpossible("need " + std::to_string(agents) + " non-isolated nodes, have " +
                                  std::to_string(eligible.size()));

    constexpr int kMaxTries = 10000;
    for (int attempt = 0; attempt < kMaxTries; ++attempt) {
        std::vector<int> picks = rng.sample_distinct(static_cast<int>(eligible.size()), agents);
        GameState s;
        s.positions.resize(agents);
        for (int i = 0; i < agents; ++i) s.positions[i] = eligible[picks[i]];
        if (cfg.scenario == Scenario::Pursuit) {
            // no instant capture: every pursuer starts more than 1 hop away
            const int ev = s.positions[cfg.num_ours()];
            bool ok = true;
            for (int i = 0; i < cfg.num_ours(); ++i) {
                const int de = d.dist(s.positions[i], ev);
                if (de != DistanceMatrix::kUnreachable && de <= 1) ok = false;
            }
            if (!ok) continue;
        }
        s.hp.assign(agents, cfg.scenario == Scenario::Confrontation ? cfg.initial_hp : 1);
        s.alive.assign(agents, 1);
        s.step = 0;
        s.terminal = false;
        s.winner = Winner::None;
        return s;
    }
    throw PlacementImpossible("no spawn with pursuer-evader distance > 1 found");
}

std::vector<ActionId> legal_actions(const ScenarioConfig& cfg, const Graph& g,
                                    const DamageMatrix& dm, const GameState& s, int agent) {
    if (agent < 0 || agent >= cfg.num_agents())
        throw UnknownAgent("agent " + std::to_string(agent));
    std::vector<ActionId> acts;
    if (!s.alive[agent]) {
        acts.push_back(ActionId::move(s.positions[agent]));  // NoOp
        return acts;
    }
    const int pos = s.positions[agent];
    for (int nb : g.neighbors(pos)) acts.push_back(ActionId::move(nb));
    if (cfg.scenario == Scenario::Confrontation) {
        const bool ours = team_of(cfg, agent) == Team::Ours;
        const int lo = ours ? cfg.num_ours() : 0;
        const int hi = ours ? cfg.num_agents() : cfg.num_ours();
        for (int j = lo; j < hi; ++j)
            if (s.alive[j] && dm.at(pos, s.positions[j]) > 0.0)
                acts.push_back(ActionId::attack(j));
        if (acts.empty()) acts.push_back(ActionId::move(pos));  // isolated, nothing in range
    }
    return acts;
}

bool action_is_legal(const ScenarioConfig& cfg, const Graph& g, const DamageMatrix& dm,
                     const GameState& s, int agent, const ActionId& a) {
    const auto acts = legal_actions(cfg, g, dm, s, agent);
    return std::find(acts.begin(), acts.end(), a) != acts.end();
}

DamageMatrix damage_potential(const Graph& g, const DistanceMatrix& d, const ScenarioConfig& cfg) {
    DamageMatrix dm;
    dm.n = g.node_count();
    dm.dmg.assign(static_cast<size_t>(dm.n) * dm.n, 0.0);
    for (int u = 0; u < dm.n; ++u)
        for (int v = 0; v < dm.n; ++v) {
            const int dist = d.dist(u, v);
            if (dist != DistanceMatrix::kUnreachable && dist <= cfg.attack_range)
                dm.dmg[static_cast<size_t>(u) * dm.n + v] = cfg.base_damage;
        }
    return dm;
}

StepResult step(const ScenarioConfig& cfg, const Graph& g, const DistanceMatrix& d,
                const DamageMatrix& dm, const GameState& s, const std::vector<ActionId>& ours,
                const std::vector<ActionId>& theirs) {
    if (s.terminal) throw SteppingTerminalState("state is terminal");
    if (static_cast<int>(ours.size()) != cfg.num_ours() ||
        static_cast<int>(theirs.size()) != cfg.num_theirs())
        throw IllegalAction("joint action sizes disagree with the scenario");

    std::vector<ActionId> joint(ours);
    joint.insert(joint.end(), theirs.begin(), theirs.end());
    for (int i = 0; i < cfg.num_agents(); ++i)
        if (!action_is_legal(cfg, g, dm, s, i, joint[i]))
            throw IllegalAction("agent " + std::to_string(i) + " action is illegal");

    GameState n = s;
    n.step = s.step + 1;
    for (int i = 0; i < cfg.num_agents(); ++i)
        if (joint[i].kind == ActionId::Kind::Move) n.positions[i] = joint[i].target;

    double reward = 0.0;
    if (cfg.scenario == Scenario::Pursuit) {
        const int ev = n.positions[cfg.num_ours()];
        for (int i = 0; i < cfg.num_ours(); ++i) {
            const int de = d.dist(n.positions[i], ev);
            if (de != DistanceMatrix::kUnreachable && de <= 1) {
                n.terminal = true;
                n.winner = Winner::Ours;
                reward = cfg.r_capture;
                break;
            }
        }
    } else {
        // all damage lands simultaneously on post-move positions
        std::vector<int> damage(cfg.num_agents(), 0);
        for (int i = 0; i < cfg.num_agents(); ++i) {
            if (joint[i].kind != ActionId::Kind::Attack) continue;
            const int tgt = joint[i].target;
            const double hit = dm.at(n.positions[i], n.positions[tgt]);
            damage[tgt] += static_cast<int>(hit);
        }
        int our_deaths = 0, their_deaths = 0;
        for (int i = 0; i < cfg.num_agents(); ++i) {
            if (!n.alive[i] || damage[i] == 0) continue;
            n.hp[i] = std::max(0, n.hp[i] - damage[i]);
            if (n.hp[i] == 0) {
                n.alive[i] = 0;
                (team_of(cfg, i) == Team::Ours ? our_deaths : their_deaths) += 1;
            }
        }
        reward = cfg.r_kill * (their_deaths - our_deaths);
        const auto alive_count = [&](Team t) {
            int c = 0;
            for (int i = 0; i < cfg.num_agents(); ++i)
                if (team_of(cfg, i) == t && n.alive[i]) ++c;
            return c;
        };
        const int ours_alive = alive_count(Team::Ours);
        const int theirs_alive = alive_count(Team::Theirs);
        if (theirs_alive == 0) reward += cfg.r_all_kill;
        if (ours_alive == 0) reward -= cfg.r_all_kill;
        if (theirs_alive == 0 || ours_alive == 0) {
            n.terminal = true;
            if (theirs_alive == 0 && ours_alive > 0)
                n.winner = Winner::Ours;
            else if (ours_alive == 0 && theirs_alive > 0)
                n.winner = Winner::Opponent;
            else
                n.winner = Winner::Timeout;  // mutual elimination, a draw
        }
    }

    if (!n.terminal && n.step >= cfg.max_steps) {
        n.terminal = true;
        n.winner = Winner::Timeout;
    }
    const bool term = n.terminal;
    return {std::move(n), reward, term};
}

FeatureMatrix featurize(const GameState& s, const DistanceMatrix& d, const DamageMatrix& dm,
                        const ScenarioConfig& cfg, Team perspective) {
    const int n = d.node_count();
    const int agents = cfg.num_agents();
    FeatureMatrix fm;
    fm.cols_per_agent = cfg.cols_per_agent();
    fm.agent_order.reserve(agents);
    if (perspective == Team::Ours) {
        for (int i = 0; i < agents; ++i) fm.agent_order.push_back(i);
    } else {
        for (int i = cfg.num_ours(); i < agents; ++i) fm.agent_order.push_back(i);
        for (int i = 0; i < cfg.num_ours(); ++i) fm.agent_order.push_back(i);
    }
    fm.values.resize(n, agents * fm.cols_per_agent);
    const double diam = std::max(1, d.diameter());
    for (int b = 0; b < agents; ++b) {
        const int k = fm.agent_order[b];
        const int c0 = b * fm.cols_per_agent;
        const bool dead = !s.alive[k];
        for (int i = 0; i < n; ++i) {
            double dist_val = 1.0;
            if (!dead) {
                const int dk = d.dist(s.positions[k], i);
                dist_val = dk == DistanceMatrix::kUnreachable
                               ? 1.0
                               : std::min(1.0, static_cast<double>(dk) / diam);
            }
            fm.values.at(i, c0) = dist_val;
            if (cfg.scenario == Scenario::Confrontation) {
                const double dmg_val =
                    dead ? 0.0 : dm.at(s.positions[k], i) / static_cast<double>(cfg.base_damage);
                fm.values.at(i, c0 + 1) = std::min(1.0, std::max(0.0, dmg_val));
                fm.values.at(i, c0 + 2) =
                    std::min(1.0, std::max(0.0, static_cast<double>(s.hp[k]) / cfg.initial_hp));
                fm.values.at(i, c0 + 3) = s.alive[k] ? 1.0 : 0.0;
            }
        }
    }
    return fm;
}

GameState swap_teams(const ScenarioConfig& cfg, const GameState& s) {
    if (cfg.scenario != Scenario::Confrontation)
        throw ConfigError("swap_teams requires the confrontation scenario");
    GameState w = s;
    const int m = cfg.num_ours();
    for (int i = 0; i < m; ++i) {
        std::swap(w.positions[i], w.positions[m + i]);
        std::swap(w.hp[i], w.hp[m + i]);
        std::swap(w.alive[i], w.alive[m + i]);
    }
    if (w.winner == Winner::Ours)
        w.winner = Winner::Opponent;
    else if (w.winner == Winner::Opponent)
        w.winner = Winner::Ours;
    return w;
}

bool is_success(const ScenarioConfig& cfg, const GameState& final_state) {
    return final_state.terminal && final_state.winner == Winner::Ours;
}

World::World(Graph graph, const ScenarioConfig& cfg)
    : g(std::move(graph)), dist(g), dmg(damage_potential(g, dist, cfg)) {
    const int n = g.node_count();
    adjacency = BoolMat(n, n, false);
    for (int v = 0; v < n; ++v) {
        adjacency.set(v, v, true);  // a node always attends to itself
        for (int nb : g.neighbors(v)) adjacency.set(v, nb, true);
    }
}

static void append_actions(std::ostringstream& os, const std::vector<ActionId>& acts) {
    for (size_t i = 0; i < acts.size(); ++i) {
        if (i) os << ",";
        os << (acts[i].kind == ActionId::Kind::Move ? 'm' : 'a') << acts[i].target;
    }
}

std::string format_episode_header(uint64_t hash, const ScenarioConfig& cfg, uint64_t seed) {
    std::ostringstream os;
    os << "maphash " << std::hex << hash << std::dec << "\n"
       << "cfg " << cfg.canonical() << "\n"
       << "seed " << seed << "\n";
    return os.str();
}

std::string format_episode_step(int t, const std::vector<ActionId>& ours,
                                const std::vector<ActionId>& theirs, double reward) {
    std::ostringstream os;
    os << "t=" << t << " ours=";
    append_actions(os, ours);
    os << " theirs=";
    append_actions(os, theirs);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", reward);
    os << " r=" << buf << "\n";
    return os.str();
}

}  // namespace arac
