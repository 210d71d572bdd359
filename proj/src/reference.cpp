#include "arac/reference.hpp"

#include <algorithm>
#include <string>

#include "arac/errors.hpp"

namespace arac {

namespace {

constexpr int kSensingRange = 2;

int as_far(int dist, int n) { return dist == DistanceMatrix::kUnreachable ? n + 1 : dist; }

ReferenceDistribution onehot_at(const std::vector<ActionId>& acts, const ActionId& a) {
    ReferenceDistribution r;
    r.probs.assign(acts.size(), 0.0);
    for (size_t i = 0; i < acts.size(); ++i)
        if (acts[i] == a) {
            r.probs[i] = 1.0;
            return r;
        }
    throw NoLegalAction("reference action is not legal");
}

}  // namespace

ReferenceDistribution pursuit_reference(const ScenarioConfig& cfg, const Graph& g,
                                        const DamageMatrix& dm, const GameState& s, int agent,
                                        const DistanceMatrix& d) {
    if (cfg.scenario != Scenario::Pursuit || team_of(cfg, agent) != Team::Ours)
        throw UnknownAgent("pursuit_reference expects a pursuer");
    const auto acts = legal_actions(cfg, g, dm, s, agent);
    if (acts.empty()) throw NoLegalAction("pursuer has no moves");
    const int ev = s.positions[cfg.num_ours()];
    const int n = g.node_count();
    int best = 0;
    int best_dist = as_far(d.dist(acts[0].target, ev), n);
    for (size_t i = 1; i < acts.size(); ++i) {
        const int di = as_far(d.dist(acts[i].target, ev), n);
        if (di < best_dist) {
            best = static_cast<int>(i);
            best_dist = di;
        }
    }
    ReferenceDistribution r;
    r.probs.assign(acts.size(), 0.0);
    r.probs[best] = 1.0;
    return r;
}

ReferenceDistribution confrontation_reference(const ScenarioConfig& cfg, const Graph& g,
                                              const DamageMatrix& dm, const GameState& s,
                                              int agent, const DistanceMatrix& d) {
    if (cfg.scenario != Scenario::Confrontation) throw UnknownAgent("confrontation only");
    if (!s.alive[agent]) throw NoLegalAction("agent is dead");
    const auto acts = legal_actions(cfg, g, dm, s, agent);
    const bool ours = team_of(cfg, agent) == Team::Ours;
    const int lo = ours ? cfg.num_ours() : 0;
    const int hi = ours ? cfg.num_agents() : cfg.num_ours();
    const int pos = s.positions[agent];
    const int n = g.node_count();

    int target = -1, target_dist = n + 2;
    int sensed = -1, sensed_dist = n + 2;
    for (int j = lo; j < hi; ++j) {
        if (!s.alive[j]) continue;
        const int dj = as_far(d.dist(pos, s.positions[j]), n);
        if (dj < target_dist) {
            target = j;
            target_dist = dj;
        }
        if (dj <= kSensingRange && dm.at(pos, s.positions[j]) > 0.0 && dj < sensed_dist) {
            sensed = j;
            sensed_dist = dj;
        }
    }
    if (target == -1) throw NoLegalAction("no living enemies; episode should be terminal");

    if (sensed != -1) return onehot_at(acts, ActionId::attack(sensed));

    // no attack available: step toward the nearest living enemy
    const auto& nbs = g.neighbors(pos);
    if (nbs.empty()) return onehot_at(acts, ActionId::move(pos));  // NoOp
    int best_nb = nbs[0];
    int best_dist = as_far(d.dist(nbs[0], s.positions[target]), n);
    for (size_t i = 1; i < nbs.size(); ++i) {
        const int di = as_far(d.dist(nbs[i], s.positions[target]), n);
        if (di < best_dist) {
            best_nb = nbs[i];
            best_dist = di;
        }
    }
    return onehot_at(acts, ActionId::move(best_nb));
}

ActionId evader_heuristic(const ScenarioConfig& cfg, const Graph& g, const GameState& s,
                          const DistanceMatrix& d) {
    if (cfg.scenario != Scenario::Pursuit) throw UnknownAgent("pursuit only");
    const int ev = cfg.num_ours();
    const auto& nbs = g.neighbors(s.positions[ev]);
    if (nbs.empty()) return ActionId::move(s.positions[ev]);
    const int n = g.node_count();
    int best_nb = nbs[0], best_score = -1;
    for (int nb : nbs) {
        int score = n + 1;
        for (int p = 0; p < cfg.num_ours(); ++p)
            score = std::min(score, as_far(d.dist(nb, s.positions[p]), n));
        if (score > best_score) {
            best_score = score;
            best_nb = nb;
        }
    }
    return ActionId::move(best_nb);
}

}  // namespace arac
