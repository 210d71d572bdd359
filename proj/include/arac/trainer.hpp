#pragma once

#include <cmath>
#include <vector>

#include "arac/game.hpp"
#include "arac/nets.hpp"
#include "arac/reference.hpp"

namespace arac {

struct Coefficients {
    double log_alpha = std::log(0.2);
    double log_beta = 0.0;  // beta = 1
    double target_entropy_factor = 0.05;  // Hbar = factor * log(|A|) per agent per state
    double target_kl = 1.0;
    double tau = 0.005;
    double gamma = 0.99;
    double lr = 1e-5;
    double coef_lr = 1e-5;
    bool kl_stat_sum = false;  // dual KL statistic: per-agent mean unless set

    double alpha() const { return std::exp(log_alpha); }
    double beta() const { return std::exp(log_beta); }
};

enum class TrainerMode { Arac, Brac, Bc, Ref };

struct Transition {
    GameState s;
    std::vector<ActionId> ours;
    double reward = 0.0;
    GameState s2;
    bool terminal = false;
};

class ReplayBuffer {
  public:
    explicit ReplayBuffer(size_t capacity) : cap_(capacity) {}

    void push(Transition t) {
        if (data_.size() < cap_) {
            data_.push_back(std::move(t));
        } else {
            data_[next_] = std::move(t);
        }
        next_ = (next_ + 1) % cap_;
    }
    size_t size() const { return data_.size(); }
    size_t capacity() const { return cap_; }
    const Transition& at(size_t i) const { return data_[i]; }

    // uniform without replacement within the batch
    std::vector<const Transition*> sample(int batch, Rng& rng) const;

  private:
    size_t cap_;
    size_t next_ = 0;
    std::vector<Transition> data_;
};

struct JointTerms {
    double entropy = 0.0;
    double kl = 0.0;
    std::vector<double> agent_entropy;
    std::vector<double> agent_kl;
};

// Joint policy factorizes over agents, so entropies and KLs add.
JointTerms joint_terms(const std::vector<std::vector<double>>& dists,
                       const std::vector<ReferenceDistribution>& refs);

struct DualStats {
    double entropy = 0.0;  // measured per-agent mean entropy
    double hbar = 0.0;     // matching per-agent mean target
    double kl = 0.0;       // KL statistic (mean or sum per Coefficients)
};

// Plain gradient step on the dual objectives in log space, so the sign of
// each coefficient move always matches the constraint violation.
Coefficients dual_update(const DualStats& stats, const Coefficients& c, bool update_alpha,
                         bool update_beta);

void soft_update(ParameterSet& target, const ParameterSet& online, double tau);

ReferenceDistribution reference_for(const ScenarioConfig& cfg, const World& w, const GameState& s,
                                    int agent);

// One forward evaluation of a team's policy heads at a state.
struct AgentEval {
    int agent = 0;
    int node = 0;
    std::vector<Candidate> candidates;
    Ref h_tilde;
    Ref dist;  // 1 x |candidates|
};
struct TeamEval {
    Ref h_hat;
    std::vector<AgentEval> agents;  // alive agents of the team
};
TeamEval eval_team(Tape& t, const BoundParams& p, const ScenarioConfig& cfg, const World& w,
                   const GameState& s, Team team);

CriticInput critic_input_for(const ScenarioConfig& cfg, const World& w, const GameState& s,
                             int agent, const Candidate& action);

// ---- loss builders -------------------------------------------------------
// Targets and Q tables are computed without gradients and enter the losses
// as constants; the builders differentiate exactly what the updates use.

std::vector<double> critic_targets(Tape& scratch, const ScenarioConfig& cfg, const World& w,
                                   const ParameterSet& online, const ParameterSet& target,
                                   const Coefficients& c, bool disable_kl,
                                   const std::vector<const Transition*>& batch, Rng& rng);

struct CriticLossRefs {
    Ref loss1, loss2, total;
};
CriticLossRefs build_critic_loss(Tape& t, const BoundParams& p, const ScenarioConfig& cfg,
                                 const World& w, const std::vector<const Transition*>& batch,
                                 const std::vector<double>& targets);

// per state, per alive agent, per candidate: min over the two online critics
using QTables = std::vector<std::vector<std::vector<double>>>;
QTables policy_q_tables(Tape& scratch, const ScenarioConfig& cfg, const World& w,
                        const ParameterSet& ps, const std::vector<const GameState*>& states);

struct PolicyLossBuild {
    Ref loss;
    DualStats stats;
};
PolicyLossBuild build_policy_loss(Tape& t, const BoundParams& p, const ScenarioConfig& cfg,
                                  const World& w, const std::vector<const GameState*>& states,
                                  const QTables& qt, const Coefficients& c, bool disable_kl);

Ref build_bc_loss(Tape& t, const BoundParams& p, const ScenarioConfig& cfg, const World& w,
                  const std::vector<const GameState*>& states);

// ---- optimizer -----------------------------------------------------------

class Adam {
  public:
    Adam(const ParameterSet& ps, const std::vector<std::string>& prefixes);
    void step(ParameterSet& ps, const Tape& t, const BoundParams& bound, double lr);

  private:
    std::vector<int> picked_;  // entry indices
    std::vector<Mat> m_, v_;
    long t_ = 0;
};

struct TrainMetrics {
    bool applied = false;
    double critic1_loss = NAN, critic2_loss = NAN, policy_loss = NAN;
    double alpha = NAN, beta = NAN;
    double entropy = NAN, kl = NAN, hbar = NAN;
};

class Trainer {
  public:
    Trainer(const ScenarioConfig& cfg, const World& w, const NetConfig& net,
            const Coefficients& coeffs, TrainerMode mode, uint64_t seed, int batch_size,
            size_t buffer_capacity, bool disable_kl);

    // sample batch -> critic step -> policy step -> alpha -> beta -> soft update
    TrainMetrics train_step();

    // our-team joint action at a state (dead agents act NoOp)
    std::vector<ActionId> act(const GameState& s, bool greedy, Rng& rng);

    ReplayBuffer& buffer() { return buffer_; }
    ParameterSet& params() { return params_; }
    const ParameterSet& target_params() const { return target_; }
    const Coefficients& coeffs() const { return coeffs_; }
    TrainerMode mode() const { return mode_; }
    bool kl_disabled() const { return disable_kl_; }
    void load_params(const ParameterSet& ps);

  private:
    const ScenarioConfig cfg_;
    const World& world_;
    TrainerMode mode_;
    bool disable_kl_;
    int batch_size_;
    Coefficients coeffs_;
    ParameterSet params_;
    ParameterSet target_;
    ReplayBuffer buffer_;
    Adam adam_critic_;
    Adam adam_policy_;
    Rng rng_;
    Tape tape_;
    Tape scratch_;
};

}  // namespace arac
