#pragma once

#include <string>
#include <utility>
#include <vector>

#include "arac/game.hpp"
#include "arac/mat.hpp"
#include "arac/rng.hpp"
#include "arac/tape.hpp"

namespace arac {

struct NetConfig {
    int feature_width = 0;  // f, from the scenario
    int embed_dim = 64;     // d
    int encoder_layers = 6;
    int decoder_layers = 1;
    int heads = 8;
    int ff_mult = 4;
    int critic_hidden = 128;

    void validate() const;
    std::string canonical() const;
};

// Named, shaped parameter arrays for the shared encoder/decoder trunk, the
// pointer actor, both critic heads, plus the log_alpha/log_beta scalars.
struct ParameterSet {
    NetConfig net;
    std::vector<std::pair<std::string, Mat>> entries;

    Mat& find(const std::string& name);
    const Mat& find(const std::string& name) const;
    double log_alpha() const { return find("log_alpha").v[0]; }
    double log_beta() const { return find("log_beta").v[0]; }
    void set_log_alpha(double x) { find("log_alpha").v[0] = x; }
    void set_log_beta(double x) { find("log_beta").v[0] = x; }
};

// uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)); layer-norm gain 1, bias 0
ParameterSet init_params(const NetConfig& cfg, Rng& rng, double alpha_init, double beta_init);

// Parameter leaves created once per tape so batch gradients accumulate.
struct BoundParams {
    const ParameterSet* set = nullptr;
    std::vector<Ref> refs;  // parallel to set->entries

    Ref of(const std::string& name) const;
};
BoundParams bind_params(Tape& t, const ParameterSet& ps);

// L blocks of masked multi-head self-attention with residual + layer norm
// and a position-wise feed-forward, after a linear input projection.
// The mask is the adjacency with a forced-true diagonal.
Ref encode(Tape& t, const BoundParams& p, const Mat& features, const BoolMat& adjacency);

// Agent-centric context: one unmasked multi-head attention layer queried by
// the embedding of node c.
Ref decode(Tape& t, const BoundParams& p, Ref h_hat, int c);

struct Candidate {
    ActionId action;
    int key_node = 0;  // move target, or the attacked agent's current node
};

std::vector<Candidate> make_candidates(const GameState& s, const std::vector<ActionId>& legal);

// Pointer distribution over the candidates, indexed identically to them.
Ref actor_distribution(Tape& t, const BoundParams& p, Ref h_hat, Ref h_tilde, int c,
                       const std::vector<Candidate>& candidates);

struct CriticInput {
    int node = 0;
    std::vector<int> neighbor_nodes;
    std::vector<int> opponent_nodes;  // alive opponents' positions
    Candidate action;
};

Ref critic_q(Tape& t, const BoundParams& p, int head, Ref h_hat, Ref h_tilde,
             const CriticInput& in);

struct VdnRefs {
    std::vector<Ref> per_agent;
    Ref joint;
};

// Per-agent Qs summed left to right; the joint is exactly that sum.
VdnRefs critic_q_vdn(Tape& t, const BoundParams& p, int head, Ref h_hat,
                     const std::vector<Ref>& h_tildes, const std::vector<CriticInput>& inputs);

uint64_t params_digest(const ScenarioConfig& scen, const NetConfig& net);

void save_checkpoint(const ParameterSet& ps, uint64_t digest, const std::string& path);
struct Checkpoint {
    ParameterSet params;
    uint64_t digest = 0;
};
Checkpoint load_checkpoint(const std::string& path);

}  // namespace arac
