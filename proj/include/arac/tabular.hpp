#pragma once

#include <string>
#include <vector>

#include "arac/rng.hpp"

namespace arac {

// Small explicit MDP for numerical certification of the regularized
// Bellman operator's contraction and the policy-improvement guarantee.
struct TabularMDP {
    int states = 0, actions = 0;
    std::vector<double> p;  // [s][a][s'], rows sum to 1
    std::vector<double> r;  // [s][a]
    double gamma = 0.9;

    double trans(int s, int a, int s2) const {
        return p[(static_cast<size_t>(s) * actions + a) * states + s2];
    }
    double reward(int s, int a) const { return r[static_cast<size_t>(s) * actions + a]; }
    void validate() const;
};

struct TabularPolicy {
    int states = 0, actions = 0;
    std::vector<double> pi;  // [s][a], rows sum to 1

    double at(int s, int a) const { return pi[static_cast<size_t>(s) * actions + a]; }
    double& at(int s, int a) { return pi[static_cast<size_t>(s) * actions + a]; }
    void validate() const;
};

// Omega_s(pi) = alpha H(pi(.|s)) - beta KL(ref(.|s) || pi(.|s))
struct RegularizerSpec {
    double alpha = 0.0;
    double beta = 0.0;
    TabularPolicy ref;

    double omega(const TabularPolicy& pi, int s) const;
};

using QTable = std::vector<double>;  // [s][a]
using VTable = std::vector<double>;  // [s]

// One application of the policy-dependent regularized Bellman operator.
QTable bellman_apply(const QTable& q, const TabularPolicy& pi, const TabularMDP& mdp,
                     const RegularizerSpec& reg);

// Exact Q^pi via the linear system for V^pi with Omega folded in.
VTable evaluate_policy_exact(const TabularMDP& mdp, const TabularPolicy& pi,
                             const RegularizerSpec& reg);
QTable q_from_v(const TabularMDP& mdp, const VTable& v);

// Max over random Q pairs of |T Q1 - T Q2|_inf / |Q1 - Q2|_inf.
double contraction_check(const TabularMDP& mdp, const TabularPolicy& pi,
                         const RegularizerSpec& reg, int trials, Rng& rng);

// Per-state maximizer of E_mu[Q(s,.)] + alpha H(mu) - beta KL(ref||mu) over
// the simplex. Closed forms at alpha=0/beta=0 boundaries, exponentiated
// gradient ascent otherwise (objective tolerance 1e-10, cap 1e5 iterations).
TabularPolicy improve_policy(const QTable& q, const TabularMDP& mdp, const RegularizerSpec& reg);

struct PolicyIterationResult {
    TabularPolicy policy;
    VTable values;
    std::vector<VTable> trace;  // V^{pi_k} per iteration
    int iterations = 0;
};

// Alternate exact evaluation and improvement until |V_{k+1}-V_k|_inf < 1e-9.
PolicyIterationResult policy_iteration(const TabularMDP& mdp, const RegularizerSpec& reg,
                                       int max_iterations = 500);

TabularMDP random_mdp(int states, int actions, double gamma, Rng& rng);
TabularPolicy random_policy(int states, int actions, Rng& rng);  // full support

struct CertificateReport {
    uint64_t seed = 0;
    int instances = 0;
    double max_contraction_ratio = 0.0;
    double min_improvement_margin = 0.0;
    double max_monotonicity_violation = 0.0;
    int max_iterations = 0;
    bool contraction_ok = false, improvement_ok = false, monotone_ok = false;

    std::string text() const;
};

// Runs the full certification over random instances (Theorems 1 and 2).
CertificateReport certify_theorems(int instances, int max_states, int max_actions, double gamma,
                                   double alpha, double beta, int contraction_trials,
                                   uint64_t seed);

}  // namespace arac
